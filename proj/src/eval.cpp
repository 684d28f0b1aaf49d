#include "latentpose/eval.hpp"

#include <cmath>
#include <string>

#include "latentpose/errors.hpp"

namespace latentpose {

double mpjpe(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() % 3 != 0 || truth.size() % 3 != 0)
    throw DimensionError("mpjpe: coordinate count not divisible by 3");
  if (predicted.size() != truth.size()) {
    throw DimensionError("mpjpe: joint counts differ (" + std::to_string(predicted.size() / 3) +
                         " vs " + std::to_string(truth.size() / 3) + ")");
  }
  const std::size_t joints = predicted.size() / 3;
  if (joints == 0) throw DimensionError("mpjpe: no joints");
  double total = 0.0;
  for (std::size_t j = 0; j < joints; ++j) {
    const double dx = predicted[3 * j] - truth[3 * j];
    const double dy = predicted[3 * j + 1] - truth[3 * j + 1];
    const double dz = predicted[3 * j + 2] - truth[3 * j + 2];
    total += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return total / static_cast<double>(joints);
}

double mpjpe(const Pose& predicted, const Pose& truth) {
  return mpjpe(predicted.coords(), truth.coords());
}

Vector limb_lengths(const Pose& pose, const SkeletonModel& model) {
  if (pose.joint_count() != model.joint_count()) {
    throw DimensionError("limb_lengths: pose has " + std::to_string(pose.joint_count()) +
                         " joints, skeleton has " + std::to_string(model.joint_count()));
  }
  Vector lengths;
  lengths.reserve(model.limbs.size());
  for (const auto& limb : model.limbs) {
    const auto p = pose.joint(limb.parent), c = pose.joint(limb.child);
    const double dx = c[0] - p[0], dy = c[1] - p[1], dz = c[2] - p[2];
    lengths.push_back(std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  return lengths;
}

namespace {

Tensor log_ratios(const Vector& lengths) {
  const std::size_t n = lengths.size();
  Vector logs(n);
  for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(lengths[i]);
  Tensor m({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = logs[i] - logs[j];
  return m;
}

}  // namespace

LimbRatioMatrix log_ratio_matrix(const Pose& pose, const SkeletonModel& model) {
  const Vector lengths = limb_lengths(pose, model);
  for (std::size_t i = 0; i < lengths.size(); ++i)
    if (!(lengths[i] > 0.0))
      throw DomainError("log_ratio_matrix: limb " + model.limbs[i].name + " has zero length");
  LimbRatioMatrix r;
  for (const auto& limb : model.limbs) r.limbs.push_back(limb.name);
  r.values = log_ratios(lengths);
  return r;
}

RatioErrors ratio_error_matrix(std::span<const Pose> predictions,
                               std::span<const Pose> truths,
                               const SkeletonModel& model) {
  if (predictions.size() != truths.size()) {
    throw DimensionError("ratio_error_matrix: " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(truths.size()) + " truths");
  }
  if (predictions.empty()) throw DimensionError("ratio_error_matrix: no samples");
  const std::size_t n = model.limbs.size();
  RatioErrors r{Tensor({n, n}), {}};
  for (std::size_t s = 0; s < predictions.size(); ++s) {
    Vector predicted = limb_lengths(predictions[s], model);
    Vector truth = limb_lengths(truths[s], model);
    bool flagged = false;
    for (auto* lengths : {&predicted, &truth}) {
      for (auto& l : *lengths) {
        if (l < kMinLimbLength) {
          l = kMinLimbLength;
          flagged = true;
        }
      }
    }
    if (flagged) r.flagged_samples.push_back(s);
    const Tensor a = log_ratios(predicted), b = log_ratios(truth);
    for (std::size_t i = 0; i < a.size(); ++i) r.matrix[i] += std::abs(a[i] - b[i]);
  }
  for (auto& v : r.matrix.data()) v /= static_cast<double>(predictions.size());
  return r;
}

double partition_sum(const Tensor& error_matrix, std::span<const std::size_t> limbs) {
  if (error_matrix.rank() != 2 || error_matrix.dim(0) != error_matrix.dim(1))
    throw DimensionError("partition_sum: error matrix must be square");
  const std::size_t n = error_matrix.dim(0);
  for (auto l : limbs)
    if (l >= n) throw DimensionError("partition_sum: limb index " + std::to_string(l) + " out of range");
  double total = 0.0;
  for (auto i : limbs)
    for (auto j : limbs)
      if (i != j) total += error_matrix(i, j);
  return total / 2.0;
}

PartitionSums partition_sums(const Tensor& error_matrix,
                             const BodyPartitions& partitions) {
  std::vector<std::size_t> all(error_matrix.rank() == 2 ? error_matrix.dim(0) : 0);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return {partition_sum(error_matrix, partitions.lower),
          partition_sum(error_matrix, partitions.upper),
          partition_sum(error_matrix, all)};
}

EvalReport evaluate_method(const std::string& method,
                           std::span<const Pose> predictions,
                           std::span<const Pose> truths,
                           std::span<const std::string> actions,
                           const SkeletonModel& model) {
  if (actions.size() != truths.size())
    throw DimensionError("evaluate_method: one action label per sample required");
  EvalReport report;
  report.method = method;
  RatioErrors ratios = ratio_error_matrix(predictions, truths, model);
  report.ratio_errors = std::move(ratios.matrix);
  report.flagged_samples = std::move(ratios.flagged_samples);
  report.sums = partition_sums(report.ratio_errors, model.partitions);
  std::map<std::string, std::pair<double, std::size_t>> per_action;
  double total = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const double e = mpjpe(predictions[i], truths[i]);
    total += e;
    auto& acc = per_action[actions[i]];
    acc.first += e;
    ++acc.second;
  }
  report.overall_mpjpe = total / static_cast<double>(truths.size());
  for (const auto& [action, acc] : per_action)
    report.action_mpjpe[action] = acc.first / static_cast<double>(acc.second);
  return report;
}

}  // namespace latentpose
