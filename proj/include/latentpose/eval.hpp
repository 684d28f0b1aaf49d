#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "latentpose/pose.hpp"
#include "latentpose/skeleton.hpp"
#include "latentpose/tensor.hpp"

namespace latentpose {

/// Mean over joints of the Euclidean distance (same units as the poses).
double mpjpe(const Pose& predicted, const Pose& truth);
/// Same on raw x y z triples, with no root convention, so whole-body
/// translations are measurable.
double mpjpe(std::span<const double> predicted, std::span<const double> truth);

Vector limb_lengths(const Pose& pose, const SkeletonModel& model);

/// Square matrix over the model's limbs, entry (i, j) = ln(len_i / len_j).
struct LimbRatioMatrix {
  std::vector<std::string> limbs;
  Tensor values;
};

/// Throws DomainError naming the limb when any length is zero.
LimbRatioMatrix log_ratio_matrix(const Pose& pose, const SkeletonModel& model);

/// Lengths below this are clamped before taking logarithms in
/// ratio_error_matrix, and the sample is flagged.
inline constexpr double kMinLimbLength = 1e-6;

struct RatioErrors {
  Tensor matrix;  // per-cell mean |predicted - truth| log-ratio
  std::vector<std::size_t> flagged_samples;
};

RatioErrors ratio_error_matrix(std::span<const Pose> predictions,
                               std::span<const Pose> truths,
                               const SkeletonModel& model);

struct PartitionSums {
  double lower = 0.0;
  double upper = 0.0;
  double full = 0.0;
};

/// Sum of off-diagonal cells whose row and column limbs both lie in
/// `limbs`, halved so each unordered pair counts once.
double partition_sum(const Tensor& error_matrix, std::span<const std::size_t> limbs);
PartitionSums partition_sums(const Tensor& error_matrix,
                             const BodyPartitions& partitions);

/// Evaluation of one method on a labelled test set.
struct EvalReport {
  std::string method;
  std::map<std::string, double> action_mpjpe;  // mm
  double overall_mpjpe = 0.0;
  Tensor ratio_errors;
  PartitionSums sums;
  std::vector<std::size_t> flagged_samples;
};

/// `actions[i]` labels sample i.
EvalReport evaluate_method(const std::string& method,
                           std::span<const Pose> predictions,
                           std::span<const Pose> truths,
                           std::span<const std::string> actions,
                           const SkeletonModel& model);

}  // namespace latentpose
