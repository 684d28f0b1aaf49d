#include "latentpose/pca.hpp"

#include <Eigen/Eigenvalues>
#include <string>

#include "latentpose/errors.hpp"

namespace latentpose {

Vector PcaBasis::project(std::span<const double> y) const {
  if (y.size() != dim()) throw DimensionError("pca project: length mismatch");
  Vector c(rank(), 0.0);
  for (std::size_t r = 0; r < rank(); ++r)
    for (std::size_t d = 0; d < dim(); ++d) c[r] += components(r, d) * (y[d] - mean[d]);
  return c;
}

Vector PcaBasis::reconstruct(std::span<const double> coefficients) const {
  if (coefficients.size() != rank())
    throw DimensionError("pca reconstruct: coefficient count mismatch");
  Vector y = mean;
  for (std::size_t r = 0; r < rank(); ++r)
    for (std::size_t d = 0; d < dim(); ++d) y[d] += components(r, d) * coefficients[r];
  return y;
}

PcaBasis fit_pca(std::span<const Vector> samples, std::size_t k) {
  if (samples.empty()) throw ParameterError("fit_pca: no samples");
  const std::size_t dim = samples.front().size();
  if (k < 1 || k > dim) {
    throw ParameterError("fit_pca: k must lie in [1, " + std::to_string(dim) +
                         "], got " + std::to_string(k));
  }
  if (samples.size() < k + 1) {
    throw ParameterError("fit_pca: need at least " + std::to_string(k + 1) +
                         " samples, got " + std::to_string(samples.size()));
  }
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd data(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (s.size() != dim) throw DimensionError("fit_pca: inconsistent sample lengths");
    for (Eigen::Index j = 0; j < d; ++j) data(i, j) = s[static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DomainError("fit_pca: eigensolver failed");

  PcaBasis basis;
  basis.mean.assign(mean.data(), mean.data() + d);
  basis.components = Tensor({k, dim});
  basis.explained_variance.resize(k);
  // Eigen returns ascending eigenvalues.
  for (std::size_t r = 0; r < k; ++r) {
    const Eigen::Index col = d - 1 - static_cast<Eigen::Index>(r);
    basis.explained_variance[r] = std::max(0.0, solver.eigenvalues()(col));
    auto v = solver.eigenvectors().col(col);
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    const double sign = v(pivot) < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index j = 0; j < d; ++j)
      basis.components(r, static_cast<std::size_t>(j)) = sign * v(j);
  }
  return basis;
}

}  // namespace latentpose
