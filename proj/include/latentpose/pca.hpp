#pragma once

#include <cstddef>
#include <span>

#include "latentpose/tensor.hpp"

namespace latentpose {

/// Mean plus k orthonormal principal directions (rows of `components`),
/// ordered by descending explained variance.
struct PcaBasis {
  Vector mean;
  Tensor components;           // [k x D]
  Vector explained_variance;   // length k, non-increasing

  std::size_t rank() const { return components.dim(0); }
  std::size_t dim() const { return components.dim(1); }
  /// Coefficients B (y - mean).
  Vector project(std::span<const double> y) const;
  /// mean + B^T c.
  Vector reconstruct(std::span<const double> coefficients) const;
};

/// Requires 1 <= k <= D and at least k + 1 samples. Variances use the
/// unbiased (n - 1) covariance.
PcaBasis fit_pca(std::span<const Vector> samples, std::size_t k);

}  // namespace latentpose
