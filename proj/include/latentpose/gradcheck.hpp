#pragma once

#include <functional>

#include "latentpose/tensor.hpp"

namespace latentpose {

/// Central-difference gradient of a scalar function, one coordinate at a
/// time: (f(x + h e_i) - f(x - h e_i)) / 2h.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double h);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps entries
/// that are both ~0 from dominating.
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-8);

}  // namespace latentpose

namespace latentpose {

/// ||a - b|| / max(||a||, ||b||, floor), Euclidean norms over all entries.
double relative_error(std::span<const double> a, std::span<const double> b,
                      double floor = 1e-12);

}  // namespace latentpose
