#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "latentpose/rng.hpp"
#include "latentpose/tensor.hpp"

namespace latentpose::detail {

/// Fisher-Yates over 0..n-1 driven by `rng`.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  return order;
}

/// Calls fn(first, last) for consecutive mini-batches of `order`.
template <class Fn>
void for_each_batch(const std::vector<std::size_t>& order, std::size_t batch_size,
                    Fn&& fn) {
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    fn(order.begin() + static_cast<std::ptrdiff_t>(start),
       order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
}

inline void scale_all(const std::vector<Tensor*>& tensors, double factor) {
  for (Tensor* t : tensors)
    for (auto& v : t->data()) v *= factor;
}

template <class T>
std::vector<const Tensor*> as_const(const std::vector<T*>& v) {
  return {v.begin(), v.end()};
}

}  // namespace latentpose::detail
