#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nmsp/graph.hpp"

namespace nmsp {

// Builds a scalar loss on the given graph, binding parameters via Graph::param.
// Must be deterministic: it is evaluated many times.
using LossBuilder = std::function<Var(Graph&)>;

struct GradCheckEntry {
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

// Compares backward() gradients of every coordinate of `params` with central
// differences (f(θ+eps) - f(θ-eps)) / (2·eps). Parameter values are restored
// and gradients cleared on return. One entry per parameter, in order.
std::vector<GradCheckEntry> finite_difference_check(const LossBuilder& loss, std::span<Tensor* const> params,
                                                    double eps = 1e-5);

}  // namespace nmsp
