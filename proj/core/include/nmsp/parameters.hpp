#pragma once

#include <string>
#include <vector>

#include "nmsp/rng.hpp"
#include "nmsp/tensor.hpp"

namespace nmsp {

struct NamedParameter {
  std::string name;
  Tensor* tensor;
};

// Stable, ordered view over a model's trainable tensors. Order defines
// checkpoint layout and optimizer state layout.
using ParameterList = std::vector<NamedParameter>;

// Trainable tensor filled from N(0, stddev²).
Tensor normal_parameter(Shape shape, double stddev, Rng& rng);

void zero_grads(const ParameterList& params);

}  // namespace nmsp
