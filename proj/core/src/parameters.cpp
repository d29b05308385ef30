#include "nmsp/parameters.hpp"

namespace nmsp {

Tensor normal_parameter(Shape shape, double stddev, Rng& rng) {
  Tensor t = parameter(std::move(shape));
  for (double& v : t.values()) v = rng.normal(0.0, stddev);
  return t;
}

void zero_grads(const ParameterList& params) {
  for (const auto& p : params) p.tensor->clear_grad();
}

}  // namespace nmsp
