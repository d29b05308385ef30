#include "nmsp/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "nmsp/errors.hpp"

namespace nmsp {

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

std::vector<GradCheckEntry> finite_difference_check(const LossBuilder& loss, std::span<Tensor* const> params,
                                                    double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite_difference_check: eps must be positive");

  for (Tensor* p : params) p->clear_grad();
  {
    Graph g;
    g.backward(loss(g));
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor* p : params) {
    analytic.push_back(p->grad() ? *p->grad() : std::vector<double>(p->size(), 0.0));
    p->clear_grad();
  }

  auto evaluate = [&loss] {
    Graph g(false);
    return loss(g).value().item();
  };

  std::vector<GradCheckEntry> report(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    GradCheckEntry& entry = report[k];
    entry.coordinates = p.size();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double up = evaluate();
      p[i] = saved - eps;
      const double down = evaluate();
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double rel = relative_error(analytic[k][i], numeric);
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(analytic[k][i] - numeric));
      if (rel > entry.max_relative_error) {
        entry.max_relative_error = rel;
        entry.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace nmsp
