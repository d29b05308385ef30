#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nmsp/graph.hpp"
#include "nmsp/rng.hpp"

namespace nmsp {

// Differentiable kernels. Every function records one node on the operands'
// graph. Matrices are row-major; rank-1 operands act as a single row.

Var matmul(Var a, Var b);           // [m×k]·[k×p]
Var transpose(Var a);
Var add(Var a, Var b);              // same shape
Var mul(Var a, Var b);              // elementwise, same shape
Var scale(Var a, double factor);
Var add_row(Var x, Var bias);       // [n×d] + [d], bias broadcast over rows
Var affine(Var x, Var weight, Var bias);  // x·W + b
Var sigmoid(Var x);
Var tanh(Var x);
Var gelu(Var x);                    // exact erf form
Var softmax_rows(Var x);
Var layer_norm(Var x, Var gain, Var bias, double eps);
// Inverted dropout. Returns x itself when !training or rate == 0.
Var dropout(Var x, double rate, bool training, Rng& rng);
Var sum(Var x);                     // scalar
// Mean of the rows flagged in `include` (all rows when empty) -> [1×d].
Var mean_rows(Var x, const std::vector<bool>& include = {});
Var repeat_rows(Var row, std::size_t n);   // [1×d] -> [n×d]
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var gather_rows(Var table, std::span<const std::size_t> ids);
Var row_dot(Var a, Var b);          // [n×m],[n×m] -> [n×1]
Var scale_rows(Var gates, Var x);   // [n×1] ⊙ [n×d], gate broadcast across columns

// Mean negative log-likelihood of `targets` under row-wise softmax(logits),
// skipping rows listed in `ignore`. Throws when no row remains.
Var cross_entropy(Var logits, std::span<const std::size_t> targets,
                  std::span<const std::size_t> ignore = {});

// Same quantity without a graph, for evaluation.
double cross_entropy_value(const Tensor& logits, std::span<const std::size_t> targets,
                           std::span<const std::size_t> ignore = {});
Tensor softmax_rows(const Tensor& x);

}  // namespace nmsp
