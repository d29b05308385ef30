#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nmsp/tensor.hpp"

namespace nmsp {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  friend bool operator==(const Var& a, const Var& b) { return a.graph_ == b.graph_ && a.id_ == b.id_; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in execution order; backward walks
// them once in reverse and sums leaf gradients into the bound parameters.
//
// A graph is single-use: after backward() it must be reset() before another
// backward pass, otherwise GraphError is thrown.
class Graph {
 public:
  // Reads the node's output gradient and adds contributions to its parents.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  // record_gradients=false builds an inference-only tape (no closures kept).
  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf bound to a parameter; the tensor must outlive the graph. Repeated
  // calls with the same tensor return the same node.
  Var param(Tensor& p);
  Var constant(Tensor value);

  // Kernel entry point: appends a node computed from `parents`.
  Var record(const char* op, Tensor value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(const char* op, Tensor value, const std::vector<Var>& parents, BackwardFn backward);

  const Tensor& value(std::size_t id) const;
  const char* op(std::size_t id) const { return nodes_.at(id).op; }
  const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_.at(id).parents; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  // Gradient buffer of a node, zero-filled on first access.
  std::vector<double>& grad(std::size_t id);
  const std::vector<double>* find_grad(std::size_t id) const;

  void backward(Var loss);
  void reset();

  std::size_t size() const noexcept { return nodes_.size(); }
  bool recording() const noexcept { return record_; }
  bool consumed() const noexcept { return consumed_; }

 private:
  struct Node {
    const char* op = "";
    Tensor value;
    Tensor* external = nullptr;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    std::vector<double> grad;
    bool needs_grad = false;
  };

  Var append(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> param_nodes_;
  bool record_;
  bool consumed_ = false;
};

// Test fixture hook: while alive, the upstream gradient entering every node
// whose op name equals `op` is multiplied by `factor` during backward. Used to
// prove the gradient checker notices a broken rule.
class ScopedGradientFault {
 public:
  ScopedGradientFault(std::string op, double factor);
  ~ScopedGradientFault();
  ScopedGradientFault(const ScopedGradientFault&) = delete;
  ScopedGradientFault& operator=(const ScopedGradientFault&) = delete;

 private:
  struct Fault {
    std::string op;
    double factor;
  };
  std::optional<Fault> previous_;

  friend class Graph;
  static std::optional<Fault>& active();
};

}  // namespace nmsp
