#include "nmsp/graph.hpp"

#include <algorithm>
#include <cstring>

#include "nmsp/errors.hpp"

namespace nmsp {

const Tensor& Var::value() const {
  if (!graph_) throw GraphError("use of an unbound Var");
  return graph_->value(id_);
}

Var Graph::append(const char* op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.parents = std::move(parents);
  if (record_) {
    node.needs_grad = std::any_of(node.parents.begin(), node.parents.end(),
                                  [this](std::size_t p) { return nodes_[p].needs_grad; });
    if (node.needs_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Tensor& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.op = "param";
  node.external = &p;
  node.needs_grad = record_ && p.requires_grad();
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) { return append("constant", std::move(value), {}, nullptr); }

Var Graph::record(const char* op, Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  return record(op, std::move(value), std::vector<Var>(parents), std::move(backward));
}

Var Graph::record(const char* op, Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
  std::vector<std::size_t> ids;
  ids.reserve(parents.size());
  for (const Var& v : parents) {
    if (&v.graph() != this) throw GraphError(std::string(op) + ": operand belongs to another graph");
    ids.push_back(v.id());
  }
  return append(op, std::move(value), std::move(ids), std::move(backward));
}

const Tensor& Graph::value(std::size_t id) const {
  const Node& node = nodes_.at(id);
  return node.external ? *node.external : node.value;
}

std::vector<double>& Graph::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(value(id).size(), 0.0);
  return node.grad;
}

const std::vector<double>* Graph::find_grad(std::size_t id) const {
  const Node& node = nodes_.at(id);
  return node.grad.empty() ? nullptr : &node.grad;
}

void Graph::backward(Var loss) {
  if (!record_) throw GraphError("backward on an inference-only graph");
  if (!loss.valid() || &loss.graph() != this) throw GraphError("loss does not belong to this graph");
  if (consumed_) throw GraphError("backward called twice on the same graph without reset()");
  if (loss.value().size() != 1) {
    throw GraphError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  consumed_ = true;
  if (!nodes_[loss.id()].needs_grad) return;

  const auto& fault = ScopedGradientFault::active();
  grad(loss.id())[0] = 1.0;
  for (std::size_t k = loss.id() + 1; k-- > 0;) {
    Node& node = nodes_[k];
    if (!node.needs_grad || node.grad.empty()) continue;
    if (node.external) {
      auto& target = node.external->mutable_grad();
      for (std::size_t i = 0; i < target.size(); ++i) target[i] += node.grad[i];
      continue;
    }
    if (fault && fault->op == node.op) {
      for (double& g : node.grad) g *= fault->factor;
    }
    if (node.backward) node.backward(*this, k);
  }
}

void Graph::reset() {
  nodes_.clear();
  param_nodes_.clear();
  consumed_ = false;
}

std::optional<ScopedGradientFault::Fault>& ScopedGradientFault::active() {
  thread_local std::optional<Fault> fault;
  return fault;
}

ScopedGradientFault::ScopedGradientFault(std::string op, double factor) : previous_(active()) {
  active() = Fault{std::move(op), factor};
}

ScopedGradientFault::~ScopedGradientFault() { active() = previous_; }

}  // namespace nmsp
