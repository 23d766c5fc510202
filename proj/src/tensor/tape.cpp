#include "gns/tensor/tape.hpp"

#include <string>

#include "gns/errors.hpp"

namespace gns {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractError("Var: use of an unbound variable");
  return tape_->value(*this);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check_owner(Var v, const char* where) const {
  if (v.tape_ != this || v.index_ >= nodes_.size()) {
    throw ContractError(std::string(where) + ": variable belongs to another tape");
  }
}

Var Tape::constant(Matrix value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Matrix value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(const Matrix& value) {
  if (auto it = parameters_.find(&value); it != parameters_.end()) {
    return Var(this, it->second);
  }
  Node n;
  n.borrowed = &value;
  n.requires_grad = true;
  Var v = push(std::move(n));
  parameters_.emplace(&value, v.index_);
  return v;
}

Var Tape::record(Matrix value, std::span<const Var> operands, Backward backward) {
  Node n;
  n.owned = std::move(value);
  for (const Var& op : operands) {
    check_owner(op, "Tape::record");
    n.requires_grad = n.requires_grad || nodes_[op.index_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Matrix& Tape::value(Var v) const {
  check_owner(v, "Tape::value");
  const Node& n = nodes_[v.index_];
  return n.borrowed != nullptr ? *n.borrowed : n.owned;
}

Matrix& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.index_];
  if (n.grad.empty()) {
    const Matrix& val = n.borrowed != nullptr ? *n.borrowed : n.owned;
    n.grad = Matrix(val.rows(), val.cols());
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  check_owner(loss, "Tape::backward");
  const Matrix& out = value(loss);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ContractError("Tape::backward: loss must be 1x1, got " + out.shape_string());
  }
  for (Node& n : nodes_) n.grad = Matrix();
  if (!nodes_[loss.index_].requires_grad) return;
  grad_buffer(loss)(0, 0) = 1.0;
  for (std::size_t i = loss.index_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    // The closure only writes into operand adjoints, all of which have a
    // smaller index, so this node's adjoint is final here.
    n.backward(*this, n.grad);
  }
}

Matrix Tape::gradient(Var v) const {
  check_owner(v, "Tape::gradient");
  const Node& n = nodes_[v.index_];
  if (!n.grad.empty()) return n.grad;
  const Matrix& val = n.borrowed != nullptr ? *n.borrowed : n.owned;
  return Matrix(val.rows(), val.cols());
}

Matrix Tape::gradient(const Matrix& param) const {
  if (auto it = parameters_.find(&param); it != parameters_.end()) {
    return gradient(Var(const_cast<Tape*>(this), it->second));
  }
  return Matrix(param.rows(), param.cols());
}

}  // namespace gns
