#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "gns/tensor/matrix.hpp"

namespace gns {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::uint32_t index() const noexcept { return index_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
};

/// Define-by-run reverse-mode tape.
///
/// Every primitive appends one entry holding its output value, whether any
/// operand needs a gradient, and a closure that pushes the output adjoint
/// into the operand adjoints. Entries are appended in evaluation order, so
/// the list is topologically sorted and `backward` is a single reverse sweep.
///
/// Parameters are registered by address: recording the same `Matrix` twice
/// returns the same leaf, and `gradient(param)` looks it up again after the
/// sweep. The parameter storage must outlive the tape and must not be
/// modified while the tape is in use.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient tracking.
  Var constant(Matrix value);
  /// Owned leaf with gradient tracking.
  Var variable(Matrix value);
  /// Borrowed leaf with gradient tracking (learnable parameter).
  Var parameter(const Matrix& value);

  /// Appends a primitive. `backward` may be empty when no operand needs a
  /// gradient.
  Var record(Matrix value, std::span<const Var> operands, Backward backward);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.index()].requires_grad; }

  /// Adjoint accumulator of `v`, allocated as zeros on first use. Only for
  /// use inside backward closures.
  Matrix& grad_buffer(Var v);

  /// Reverse sweep from a 1x1 `loss`. Throws ContractError for any other
  /// shape or a foreign Var. Adjoints from a previous sweep are cleared.
  void backward(Var loss);

  /// Adjoint of `v` after `backward`; zeros if `v` did not influence the loss.
  Matrix gradient(Var v) const;
  /// Adjoint of a registered parameter; zeros if it was never recorded.
  Matrix gradient(const Matrix& param) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix owned;
    const Matrix* borrowed = nullptr;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
  };

  Var push(Node node);
  void check_owner(Var v, const char* where) const;

  // deque: references to recorded values stay valid as the tape grows.
  std::deque<Node> nodes_;
  std::unordered_map<const Matrix*, std::uint32_t> parameters_;
};

}  // namespace gns
