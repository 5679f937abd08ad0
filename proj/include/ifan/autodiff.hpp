#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <optional>
#include <vector>

#include "ifan/tensor.hpp"

namespace ifan {

class Tape;

// Handle to a value slot on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor4& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Reverse-mode gradient tape. Operations record their output value together
// with an adjoint rule; backward() replays the rules in reverse order.
// A tape supports exactly one backward pass.
class Tape {
 public:
  using Adjoint = std::function<void(Tape&, const Tensor4& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor4 value);
  Var leaf(Tensor4 value);
  // The output needs a gradient iff some input does; the adjoint is dropped otherwise.
  Var record(Tensor4 value, std::initializer_list<Var> inputs, Adjoint adjoint);

  const Tensor4& value(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return slots_.size(); }

  // Adds g into the gradient of v. No-op when v does not require a gradient.
  void accumulate(Var v, const Tensor4& g);
  void accumulate(Var v, Tensor4&& g);

  // loss must be a (1,1,1,1) tensor.
  void backward(Var loss);
  // Gradient of v after backward(); zeros when v was not reached.
  Tensor4 grad(Var v) const;

 private:
  struct Slot {
    Tensor4 value;
    bool requires_grad = false;
    bool is_leaf = false;
    Adjoint adjoint;
    std::optional<Tensor4> grad;
  };

  Slot& slot(Var v);
  const Slot& slot(Var v) const;

  std::deque<Slot> slots_;
  bool consumed_ = false;
};

}  // namespace ifan
