#include "ifan/autodiff.hpp"

#include "ifan/error.hpp"

namespace ifan {

const Tensor4& Var::value() const {
  if (!tape) throw ContractError("Var is not bound to a tape");
  return tape->value(*this);
}

Tape::Slot& Tape::slot(Var v) {
  if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= slots_.size()) {
    throw ContractError("Var does not belong to this tape");
  }
  return slots_[static_cast<std::size_t>(v.id)];
}

const Tape::Slot& Tape::slot(Var v) const { return const_cast<Tape*>(this)->slot(v); }

Var Tape::constant(Tensor4 value) {
  slots_.push_back(Slot{std::move(value), false, true, {}, std::nullopt});
  return Var{this, static_cast<int>(slots_.size() - 1)};
}

Var Tape::leaf(Tensor4 value) {
  slots_.push_back(Slot{std::move(value), true, true, {}, std::nullopt});
  return Var{this, static_cast<int>(slots_.size() - 1)};
}

Var Tape::record(Tensor4 value, std::initializer_list<Var> inputs, Adjoint adjoint) {
  bool needs = false;
  for (Var in : inputs) needs = needs || slot(in).requires_grad;
  slots_.push_back(Slot{std::move(value), needs, false, needs ? std::move(adjoint) : Adjoint{}, std::nullopt});
  return Var{this, static_cast<int>(slots_.size() - 1)};
}

const Tensor4& Tape::value(Var v) const { return slot(v).value; }

bool Tape::requires_grad(Var v) const { return slot(v).requires_grad; }

void Tape::accumulate(Var v, const Tensor4& g) {
  Slot& s = slot(v);
  if (!s.requires_grad) return;
  require_same_shape(s.value, g, "gradient accumulation");
  if (s.grad) {
    s.grad->axpy(1.0, g);
  } else {
    s.grad = g;
  }
}

void Tape::accumulate(Var v, Tensor4&& g) {
  Slot& s = slot(v);
  if (!s.requires_grad) return;
  require_same_shape(s.value, g, "gradient accumulation");
  if (s.grad) {
    s.grad->axpy(1.0, g);
  } else {
    s.grad = std::move(g);
  }
}

void Tape::backward(Var loss) {
  if (consumed_) throw ContractError("tape already consumed by a backward pass");
  Slot& root = slot(loss);
  if (root.value.shape() != Shape{1, 1, 1, 1}) {
    throw ContractError("backward requires a scalar (1,1,1,1) loss, got " + root.value.shape().str());
  }
  consumed_ = true;
  if (!root.requires_grad) return;
  root.grad = Tensor4(Shape{}, 1.0);
  for (int id = loss.id; id >= 0; --id) {
    Slot& s = slots_[static_cast<std::size_t>(id)];
    if (s.is_leaf || !s.grad || !s.adjoint) continue;
    Tensor4 g = std::move(*s.grad);
    s.grad.reset();
    s.adjoint(*this, g);
    s.adjoint = nullptr;
  }
}

Tensor4 Tape::grad(Var v) const {
  const Slot& s = slot(v);
  if (s.grad) return *s.grad;
  return Tensor4(s.value.shape());
}

}  // namespace ifan
