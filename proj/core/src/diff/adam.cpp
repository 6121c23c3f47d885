#include "ntfa/diff/adam.hpp"

#include <cmath>

#include "ntfa/error.hpp"

namespace ntfa::diff {

void adam_step(Tensor& param, const Tensor& grad, AdamSlot& state, double lr,
               const AdamHyper& hyper) {
  if (param.shape() != grad.shape()) {
    throw DimensionError("adam: parameter " + shape_string(param.shape()) + " vs gradient " +
                         shape_string(grad.shape()));
  }
  if (!(lr > 0.0)) throw ContractError("adam: learning rate must be positive");
  if (state.m.shape() != param.shape() || state.m.size() != param.size()) {
    state.m = Tensor(param.shape(), 0.0);
    state.v = Tensor(param.shape(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

Adam::Adam(double lr, AdamHyper hyper) : lr_(lr), hyper_(hyper) { set_lr(lr); }

void Adam::set_lr(double lr) {
  if (!(lr > 0.0)) throw ContractError("adam: learning rate must be positive");
  lr_ = lr;
}

void Adam::step(std::size_t slot, Tensor& param, const Tensor& grad) {
  if (slot >= slots_.size()) slots_.resize(slot + 1);
  adam_step(param, grad, slots_[slot], lr_, hyper_);
}

}  // namespace ntfa::diff
