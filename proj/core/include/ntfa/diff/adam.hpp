#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ntfa/diff/tensor.hpp"

namespace ntfa::diff {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moments and step count of one parameter tensor.
struct AdamSlot {
  Tensor m;
  Tensor v;
  std::int64_t step = 0;
};

/// Adam with bias-corrected moments.  Each parameter tensor owns a slot with
/// its own step counter, so tensors that receive no gradient in a step are
/// left untouched (sparse minibatch updates).
class Adam {
 public:
  explicit Adam(double lr, AdamHyper hyper = {});

  double lr() const { return lr_; }
  void set_lr(double lr);
  const AdamHyper& hyper() const { return hyper_; }

  /// Applies one update to `param` using slot `slot`.
  void step(std::size_t slot, Tensor& param, const Tensor& grad);

  const AdamSlot& slot(std::size_t i) const { return slots_.at(i); }
  std::size_t slot_count() const { return slots_.size(); }

 private:
  double lr_;
  AdamHyper hyper_;
  std::vector<AdamSlot> slots_;
};

/// Functional form: one Adam update of `param` given `grad`, mutating `state`.
void adam_step(Tensor& param, const Tensor& grad, AdamSlot& state, double lr,
               const AdamHyper& hyper = {});

}  // namespace ntfa::diff
