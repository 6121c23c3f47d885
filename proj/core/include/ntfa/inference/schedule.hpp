#pragma once

#include <cstddef>
#include <limits>
#include <span>

namespace ntfa::inference {

/// Multiplies the learning rates by `factor` each time the best loss has not
/// improved for `patience` consecutive epochs, then restarts the count.
class PlateauSchedule {
 public:
  PlateauSchedule(std::size_t patience = 100, double factor = 0.5);

  /// Records one epoch's loss.  Returns the multiplier to apply to every
  /// learning rate now: `factor` when the plateau triggers, otherwise 1.
  double observe(double loss);

  double best() const { return best_; }
  std::size_t stale_epochs() const { return stale_; }
  std::size_t decays() const { return decays_; }

 private:
  std::size_t patience_;
  double factor_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
  std::size_t decays_ = 0;
};

/// Replays a loss history through a fresh schedule and returns the final
/// learning-rate multiplier.
double lr_schedule(std::span<const double> history, std::size_t patience = 100,
                   double factor = 0.5);

}  // namespace ntfa::inference
