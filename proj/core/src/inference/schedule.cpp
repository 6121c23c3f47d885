#include "ntfa/inference/schedule.hpp"

#include <cmath>

#include "ntfa/error.hpp"

namespace ntfa::inference {

PlateauSchedule::PlateauSchedule(std::size_t patience, double factor)
    : patience_(patience), factor_(factor) {
  if (patience == 0) throw ContractError("schedule: patience must be positive");
  if (!(factor > 0.0 && factor <= 1.0)) throw ContractError("schedule: factor must be in (0, 1]");
}

double PlateauSchedule::observe(double loss) {
  if (std::isnan(loss)) throw NumericalError("schedule: loss is NaN");
  if (loss < best_) {
    best_ = loss;
    stale_ = 0;
    return 1.0;
  }
  if (++stale_ < patience_) return 1.0;
  stale_ = 0;
  ++decays_;
  return factor_;
}

double lr_schedule(std::span<const double> history, std::size_t patience, double factor) {
  PlateauSchedule schedule(patience, factor);
  double multiplier = 1.0;
  for (double loss : history) multiplier *= schedule.observe(loss);
  return multiplier;
}

}  // namespace ntfa::inference
