#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace deephazard {

// Right-continuous step function: value_at(t) is values[k] for the largest
// knot[k] <= t, initial_value before the first knot (0 for cumulative hazards,
// 1 for survival estimates), and held at the last value beyond the final knot.
struct StepFunction {
  std::vector<double> knots;
  std::vector<double> values;
  double initial_value = 0.0;

  StepFunction() = default;
  StepFunction(std::vector<double> k, std::vector<double> v)
      : knots(std::move(k)), values(std::move(v)) {
    if (knots.size() != values.size())
      throw std::invalid_argument("StepFunction: knots/values length mismatch");
    for (std::size_t i = 1; i < knots.size(); ++i)
      if (!(knots[i] > knots[i - 1]))
        throw std::invalid_argument("StepFunction: knots must be strictly increasing");
  }

  double value_at(double t) const {
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    if (it == knots.begin()) return initial_value;
    return values[static_cast<std::size_t>(it - knots.begin() - 1)];
  }
};

}  // namespace deephazard
