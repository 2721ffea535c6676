#pragma once

#include "peacock/predictor.hpp"

namespace peacock {

/// A training run that can be advanced one Gibbs iteration at a time and
/// asked for its current model.
class TrainingDriver {
 public:
  virtual ~TrainingDriver() = default;
  virtual int iteration() const = 0;
  virtual void step() = 0;
  virtual FrozenModel frozen_model() const = 0;
};

}  // namespace peacock
