#pragma once

#include <cstdint>
#include <vector>

#include "sgr/rng.hpp"
#include "sgr/sensors.hpp"

namespace sgr {

// Random sensor-dropout policy applied to posterior-fusion inputs during
// training.
struct DropoutPolicy {
  bool enabled = true;
  double mask_value = 0.0;
  std::uint64_t seed = 0;
};

// B x T mask tensor. For each (b,t): draw u ~ Uniform{0..M-1}, rank M random
// reals and mask sensor i iff rank_i < u. Exactly u sensors masked, so at
// least one sensor is always unmasked.
std::vector<std::vector<SensorMask>> dropout_masks(int sensors, int batch,
                                                   int time, Rng& rng);

}  // namespace sgr
