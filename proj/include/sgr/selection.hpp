#pragma once

#include <set>
#include <vector>

#include "sgr/dropout.hpp"
#include "sgr/gaussian.hpp"
#include "sgr/world_model.hpp"

namespace sgr {

struct SelectionConfig {
  int depth = -1;  // greedy chain depth; -1 means "as deep as allowed"
  std::set<int> required_sensors;
  bool fallback_full_on_tie = false;
};

struct SelectionCandidate {
  SensorMask mask;
  double surprise = 0.0;
  GaussianBelief belief;
};

struct SelectionResult {
  SensorMask chosen_mask;
  GaussianBelief chosen_belief;
  VectorXd chosen_z;  // posterior mean of the chosen candidate
  std::vector<SelectionCandidate> ledger;
  int evaluations = 0;
};

// Number of sensors the selector may mask while leaving at least one
// unmasked: M - |required| when required is nonempty, else M - 1.
int maskable_count(int sensors, const std::set<int>& required);

// Greedy surprise-guided selection: isolated per-sensor candidates, sensors
// sorted by decreasing surprise, then a cumulative masking chain from the
// full bundle, plus the full bundle itself. Exactly
// M + min(maskable, depth) + 1 posterior evaluations. Ties broken by fewest
// masked sensors, then lowest lexicographic mask.
SelectionResult select_representation(const WorldModel& model, const VectorXd& h,
                                      const ObservationBundle& bundle,
                                      const SelectionConfig& cfg);

// Exhaustive search over every nonempty subset containing required_sensors.
// Guarded to M <= 16.
SelectionResult brute_force_select(const WorldModel& model, const VectorXd& h,
                                   const ObservationBundle& bundle,
                                   const std::set<int>& required_sensors);

}  // namespace sgr
