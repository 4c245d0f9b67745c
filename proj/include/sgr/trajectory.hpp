#pragma once

#include <cstdint>
#include <vector>

#include "sgr/common.hpp"
#include "sgr/sensors.hpp"

namespace sgr {

// One clean episode as produced by the collector: bundles[t] is the
// observation at step t, actions[t] the action taken from it, rewards[t] the
// reward received after that action.
struct EpisodeTrace {
  std::vector<ObservationBundle> bundles;
  std::vector<VectorXd> actions;
  std::vector<double> rewards;

  int length() const { return static_cast<int>(bundles.size()); }
};

// Parameters of the linear-Gaussian system that generated the trajectories.
// The fitting smoother uses these to produce latent targets; agent-side
// inference never sees them.
struct GeneratingSystem {
  MatrixXd F;               // state transition, n x n
  MatrixXd G;               // action input, n x a
  VectorXd process_std;     // n
  VectorXd start_mean;      // n
  VectorXd start_std;       // n
  std::vector<MatrixXd> H;  // per sensor: frame_dim x n
  std::vector<VectorXd> render_offset;  // per sensor: frame_dim
  std::vector<double> obs_std;          // per sensor

  int state_dim() const { return static_cast<int>(F.rows()); }
  int action_dim() const { return static_cast<int>(G.cols()); }
  int sensor_count() const { return static_cast<int>(H.size()); }
};

struct TrajectoryStore {
  std::vector<EpisodeTrace> episodes;
  SensorLayout layout;
  GeneratingSystem gen;
  std::uint64_t fingerprint = 0;

  int total_steps() const {
    int n = 0;
    for (const auto& ep : episodes) n += ep.length();
    return n;
  }
};

}  // namespace sgr
