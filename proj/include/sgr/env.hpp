#pragma once

#include <cstdint>
#include <vector>

#include "sgr/common.hpp"
#include "sgr/rng.hpp"
#include "sgr/sensors.hpp"
#include "sgr/trajectory.hpp"

namespace sgr {

// Per-sensor deterministic renderer: value = clamp01(offset + H * state + noise).
struct SensorRenderSpec {
  int rows = 1;
  int cols = 1;
  int channels = 1;
  MatrixXd H;        // frame_dim x state_dim
  VectorXd offset;   // frame_dim
  double obs_std = 0.0;
};

struct EnvConfig {
  int state_dim = 0;
  int action_dim = 0;
  MatrixXd F;
  MatrixXd G;
  VectorXd process_std;
  VectorXd start_mean;
  VectorXd start_std;
  VectorXd goal;
  double reward_scale = 25.0;
  double action_limit = 1.0;
  std::vector<SensorRenderSpec> sensors;
  int episode_length = 200;

  SensorLayout layout() const;
  GeneratingSystem generating_system() const;
  void validate() const;
};

// 2-D point-mass navigation with six redundant-but-different sensors: two 8x8
// views, one 4x4 coarse view, two 1x4 beacon vectors, one 1x2 velocity vector.
EnvConfig default_env_config(std::uint64_t render_seed = 0xC0FFEEULL);

struct StepRecord {
  ObservationBundle bundle;
  double reward = 0.0;
  bool done = false;
  VectorXd hidden_state;  // harness-only; never passed to the agent
};

class Env {
 public:
  Env(EnvConfig cfg, std::uint64_t seed);

  StepRecord reset();
  StepRecord step(const VectorXd& action);

  const EnvConfig& config() const { return cfg_; }
  int step_index() const { return t_; }

 private:
  ObservationBundle render();

  EnvConfig cfg_;
  Rng rng_;
  VectorXd state_;
  int t_ = 0;
};

struct PolicyConfig {
  double kp = 6.0;
  double kd = 3.0;
  double dither_std = 0.0;
};

// Fixed linear feedback controller on a state estimate. The estimate lives in
// the same coordinates as the environment state (the fitted latent targets).
VectorXd feedback_action(const PolicyConfig& policy, const VectorXd& estimate,
                         const VectorXd& goal, double action_limit,
                         Rng* dither_rng = nullptr);

}  // namespace sgr
