#include "sgr/env.hpp"

#include <cmath>

namespace sgr {

SensorLayout EnvConfig::layout() const {
  SensorLayout l;
  for (const auto& s : sensors) l.shapes.push_back({s.rows, s.cols, s.channels});
  return l;
}

GeneratingSystem EnvConfig::generating_system() const {
  GeneratingSystem g;
  g.F = F;
  g.G = G;
  g.process_std = process_std;
  g.start_mean = start_mean;
  g.start_std = start_std;
  for (const auto& s : sensors) {
    g.H.push_back(s.H);
    g.render_offset.push_back(s.offset);
    g.obs_std.push_back(s.obs_std);
  }
  return g;
}

void EnvConfig::validate() const {
  if (state_dim < 1 || action_dim < 1)
    throw ConfigError("EnvConfig: dims must be >= 1");
  if (F.rows() != state_dim || F.cols() != state_dim)
    throw ConfigError("EnvConfig: F shape mismatch");
  if (G.rows() != state_dim || G.cols() != action_dim)
    throw ConfigError("EnvConfig: G shape mismatch");
  if (process_std.size() != state_dim || start_mean.size() != state_dim ||
      start_std.size() != state_dim || goal.size() != state_dim)
    throw ConfigError("EnvConfig: state vector shape mismatch");
  if (sensors.empty()) throw ConfigError("EnvConfig: no sensors");
  for (const auto& s : sensors) {
    const int dim = s.rows * s.cols * s.channels;
    if (s.H.rows() != dim || s.H.cols() != state_dim || s.offset.size() != dim)
      throw ConfigError("EnvConfig: sensor renderer shape mismatch");
  }
  if (episode_length < 1) throw ConfigError("EnvConfig: episode_length < 1");
  // bounded drift
  const double sr = F.eigenvalues().cwiseAbs().maxCoeff();
  if (sr > 1.05) throw ConfigError("EnvConfig: spectral radius of F exceeds 1.05");
}

namespace {

SensorRenderSpec make_view(int rows, int cols, int state_dim, double pos_gain,
                           double vel_gain, double obs_std, const VectorXd& center,
                           Rng& rng) {
  SensorRenderSpec s;
  s.rows = rows;
  s.cols = cols;
  s.channels = 1;
  const int dim = rows * cols;
  s.H = MatrixXd::Zero(dim, state_dim);
  // smooth low-frequency random fields: neighbouring columns stay correlated,
  // so spatial shifts displace the rendered signal gradually
  for (int d = 0; d < state_dim; ++d) {
    const double gain = d < 2 ? pos_gain : vel_gain;
    const double fr = rng.uniform(0.2, 0.8);
    const double fc = rng.uniform(0.2, 0.7);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        s.H(r * cols + c, d) =
            gain * std::sqrt(2.0) * std::cos(fr * r + fc * c + phase);
  }
  s.offset = VectorXd::Constant(dim, 0.5) - s.H * center;
  s.obs_std = obs_std;
  return s;
}

}  // namespace

EnvConfig default_env_config(std::uint64_t render_seed) {
  const int n = 4;  // (px, py, vx, vy)
  const int a = 2;
  const double dt = 0.1;
  const double damping = 0.92;

  EnvConfig cfg;
  cfg.state_dim = n;
  cfg.action_dim = a;
  cfg.F = MatrixXd::Identity(n, n);
  cfg.F(0, 2) = dt;
  cfg.F(1, 3) = dt;
  cfg.F(2, 2) = damping;
  cfg.F(3, 3) = damping;
  cfg.G = MatrixXd::Zero(n, a);
  cfg.G(2, 0) = dt;
  cfg.G(3, 1) = dt;
  cfg.process_std = VectorXd::Zero(n);
  cfg.process_std << 1e-4, 1e-4, 1e-3, 1e-3;
  cfg.start_mean = VectorXd::Zero(n);
  cfg.start_mean << 0.25, 0.35, 0.0, 0.0;
  cfg.start_std = VectorXd::Zero(n);
  cfg.start_std << 0.05, 0.05, 0.01, 0.01;
  cfg.goal = VectorXd::Zero(n);
  cfg.goal << 0.7, 0.6, 0.0, 0.0;
  cfg.reward_scale = 25.0;
  cfg.action_limit = 1.0;
  cfg.episode_length = 200;

  VectorXd center(n);
  center << 0.5, 0.5, 0.0, 0.0;
  // renderer weights from a fixed seed so the default task is reproducible
  Rng rng(render_seed);
  cfg.sensors.push_back(make_view(8, 8, n, 0.25, 0.15, 0.02, center, rng));
  cfg.sensors.push_back(make_view(8, 8, n, 0.25, 0.15, 0.02, center, rng));
  cfg.sensors.push_back(make_view(4, 4, n, 0.3, 0.1, 0.02, center, rng));
  cfg.sensors.push_back(make_view(1, 4, n, 0.4, 0.05, 0.02, center, rng));
  cfg.sensors.push_back(make_view(1, 4, n, 0.4, 0.05, 0.02, center, rng));
  {
    // velocity sensor: 1x2, reads the velocity coordinates only
    SensorRenderSpec s;
    s.rows = 1;
    s.cols = 2;
    s.channels = 1;
    s.H = MatrixXd::Zero(2, n);
    s.H(0, 2) = 1.0;
    s.H(1, 3) = 1.0;
    s.offset = VectorXd::Constant(2, 0.5);
    s.obs_std = 0.02;
    cfg.sensors.push_back(s);
  }
  return cfg;
}

Env::Env(EnvConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed), state_(VectorXd::Zero(cfg_.state_dim)) {
  cfg_.validate();
}

ObservationBundle Env::render() {
  ObservationBundle bundle;
  bundle.step_index = t_;
  for (int i = 0; i < static_cast<int>(cfg_.sensors.size()); ++i) {
    const auto& s = cfg_.sensors[i];
    SensorFrame f;
    f.sensor_id = i;
    f.rows = s.rows;
    f.cols = s.cols;
    f.channels = s.channels;
    f.values = s.offset + s.H * state_;
    for (int j = 0; j < f.values.size(); ++j)
      f.values(j) = clamp01(f.values(j) + s.obs_std * rng_.normal());
    bundle.frames.push_back(std::move(f));
  }
  return bundle;
}

StepRecord Env::reset() {
  t_ = 0;
  state_ = cfg_.start_mean;
  for (int i = 0; i < state_.size(); ++i)
    state_(i) += cfg_.start_std(i) * rng_.normal();
  StepRecord rec;
  rec.bundle = render();
  rec.reward = 0.0;
  rec.done = false;
  rec.hidden_state = state_;
  return rec;
}

StepRecord Env::step(const VectorXd& action) {
  require(action.size() == cfg_.action_dim, "Env::step: action dim mismatch");
  require(action.allFinite(), "Env::step: non-finite action");
  VectorXd noise(cfg_.state_dim);
  for (int i = 0; i < noise.size(); ++i)
    noise(i) = cfg_.process_std(i) * rng_.normal();
  state_ = cfg_.F * state_ + cfg_.G * action + noise;
  ++t_;
  StepRecord rec;
  rec.bundle = render();
  rec.reward = -cfg_.reward_scale * (state_ - cfg_.goal).squaredNorm();
  rec.done = t_ >= cfg_.episode_length;
  rec.hidden_state = state_;
  return rec;
}

VectorXd feedback_action(const PolicyConfig& policy, const VectorXd& estimate,
                         const VectorXd& goal, double action_limit,
                         Rng* dither_rng) {
  const int a = 2;
  require(estimate.size() >= 4 && goal.size() >= 4,
          "feedback_action: estimate must carry position and velocity");
  VectorXd action(a);
  for (int i = 0; i < a; ++i) {
    action(i) = -policy.kp * (estimate(i) - goal(i)) -
                policy.kd * (estimate(2 + i) - goal(2 + i));
    if (dither_rng && policy.dither_std > 0.0)
      action(i) += policy.dither_std * dither_rng->normal();
    action(i) = std::clamp(action(i), -action_limit, action_limit);
  }
  return action;
}

}  // namespace sgr
