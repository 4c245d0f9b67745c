#include <doctest.h>

#include <cmath>

#include "sgr/env.hpp"

using namespace sgr;

namespace {

EnvConfig noiseless_config() {
  EnvConfig cfg = default_env_config();
  cfg.process_std.setZero();
  cfg.start_std.setZero();
  for (auto& s : cfg.sensors) s.obs_std = 0.0;
  return cfg;
}

double rollout_return(Env& env, const PolicyConfig& policy, bool use_state,
                      Rng* rng, int steps = 200) {
  StepRecord rec = env.reset();
  double ret = 0.0;
  const VectorXd& goal = env.config().goal;
  for (int t = 0; t < steps; ++t) {
    VectorXd action;
    if (use_state) {
      action = feedback_action(policy, rec.hidden_state, goal,
                               env.config().action_limit);
    } else {
      action = VectorXd(2);
      action << rng->uniform(-1.0, 1.0), rng->uniform(-1.0, 1.0);
    }
    rec = env.step(action);
    ret += rec.reward;
  }
  return ret;
}

}  // namespace

TEST_CASE("default config is valid and exposes six sensors") {
  const EnvConfig cfg = default_env_config();
  CHECK_NOTHROW(cfg.validate());
  REQUIRE(cfg.sensors.size() == 6);
  const SensorLayout layout = cfg.layout();
  CHECK(layout.shapes[0] == std::array<int, 3>{8, 8, 1});
  CHECK(layout.shapes[1] == std::array<int, 3>{8, 8, 1});
  CHECK(layout.shapes[2] == std::array<int, 3>{4, 4, 1});
  CHECK(layout.shapes[3] == std::array<int, 3>{1, 4, 1});
  CHECK(layout.shapes[4] == std::array<int, 3>{1, 4, 1});
  CHECK(layout.shapes[5] == std::array<int, 3>{1, 2, 1});
  CHECK(layout.total_dim() == 154);
  // different render seeds give different tasks, same seed the same task
  CHECK(default_env_config(1).sensors[0].H != cfg.sensors[0].H);
  CHECK(default_env_config().sensors[0].H == cfg.sensors[0].H);
}

TEST_CASE("config validation guards") {
  EnvConfig cfg = default_env_config();
  cfg.F(0, 0) = 2.0;  // spectral radius above the drift bound
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_env_config();
  cfg.sensors.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_env_config();
  cfg.G = MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_env_config();
  cfg.sensors[0].H = MatrixXd::Zero(3, 4);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_env_config();
  cfg.episode_length = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("episodes are deterministic in the seed") {
  Env a(default_env_config(), 9), b(default_env_config(), 9);
  StepRecord ra = a.reset(), rb = b.reset();
  CHECK(ra.hidden_state == rb.hidden_state);
  for (int t = 0; t < 20; ++t) {
    const VectorXd action = VectorXd::Constant(2, 0.1);
    ra = a.step(action);
    rb = b.step(action);
    CHECK(ra.reward == rb.reward);
    for (int i = 0; i < 6; ++i)
      CHECK(ra.bundle.frames[i].values == rb.bundle.frames[i].values);
  }
  Env c(default_env_config(), 10);
  CHECK(c.reset().hidden_state != ra.hidden_state);
}

TEST_CASE("noiseless render is the clamped affine map of the state") {
  Env env(noiseless_config(), 1);
  StepRecord rec = env.reset();
  const EnvConfig& cfg = env.config();
  CHECK(rec.hidden_state == cfg.start_mean);
  for (int i = 0; i < 6; ++i) {
    const VectorXd expected = cfg.sensors[i].offset + cfg.sensors[i].H * rec.hidden_state;
    for (int j = 0; j < expected.size(); ++j)
      CHECK(rec.bundle.frames[i].values(j) == clamp01(expected(j)));
  }
  // one dynamics step
  const VectorXd action = VectorXd::Constant(2, 0.4);
  rec = env.step(action);
  CHECK(rec.hidden_state == cfg.F * cfg.start_mean + cfg.G * action);
  CHECK(rec.reward ==
        doctest::Approx(-cfg.reward_scale *
                        (rec.hidden_state - cfg.goal).squaredNorm())
            .epsilon(1e-12));
}

TEST_CASE("resting at the goal earns zero reward") {
  EnvConfig cfg = noiseless_config();
  cfg.start_mean = cfg.goal;
  Env env(cfg, 1);
  env.reset();
  const StepRecord rec = env.step(VectorXd::Zero(2));
  CHECK(rec.reward == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("episodes terminate at the configured length") {
  EnvConfig cfg = noiseless_config();
  cfg.episode_length = 3;
  Env env(cfg, 1);
  env.reset();
  CHECK(!env.step(VectorXd::Zero(2)).done);
  CHECK(!env.step(VectorXd::Zero(2)).done);
  CHECK(env.step(VectorXd::Zero(2)).done);
}

TEST_CASE("step input guards") {
  Env env(default_env_config(), 1);
  env.reset();
  CHECK_THROWS_AS(env.step(VectorXd::Zero(3)), ContractError);
  VectorXd bad(2);
  bad << 0.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(env.step(bad), ContractError);
}

TEST_CASE("feedback controller is zero at the goal and clamps elsewhere") {
  PolicyConfig policy;
  VectorXd goal(4);
  goal << 0.7, 0.6, 0.0, 0.0;
  CHECK(feedback_action(policy, goal, goal, 1.0).isZero());
  VectorXd far(4);
  far << -5.0, 5.0, 0.0, 0.0;
  const VectorXd a = feedback_action(policy, far, goal, 1.0);
  CHECK(a(0) == 1.0);
  CHECK(a(1) == -1.0);
  CHECK_THROWS_AS(feedback_action(policy, VectorXd::Zero(2), goal, 1.0),
                  ContractError);
  // dither is deterministic in the rng
  PolicyConfig noisy = policy;
  noisy.dither_std = 0.3;
  Rng r1(5), r2(5);
  VectorXd mid(4);
  mid << 0.5, 0.5, 0.0, 0.0;
  CHECK(feedback_action(noisy, mid, goal, 1.0, &r1) ==
        feedback_action(noisy, mid, goal, 1.0, &r2));
}

TEST_CASE("true-state feedback reaches the goal; random actions do not") {
  PolicyConfig policy;
  Env env(default_env_config(), 21);
  const double fb = rollout_return(env, policy, true, nullptr);
  Rng rng(22);
  Env env2(default_env_config(), 21);
  const double rnd = rollout_return(env2, policy, false, &rng);
  CHECK(fb > -200.0);   // converges quickly, small accumulated cost
  CHECK(rnd < 5 * fb);  // returns are negative: random is much worse
  // terminal state close to the goal under feedback
  Env env3(default_env_config(), 21);
  StepRecord rec = env3.reset();
  for (int t = 0; t < 200; ++t)
    rec = env3.step(feedback_action(policy, rec.hidden_state,
                                    env3.config().goal, 1.0));
  CHECK((rec.hidden_state.head(2) - env3.config().goal.head(2)).norm() < 0.02);
}
