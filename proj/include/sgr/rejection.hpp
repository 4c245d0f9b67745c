#pragma once

#include <utility>
#include <vector>

#include "sgr/world_model.hpp"

namespace sgr {

enum class GateVerdict { Accept, AcceptDenoised, Reject };
enum class GateMode { GroundTruth, Predictive };
enum class ScoreStrategy { Reconstruction, Surprise };
enum class DenoiserStrategy { PosteriorDecode, PriorInterpolation };

struct GateConfig {
  double tau = 0.0;    // reject threshold
  double tau_d = 0.0;  // denoise threshold, <= tau; tau_d == tau disables denoising
  ScoreStrategy score = ScoreStrategy::Reconstruction;
  DenoiserStrategy denoiser = DenoiserStrategy::PosteriorDecode;
  double interp_alpha = 0.5;
  bool calibrated = false;

  void validate() const {
    if (tau_d > tau) throw ConfigError("GateConfig: tau_d must be <= tau");
  }
};

// Replay cap: predictive outages longer than this realign from a truncated
// history and are flagged in the decision.
inline constexpr int kGateReplayCap = 64;

struct GateState {
  GateMode mode = GateMode::GroundTruth;
  VectorXd h;           // current context
  VectorXd residual_h;  // context at the most recent accepted step
  VectorXd z_prev;
  int steps_in_predictive = 0;
  // (z, action) pairs applied since the last accepted step, for realignment.
  std::vector<std::pair<VectorXd, VectorXd>> replay;
  bool replay_truncated = false;
};

GateState make_gate_state(const WorldModel& model);

struct GateDecision {
  GateVerdict verdict = GateVerdict::Accept;
  double score = 0.0;
  VectorXd used_z;
  VectorXd used_h;
  bool context_reset = false;
  bool long_outage = false;
};

// tau = mean + 5 std, tau_d = mean + 2 std of the score over a clean stream
// of at least 500 bundles.
GateConfig calibrate(const WorldModel& model,
                     const std::vector<ObservationBundle>& clean_stream,
                     ScoreStrategy strategy = ScoreStrategy::Reconstruction);

double gate_score(const WorldModel& model, const GateConfig& cfg,
                  const VectorXd& h, const ObservationBundle& bundle);

// One step of the accept / accept-denoised / reject state machine. Input
// state is unchanged; the successor state is returned alongside the decision.
std::pair<GateDecision, GateState> gate_step(const WorldModel& model,
                                             const GateConfig& cfg,
                                             const GateState& state,
                                             const ObservationBundle& bundle,
                                             const VectorXd& action_prev);

}  // namespace sgr
