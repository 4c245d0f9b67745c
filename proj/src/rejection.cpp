#include "sgr/rejection.hpp"

#include <cmath>

namespace sgr {

GateState make_gate_state(const WorldModel& model) {
  GateState s;
  s.h = model.h0;
  s.residual_h = model.h0;
  // bootstrap latent consistent with the initial context
  s.z_prev = prior(model, model.h0).mean;
  return s;
}

GateConfig calibrate(const WorldModel& model,
                     const std::vector<ObservationBundle>& clean_stream,
                     ScoreStrategy strategy) {
  if (clean_stream.size() < 500)
    throw CalibrationError("calibrate: need at least 500 clean bundles");
  double sum = 0.0, sq = 0.0;
  if (strategy == ScoreStrategy::Reconstruction) {
    for (const auto& b : clean_stream) {
      const double s = rejection_score(model, b);
      sum += s;
      sq += s * s;
    }
  } else {
    // surprise variant scored at the unconditioned context
    const SensorMask none = SensorMask::none(model.sensor_count());
    const GaussianBelief pr = prior(model, model.h0);
    for (const auto& b : clean_stream) {
      const double s = kl_surprise(posterior(model, model.h0, b, none), pr);
      sum += s;
      sq += s * s;
    }
  }
  const double n = static_cast<double>(clean_stream.size());
  const double mean = sum / n;
  const double stddev = std::sqrt(std::max(0.0, sq / n - mean * mean));
  GateConfig cfg;
  cfg.tau = mean + 5.0 * stddev;
  cfg.tau_d = mean + 2.0 * stddev;
  cfg.score = strategy;
  cfg.calibrated = true;
  return cfg;
}

double gate_score(const WorldModel& model, const GateConfig& cfg,
                  const VectorXd& h, const ObservationBundle& bundle) {
  if (cfg.score == ScoreStrategy::Reconstruction)
    return rejection_score(model, bundle);
  const SensorMask none = SensorMask::none(bundle.sensor_count());
  return kl_surprise(posterior(model, h, bundle, none), prior(model, h));
}

std::pair<GateDecision, GateState> gate_step(const WorldModel& model,
                                             const GateConfig& cfg,
                                             const GateState& state,
                                             const ObservationBundle& bundle,
                                             const VectorXd& action_prev) {
  if (!cfg.calibrated) throw ContractError("gate_step: uncalibrated GateConfig");
  cfg.validate();

  GateState next = state;
  next.replay.emplace_back(state.z_prev, action_prev);
  if (static_cast<int>(next.replay.size()) > kGateReplayCap) {
    next.replay.erase(next.replay.begin());
    next.replay_truncated = true;
  }

  VectorXd h_t = sequence_step(model, state.h, state.z_prev, action_prev);
  GateDecision dec;
  dec.score = gate_score(model, cfg, h_t, bundle);

  if (dec.score >= cfg.tau) {
    // Reject: rely on the dynamics prior, keep the residual context.
    dec.verdict = GateVerdict::Reject;
    dec.used_z = prior(model, h_t).mean;
    dec.used_h = h_t;
    next.mode = GateMode::Predictive;
    next.steps_in_predictive = state.steps_in_predictive + 1;
    next.h = h_t;
    next.z_prev = dec.used_z;
    dec.long_outage = next.replay_truncated;
    return {dec, next};
  }

  const bool was_predictive = state.mode == GateMode::Predictive;
  if (was_predictive) {
    // context reset: realign by replaying the stored (z, a) pairs from the
    // residual context
    VectorXd h = state.residual_h;
    for (const auto& [z, a] : next.replay) h = sequence_step(model, h, z, a);
    h_t = h;
    dec.context_reset = true;
    dec.long_outage = next.replay_truncated;
  }

  const SensorMask none = SensorMask::none(bundle.sensor_count());
  if (dec.score >= cfg.tau_d) {
    dec.verdict = GateVerdict::AcceptDenoised;
    ObservationBundle denoised;
    if (cfg.denoiser == DenoiserStrategy::PosteriorDecode) {
      const GaussianBelief post = posterior(model, h_t, bundle, none);
      denoised = decode(model, h_t, post.mean);
    } else {
      const ObservationBundle expected = decode(model, h_t, prior(model, h_t).mean);
      denoised = bundle;
      for (int i = 0; i < denoised.sensor_count(); ++i)
        denoised.frames[i].values = cfg.interp_alpha * expected.frames[i].values +
                                    (1.0 - cfg.interp_alpha) * bundle.frames[i].values;
    }
    dec.used_z = posterior(model, h_t, denoised, none).mean;
  } else {
    dec.verdict = GateVerdict::Accept;
    dec.used_z = posterior(model, h_t, bundle, none).mean;
  }
  dec.used_h = h_t;

  next.mode = GateMode::GroundTruth;
  next.steps_in_predictive = 0;
  next.h = h_t;
  next.z_prev = dec.used_z;
  next.residual_h = h_t;
  next.replay.clear();
  next.replay_truncated = false;
  return {dec, next};
}

}  // namespace sgr
