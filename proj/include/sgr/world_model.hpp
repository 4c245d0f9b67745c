#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgr/common.hpp"
#include "sgr/dropout.hpp"
#include "sgr/gaussian.hpp"
#include "sgr/sensors.hpp"
#include "sgr/trajectory.hpp"

namespace sgr {

struct LatentState {
  VectorXd h;
  VectorXd z;
  int step_index = 0;
};

// Per-sensor linear encoder: latent evidence = weight * frame + offset, with
// per-coordinate evidence noise variance.
struct SensorEncoder {
  MatrixXd weight;    // k x frame_dim
  VectorXd offset;    // k
  VectorXd noise_var; // k, >= kVarFloor
};

// Per-sensor linear decoder: frame = weight * (h (+) z) + offset.
struct SensorDecoder {
  MatrixXd weight;  // frame_dim x (d + k)
  VectorXd offset;  // frame_dim
};

// Statistics of the rejection score on clean transitions.
struct CalibStats {
  double recon_mean = 0.0;
  double recon_std = 0.0;
  int n_samples = 0;
};

// Analytic linear-Gaussian recurrent state-space model: deterministic context
// recurrence, Gaussian prior and posterior over z, per-sensor decoders and a
// reward head.
struct WorldModel {
  int d = 0;  // context dim
  int k = 0;  // latent dim
  SensorLayout layout;

  MatrixXd A;  // d x d
  MatrixXd B;  // d x k
  MatrixXd C;  // d x action_dim

  MatrixXd prior_weight;  // k x d
  VectorXd prior_offset;  // k
  VectorXd prior_var;     // k

  std::vector<SensorEncoder> encoders;
  std::vector<SensorDecoder> decoders;

  VectorXd reward_weight;  // d + k
  double reward_offset = 0.0;

  VectorXd h0;
  CalibStats calib;

  // Ablation switch: fuse masked sensors as literal mask-value evidence
  // instead of removing them.
  bool mask_as_zero_evidence = false;
  double mask_value = 0.0;

  double ridge = 1e-4;
  std::uint64_t seed = 0;

  int action_dim() const { return static_cast<int>(C.cols()); }
  int sensor_count() const { return layout.sensor_count(); }
};

// h_t = A h_prev + B z_prev + C action.
VectorXd sequence_step(const WorldModel& model, const VectorXd& h_prev,
                       const VectorXd& z_prev, const VectorXd& action);

// Dynamics predictor: N(prior_weight * h + prior_offset, prior_var).
GaussianBelief prior(const WorldModel& model, const VectorXd& h);

// Precision-weighted fusion of the prior with each unmasked sensor's encoded
// evidence. Masked sensors contribute nothing (evidence removal) unless
// mask_as_zero_evidence is set.
GaussianBelief posterior(const WorldModel& model, const VectorXd& h,
                         const ObservationBundle& bundle,
                         const SensorMask& mask);

// Mean reconstruction of every sensor frame from (h, z).
ObservationBundle decode(const WorldModel& model, const VectorXd& h,
                         const VectorXd& z);

// Mean absolute deviation between the bundle and its reconstruction through
// the unconditioned (h = h0) posterior.
double rejection_score(const WorldModel& model, const ObservationBundle& bundle);

double predict_reward(const WorldModel& model, const VectorXd& h,
                      const VectorXd& z);

struct FitDims {
  int d = 0;
  int k = 0;
};

// Ridge-regression fit of all model blocks against latent targets from a
// Kalman smoother over the generating system. Deterministic given the seed.
// The trailing ~20% of episodes are held out for calibration statistics.
WorldModel fit(const TrajectoryStore& store, const DropoutPolicy& dropout,
               FitDims dims, double ridge, std::uint64_t seed = 0);

// Serialization: single JSON document, bit-stable for all stored reals.
std::string model_to_json(const WorldModel& model);
WorldModel model_from_json(const std::string& text);

}  // namespace sgr
