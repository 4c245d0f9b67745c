#pragma once

#include <cmath>

#include "sgr/common.hpp"

namespace sgr {

inline constexpr double kVarFloor = 1e-8;

// Diagonal-covariance Gaussian over the stochastic latent z.
struct GaussianBelief {
  VectorXd mean;
  VectorXd var;  // diagonal entries, each >= kVarFloor

  int dim() const { return static_cast<int>(mean.size()); }

  void validate() const {
    if (mean.size() != var.size() || mean.size() < 1)
      throw ContractError("GaussianBelief: mean/var length mismatch");
    if (!mean.allFinite() || !var.allFinite())
      throw ContractError("GaussianBelief: non-finite entries");
    if ((var.array() < kVarFloor).any())
      throw ContractError("GaussianBelief: variance below floor");
  }
};

inline VectorXd floor_var(VectorXd v) {
  return v.cwiseMax(kVarFloor);
}

// Closed-form KL[q || p] for diagonal Gaussians, summed over dimensions.
inline double kl_surprise(const GaussianBelief& q, const GaussianBelief& p) {
  require(q.dim() == p.dim(), "kl_surprise: dimension mismatch");
  double kl = 0.0;
  for (int i = 0; i < q.dim(); ++i) {
    const double vq = std::max(q.var(i), kVarFloor);
    const double vp = std::max(p.var(i), kVarFloor);
    const double dm = q.mean(i) - p.mean(i);
    kl += 0.5 * (std::log(vp / vq) + (vq + dm * dm) / vp - 1.0);
  }
  return kl < 0.0 ? 0.0 : kl;
}

}  // namespace sgr
