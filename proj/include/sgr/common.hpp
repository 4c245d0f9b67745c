#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sgr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Configuration problems: bad config files, mismatched layouts. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller violated an operation precondition (dimension mismatch etc.).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Empty sensor subset where at least one sensor is required.
class InvalidSubsetError : public ConfigError {
 public:
  explicit InvalidSubsetError(const std::string& msg) : ConfigError(msg) {}
};

// Degenerate regression during model fitting; message names the block.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

class CalibrationError : public std::runtime_error {
 public:
  explicit CalibrationError(const std::string& msg) : std::runtime_error(msg) {}
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline bool all_finite(const VectorXd& v) { return v.allFinite(); }
inline bool all_finite(const MatrixXd& m) { return m.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace sgr
