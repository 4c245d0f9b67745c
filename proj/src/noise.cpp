#include "sgr/noise.hpp"

#include <algorithm>
#include <cmath>

namespace sgr {

const char* noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Glare: return "glare";
    case NoiseKind::Jitter: return "jitter";
    case NoiseKind::Occlusion: return "occlusion";
    case NoiseKind::Chromatic: return "chromatic";
    case NoiseKind::Latency: return "latency";
  }
  throw ConfigError("unknown noise kind");
}

NoiseKind noise_kind_from_name(const std::string& name) {
  for (int i = 0; i < kNoiseKindCount; ++i) {
    NoiseKind k = static_cast<NoiseKind>(i);
    if (name == noise_kind_name(k)) return k;
  }
  throw ConfigError("unknown noise kind: " + name);
}

void NoiseSpec::validate(int sensor_count) const {
  if (intensity < 0.0 || intensity > 1.0)
    throw ConfigError("NoiseSpec: intensity outside [0, 1]");
  if (proportion < 0.0 || proportion > 1.0)
    throw ConfigError("NoiseSpec: proportion outside [0, 1]");
  if (target_sensors.empty())
    throw ConfigError("NoiseSpec: empty target sensor set");
  for (int id : target_sensors)
    if (id < 0 || id >= sensor_count)
      throw ConfigError("NoiseSpec: target sensor out of layout");
}

static SensorFrame finite_checked(SensorFrame f) {
  for (int i = 0; i < f.values.size(); ++i) {
    if (!std::isfinite(f.values(i))) f.values(i) = 0.0;
  }
  return f;
}

SensorFrame corrupt_gaussian(const SensorFrame& frame, double intensity, Rng& rng) {
  if (intensity == 0.0) return frame;
  SensorFrame out = frame;
  for (int i = 0; i < out.values.size(); ++i)
    out.values(i) += intensity * kGaussianSigmaScale * rng.normal();
  return finite_checked(std::move(out));
}

SensorFrame corrupt_glare(const SensorFrame& frame, double intensity) {
  SensorFrame out = frame;
  out.values = (1.0 - intensity) * frame.values.array() + intensity * kNoiseVMax;
  return out;
}

SensorFrame corrupt_jitter(const SensorFrame& frame, double intensity, Rng& rng) {
  if (intensity == 0.0) return frame;
  const double gain = rng.uniform(1.0 - intensity, 1.0 + intensity);
  const double offset = rng.uniform(-intensity * kNoiseVMax, intensity * kNoiseVMax);
  SensorFrame out = frame;
  out.values = gain * frame.values.array() + offset;
  return finite_checked(std::move(out));
}

SensorFrame corrupt_occlusion(const SensorFrame& frame, double intensity, Rng& rng) {
  if (intensity == 0.0) return frame;
  SensorFrame out = frame;
  const int area = frame.rows * frame.cols;
  // rectangle covering ~intensity of the area: pick height first, then the
  // width that gets closest to the target cell count
  int target = std::max(1, static_cast<int>(intensity * area));
  int rh = std::max(1, static_cast<int>(std::lround(std::sqrt(
               static_cast<double>(target) * frame.rows / frame.cols))));
  rh = std::min(rh, frame.rows);
  int rw = std::max(1, target / rh);
  rw = std::min(rw, frame.cols);
  const int r0 = static_cast<int>(rng.uniform_int(frame.rows - rh + 1));
  const int c0 = static_cast<int>(rng.uniform_int(frame.cols - rw + 1));
  for (int r = r0; r < r0 + rh; ++r)
    for (int c = c0; c < c0 + rw; ++c)
      for (int ch = 0; ch < frame.channels; ++ch) out.at(r, c, ch) = 0.0;
  return out;
}

SensorFrame corrupt_chromatic(const SensorFrame& frame, double intensity, Rng& rng) {
  const int shift = static_cast<int>(
      std::lround(intensity * chromatic_max_shift(frame.cols)));
  if (shift == 0) return frame;
  SensorFrame out = frame;
  for (int ch = 0; ch < frame.channels; ++ch) {
    // direction fixed per channel: alternate -1/+1, single channel shifts +1
    int dir;
    if (frame.channels == 1) {
      dir = 1;
    } else {
      dir = (ch % 3 == 0) ? 1 : (ch % 3 == 1 ? -1 : 0);
    }
    (void)rng;
    if (dir == 0) continue;
    const int d = ((shift * dir) % frame.cols + frame.cols) % frame.cols;
    for (int r = 0; r < frame.rows; ++r)
      for (int c = 0; c < frame.cols; ++c)
        out.at(r, (c + d) % frame.cols, ch) = frame.at(r, c, ch);
  }
  return out;
}

LatencyStage::LatencyStage(double intensity)
    : lag_(static_cast<int>(std::lround(intensity * kLatencyMaxLag))) {}

SensorFrame LatencyStage::push(const SensorFrame& frame) {
  if (lag_ == 0) return frame;
  history_.push_back(frame);
  if (static_cast<int>(history_.size()) > lag_ + 1) history_.pop_front();
  return history_.front();
}

SensorFrame corrupt_frame(NoiseKind kind, const SensorFrame& frame,
                          double intensity, Rng& rng) {
  switch (kind) {
    case NoiseKind::Gaussian: return corrupt_gaussian(frame, intensity, rng);
    case NoiseKind::Glare: return corrupt_glare(frame, intensity);
    case NoiseKind::Jitter: return corrupt_jitter(frame, intensity, rng);
    case NoiseKind::Occlusion: return corrupt_occlusion(frame, intensity, rng);
    case NoiseKind::Chromatic: return corrupt_chromatic(frame, intensity, rng);
    case NoiseKind::Latency:
      throw ContractError("latency corruption requires a LatencyStage");
  }
  throw ConfigError("unknown noise kind");
}

std::vector<std::uint8_t> schedule(double proportion, int episode_length, Rng& rng) {
  require(episode_length >= 1, "schedule: episode_length must be >= 1");
  const int count = static_cast<int>(std::lround(proportion * episode_length));
  std::vector<std::uint8_t> flags(episode_length, 0);
  // partial Fisher-Yates over step indices
  std::vector<int> idx(episode_length);
  for (int i = 0; i < episode_length; ++i) idx[i] = i;
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(episode_length - i));
    std::swap(idx[i], idx[j]);
    flags[idx[i]] = 1;
  }
  return flags;
}

}  // namespace sgr
