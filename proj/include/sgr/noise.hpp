#pragma once

#include <cstdint>
#include <deque>
#include <set>
#include <string>
#include <vector>

#include "sgr/rng.hpp"
#include "sgr/sensors.hpp"

namespace sgr {

enum class NoiseKind { Gaussian, Glare, Jitter, Occlusion, Chromatic, Latency };

const char* noise_kind_name(NoiseKind kind);
NoiseKind noise_kind_from_name(const std::string& name);
inline constexpr int kNoiseKindCount = 6;

// Injector constants. Frames are generated in [0, 1] by the environment
// renderer; intensity in [0, 1] spans imperceptible to signal-destroying.
inline constexpr double kNoiseVMax = 1.0;
inline constexpr double kGaussianSigmaScale = 0.5;
inline constexpr int kLatencyMaxLag = 8;
inline int chromatic_max_shift(int cols) { return cols / 4; }

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double intensity = 0.0;   // [0, 1]
  double proportion = 0.0;  // fraction of steps corrupted, [0, 1]
  std::set<int> target_sensors;
  std::uint64_t seed = 0;

  void validate(int sensor_count) const;
};

// Harness-only ground truth of what was corrupted when. Never exposed to the
// agent-side modules.
struct CorruptionRecord {
  int step_index = 0;
  int sensor_id = 0;
  NoiseKind kind = NoiseKind::Gaussian;
  bool applied = false;
};

struct CorruptionLog {
  std::vector<CorruptionRecord> records;

  bool sensor_corrupted(int step, int sensor) const {
    for (const auto& r : records)
      if (r.step_index == step && r.sensor_id == sensor && r.applied) return true;
    return false;
  }
};

SensorFrame corrupt_gaussian(const SensorFrame& frame, double intensity, Rng& rng);
SensorFrame corrupt_glare(const SensorFrame& frame, double intensity);
SensorFrame corrupt_jitter(const SensorFrame& frame, double intensity, Rng& rng);
SensorFrame corrupt_occlusion(const SensorFrame& frame, double intensity, Rng& rng);
SensorFrame corrupt_chromatic(const SensorFrame& frame, double intensity, Rng& rng);

// Stateful per-sensor stream stage: emits the frame from L steps ago,
// L = round(intensity * kLatencyMaxLag), oldest available during warm-up.
class LatencyStage {
 public:
  explicit LatencyStage(double intensity);
  SensorFrame push(const SensorFrame& frame);

 private:
  int lag_;
  std::deque<SensorFrame> history_;
};

// Dispatches to the injector for spec.kind. Latency must go through a
// LatencyStage instead.
SensorFrame corrupt_frame(NoiseKind kind, const SensorFrame& frame,
                          double intensity, Rng& rng);

// Per-step apply/skip flags with exactly round(proportion * episode_length)
// true entries, uniformly placed.
std::vector<std::uint8_t> schedule(double proportion, int episode_length, Rng& rng);

}  // namespace sgr
