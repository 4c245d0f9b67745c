#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <vector>

#include "sgr/common.hpp"

namespace sgr {

// One sensor reading: a rows x cols x channels array stored row-major with
// channels innermost. The unit of corruption and masking.
struct SensorFrame {
  int sensor_id = 0;
  int rows = 1;
  int cols = 1;
  int channels = 1;
  VectorXd values;  // length rows*cols*channels

  int size() const { return rows * cols * channels; }

  int index(int r, int c, int ch) const { return (r * cols + c) * channels + ch; }

  double at(int r, int c, int ch) const { return values(index(r, c, ch)); }
  double& at(int r, int c, int ch) { return values(index(r, c, ch)); }

  void validate() const {
    if (rows < 1 || cols < 1 || channels < 1)
      throw ContractError("SensorFrame: shape entries must be >= 1");
    if (values.size() != size())
      throw ContractError("SensorFrame: values length does not match shape");
    if (!values.allFinite())
      throw ContractError("SensorFrame: non-finite values");
  }
};

// Declared shapes for the configured sensors, sensor_id = position.
struct SensorLayout {
  std::vector<std::array<int, 3>> shapes;  // {rows, cols, channels}

  int sensor_count() const { return static_cast<int>(shapes.size()); }
  int frame_dim(int i) const { return shapes[i][0] * shapes[i][1] * shapes[i][2]; }
  int total_dim() const {
    int n = 0;
    for (int i = 0; i < sensor_count(); ++i) n += frame_dim(i);
    return n;
  }
};

// All sensor frames for one environment step, in sensor_id order.
struct ObservationBundle {
  std::vector<SensorFrame> frames;
  int step_index = 0;

  int sensor_count() const { return static_cast<int>(frames.size()); }

  void validate() const {
    if (frames.empty()) throw ContractError("ObservationBundle: no frames");
    for (int i = 0; i < sensor_count(); ++i) {
      if (frames[i].sensor_id != i)
        throw ContractError("ObservationBundle: sensor_ids must be 0..M-1 in order");
      frames[i].validate();
    }
  }

  bool matches(const SensorLayout& layout) const {
    if (sensor_count() != layout.sensor_count()) return false;
    for (int i = 0; i < sensor_count(); ++i) {
      const auto& s = layout.shapes[i];
      if (frames[i].rows != s[0] || frames[i].cols != s[1] ||
          frames[i].channels != s[2])
        return false;
    }
    return true;
  }
};

// true = sensor replaced by the mask value.
struct SensorMask {
  std::vector<std::uint8_t> masked;

  int size() const { return static_cast<int>(masked.size()); }
  bool is_masked(int i) const { return masked[i] != 0; }
  int masked_count() const {
    int n = 0;
    for (auto m : masked) n += (m != 0);
    return n;
  }
  static SensorMask none(int sensors) {
    return SensorMask{std::vector<std::uint8_t>(sensors, 0)};
  }
  bool operator==(const SensorMask& o) const { return masked == o.masked; }
};

// Replaces every value of each masked sensor's frame by mask_value.
inline ObservationBundle apply_mask(const ObservationBundle& bundle,
                                    const SensorMask& mask, double mask_value) {
  if (mask.size() != bundle.sensor_count())
    throw ConfigError("apply_mask: mask length does not match sensor count");
  ObservationBundle out = bundle;
  for (int i = 0; i < out.sensor_count(); ++i) {
    if (mask.is_masked(i)) out.frames[i].values.setConstant(mask_value);
  }
  return out;
}

// Concatenation of all frames in sensor order after masking.
inline VectorXd flatten_fuse(const ObservationBundle& bundle,
                             const SensorMask& mask, double mask_value = 0.0) {
  ObservationBundle masked = apply_mask(bundle, mask, mask_value);
  int total = 0;
  for (const auto& f : masked.frames) total += static_cast<int>(f.values.size());
  VectorXd out(total);
  int pos = 0;
  for (const auto& f : masked.frames) {
    out.segment(pos, f.values.size()) = f.values;
    pos += static_cast<int>(f.values.size());
  }
  return out;
}

// masked[i] is false iff i is kept. The empty subset is rejected: the
// representation model must always condition on at least one sensor.
inline SensorMask subset_to_mask(const std::set<int>& kept, int total) {
  if (kept.empty())
    throw InvalidSubsetError("subset_to_mask: empty sensor subset");
  SensorMask mask{std::vector<std::uint8_t>(total, 1)};
  for (int id : kept) {
    if (id < 0 || id >= total)
      throw ConfigError("subset_to_mask: sensor id out of range");
    mask.masked[id] = 0;
  }
  return mask;
}

}  // namespace sgr
