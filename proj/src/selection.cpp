#include "sgr/selection.hpp"

#include <algorithm>
#include <numeric>

namespace sgr {

std::vector<std::vector<SensorMask>> dropout_masks(int sensors, int batch,
                                                   int time, Rng& rng) {
  require(sensors >= 1, "dropout_masks: need at least one sensor");
  std::vector<std::vector<SensorMask>> out(batch);
  std::vector<double> values(sensors);
  std::vector<int> order(sensors);
  for (int b = 0; b < batch; ++b) {
    out[b].reserve(time);
    for (int t = 0; t < time; ++t) {
      const int u = static_cast<int>(rng.uniform_int(sensors));
      for (int i = 0; i < sensors; ++i) values[i] = rng.uniform();
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](int a, int c) { return values[a] < values[c]; });
      SensorMask mask = SensorMask::none(sensors);
      // rank of sensor order[r] is r; mask iff rank < u
      for (int r = 0; r < u; ++r) mask.masked[order[r]] = 1;
      out[b].push_back(std::move(mask));
    }
  }
  return out;
}

int maskable_count(int sensors, const std::set<int>& required) {
  if (required.empty()) return sensors - 1;
  return sensors - static_cast<int>(required.size());
}

namespace {

// fewest masked sensors first, then lowest lexicographic mask
bool candidate_better(const SelectionCandidate& a, const SelectionCandidate& b) {
  if (a.surprise != b.surprise) return a.surprise < b.surprise;
  const int ma = a.mask.masked_count();
  const int mb = b.mask.masked_count();
  if (ma != mb) return ma < mb;
  return a.mask.masked < b.mask.masked;
}

SelectionResult finalize(std::vector<SelectionCandidate> ledger) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(ledger.size()); ++i)
    if (candidate_better(ledger[i], ledger[best])) best = i;
  SelectionResult res;
  res.chosen_mask = ledger[best].mask;
  res.chosen_belief = ledger[best].belief;
  res.chosen_z = ledger[best].belief.mean;
  res.evaluations = static_cast<int>(ledger.size());
  res.ledger = std::move(ledger);
  return res;
}

}  // namespace

SelectionResult select_representation(const WorldModel& model, const VectorXd& h,
                                      const ObservationBundle& bundle,
                                      const SelectionConfig& cfg) {
  const int sensors = bundle.sensor_count();
  for (int id : cfg.required_sensors)
    if (id < 0 || id >= sensors)
      throw ConfigError("select_representation: required sensor out of range");
  const GaussianBelief pr = prior(model, h);

  std::vector<SelectionCandidate> ledger;
  std::vector<double> isolated_surprise(sensors);

  // Step 1: isolated candidates ({k} plus required sensors)
  for (int i = 0; i < sensors; ++i) {
    std::set<int> keep = cfg.required_sensors;
    keep.insert(i);
    SensorMask mask = subset_to_mask(keep, sensors);
    GaussianBelief belief = posterior(model, h, bundle, mask);
    const double s = kl_surprise(belief, pr);
    isolated_surprise[i] = s;
    ledger.push_back({std::move(mask), s, std::move(belief)});
  }

  // Step 2: sort sensors by decreasing isolated surprise
  std::vector<int> order(sensors);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (isolated_surprise[a] != isolated_surprise[b])
      return isolated_surprise[a] > isolated_surprise[b];
    return a < b;
  });

  // Step 3: cumulative masking chain from the full bundle
  const int maskable = maskable_count(sensors, cfg.required_sensors);
  const int depth = cfg.depth < 0 ? maskable : std::min(cfg.depth, maskable);
  SensorMask chain = SensorMask::none(sensors);
  int taken = 0;
  for (int oi = 0; oi < sensors && taken < depth; ++oi) {
    const int s = order[oi];
    if (cfg.required_sensors.count(s)) continue;
    chain.masked[s] = 1;
    ++taken;
    GaussianBelief belief = posterior(model, h, bundle, chain);
    ledger.push_back({chain, kl_surprise(belief, pr), std::move(belief)});
  }

  // Full fusion is always a candidate.
  SensorMask full = SensorMask::none(sensors);
  GaussianBelief belief = posterior(model, h, bundle, full);
  ledger.push_back({std::move(full), kl_surprise(belief, pr), std::move(belief)});

  return finalize(std::move(ledger));
}

SelectionResult brute_force_select(const WorldModel& model, const VectorXd& h,
                                   const ObservationBundle& bundle,
                                   const std::set<int>& required_sensors) {
  const int sensors = bundle.sensor_count();
  if (sensors > 16)
    throw ConfigError("brute_force_select: sensor count exceeds guard (16)");
  std::vector<int> free_ids;
  for (int i = 0; i < sensors; ++i)
    if (!required_sensors.count(i)) free_ids.push_back(i);

  const GaussianBelief pr = prior(model, h);
  std::vector<SelectionCandidate> ledger;
  const std::uint32_t limit = 1u << free_ids.size();
  for (std::uint32_t bits = 0; bits < limit; ++bits) {
    std::set<int> keep = required_sensors;
    for (int j = 0; j < static_cast<int>(free_ids.size()); ++j)
      if (bits & (1u << j)) keep.insert(free_ids[j]);
    if (keep.empty()) continue;
    SensorMask mask = subset_to_mask(keep, sensors);
    GaussianBelief belief = posterior(model, h, bundle, mask);
    ledger.push_back({std::move(mask), kl_surprise(belief, pr), std::move(belief)});
  }
  return finalize(std::move(ledger));
}

}  // namespace sgr
