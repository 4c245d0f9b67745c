#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sgr/selection.hpp"

using namespace sgr;

namespace {

// Scalar-latent model with M independent 1x1 sensors; evidence i is the raw
// frame value with noise variance vars[i].
WorldModel bank_model(const std::vector<double>& vars) {
  const int m = static_cast<int>(vars.size());
  WorldModel model;
  model.d = 1;
  model.k = 1;
  model.A = MatrixXd::Zero(1, 1);
  model.B = MatrixXd::Zero(1, 1);
  model.C = MatrixXd::Zero(1, 1);
  model.prior_weight = MatrixXd::Constant(1, 1, 1.0);
  model.prior_offset = VectorXd::Zero(1);
  model.prior_var = VectorXd::Constant(1, 0.25);
  for (int i = 0; i < m; ++i) {
    model.layout.shapes.push_back({1, 1, 1});
    model.encoders.push_back({MatrixXd::Constant(1, 1, 1.0), VectorXd::Zero(1),
                              VectorXd::Constant(1, vars[i])});
    model.decoders.push_back({MatrixXd::Zero(1, 2), VectorXd::Zero(1)});
  }
  model.reward_weight = VectorXd::Zero(2);
  model.h0 = VectorXd::Zero(1);
  return model;
}

ObservationBundle bank_bundle(const std::vector<double>& values) {
  ObservationBundle b;
  for (int i = 0; i < static_cast<int>(values.size()); ++i) {
    SensorFrame f;
    f.sensor_id = i;
    f.values = VectorXd::Constant(1, values[i]);
    b.frames.push_back(std::move(f));
  }
  return b;
}

}  // namespace

TEST_CASE("maskable_count") {
  CHECK(maskable_count(6, {}) == 5);
  CHECK(maskable_count(6, {0}) == 5);
  CHECK(maskable_count(6, {0, 3}) == 4);
  CHECK(maskable_count(1, {}) == 0);
}

TEST_CASE("dropout masks never cover the whole bundle and sensor 1 is never masked alone") {
  Rng rng(21);
  const auto masks = dropout_masks(1, 4, 16, rng);
  for (const auto& row : masks)
    for (const auto& m : row) CHECK(m.masked_count() == 0);
  Rng rng2(22);
  const auto masks2 = dropout_masks(5, 8, 32, rng2);
  for (const auto& row : masks2)
    for (const auto& m : row) CHECK(m.masked_count() < 5);
}

TEST_CASE("dropout masked-count is uniform over {0..M-1}") {
  const int sensors = 5, draws = 4000;
  Rng rng(33);
  const auto masks = dropout_masks(sensors, 1, draws, rng);
  std::vector<int> hist(sensors, 0);
  for (const auto& m : masks[0]) ++hist[m.masked_count()];
  const double expected = static_cast<double>(draws) / sensors;
  double chi2 = 0.0;
  for (int c : hist) chi2 += (c - expected) * (c - expected) / expected;
  // df = 4, critical value at alpha = 0.01
  CHECK(chi2 < 13.2767);
}

TEST_CASE("dropout masks which sensors uniformly given the count") {
  const int sensors = 4, draws = 8000;
  Rng rng(44);
  const auto masks = dropout_masks(sensors, 1, draws, rng);
  std::vector<int> per_sensor(sensors, 0);
  int singles = 0;
  for (const auto& m : masks[0]) {
    if (m.masked_count() != 1) continue;
    ++singles;
    for (int i = 0; i < sensors; ++i)
      if (m.is_masked(i)) ++per_sensor[i];
  }
  const double expected = static_cast<double>(singles) / sensors;
  double chi2 = 0.0;
  for (int c : per_sensor) chi2 += (c - expected) * (c - expected) / expected;
  // df = 3, critical value at alpha = 0.01
  CHECK(chi2 < 11.3449);
}

TEST_CASE("evaluation count equals M + min(maskable, depth) + 1") {
  for (int m = 1; m <= 8; ++m) {
    std::vector<double> vars(m, 0.01);
    const WorldModel model = bank_model(vars);
    std::vector<double> values(m);
    for (int i = 0; i < m; ++i) values[i] = 0.1 * i;
    const ObservationBundle bundle = bank_bundle(values);
    for (int depth = 0; depth <= 8; ++depth) {
      for (const std::set<int>& req :
           std::vector<std::set<int>>{{}, {0}, {0, m - 1}}) {
        SelectionConfig cfg;
        cfg.depth = depth;
        cfg.required_sensors = req;
        const SelectionResult res =
            select_representation(model, model.h0, bundle, cfg);
        const int maskable = maskable_count(m, req);
        CHECK(res.evaluations == m + std::min(maskable, depth) + 1);
        CHECK(static_cast<int>(res.ledger.size()) == res.evaluations);
      }
    }
    SelectionConfig deep;
    deep.depth = -1;  // as deep as allowed
    const SelectionResult res =
        select_representation(model, model.h0, bundle, deep);
    CHECK(res.evaluations == 2 * m);
  }
}

TEST_CASE("chosen candidate is the ledger minimum and beats full fusion") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_int(5));
    std::vector<double> vars(m), values(m);
    for (int i = 0; i < m; ++i) {
      vars[i] = 0.005 + rng.uniform() * 0.05;
      values[i] = rng.normal() * 0.5;
    }
    const WorldModel model = bank_model(vars);
    const ObservationBundle bundle = bank_bundle(values);
    SelectionConfig cfg;
    const SelectionResult res = select_representation(model, model.h0, bundle, cfg);
    double ledger_min = res.ledger[0].surprise;
    double full = -1.0;
    for (const auto& c : res.ledger) {
      ledger_min = std::min(ledger_min, c.surprise);
      if (c.mask.masked_count() == 0) full = c.surprise;
    }
    double chosen = -1.0;
    for (const auto& c : res.ledger)
      if (c.mask == res.chosen_mask) chosen = c.surprise;
    CHECK(chosen == ledger_min);
    CHECK(chosen <= full);
    // greedy never beats the exhaustive optimum
    const SelectionResult brute = brute_force_select(model, model.h0, bundle, {});
    double opt = brute.ledger[0].surprise;
    for (const auto& c : brute.ledger) opt = std::min(opt, c.surprise);
    CHECK(chosen >= opt - 1e-12);
  }
}

TEST_CASE("brute force enumerates every nonempty subset") {
  const WorldModel model = bank_model({0.01, 0.02, 0.03});
  const ObservationBundle bundle = bank_bundle({0.1, 0.2, 0.3});
  const SelectionResult res = brute_force_select(model, model.h0, bundle, {});
  CHECK(res.evaluations == 7);
  // hand enumeration: recompute each subset's surprise directly
  const GaussianBelief pr = prior(model, model.h0);
  for (int bits = 1; bits < 8; ++bits) {
    std::set<int> keep;
    for (int i = 0; i < 3; ++i)
      if (bits & (1 << i)) keep.insert(i);
    const SensorMask mask = subset_to_mask(keep, 3);
    const double s = kl_surprise(posterior(model, model.h0, bundle, mask), pr);
    bool found = false;
    for (const auto& c : res.ledger)
      if (c.mask == mask) {
        found = true;
        CHECK(c.surprise == s);
      }
    CHECK(found);
  }
  const SelectionResult req = brute_force_select(model, model.h0, bundle, {1});
  CHECK(req.evaluations == 4);
  for (const auto& c : req.ledger) CHECK(!c.mask.is_masked(1));
}

TEST_CASE("a wildly inconsistent sensor is isolated") {
  const WorldModel model = bank_model({0.01, 0.01, 0.01, 0.01});
  const ObservationBundle bundle = bank_bundle({0.05, -0.03, 4.0, 0.01});
  SelectionConfig cfg;
  const SelectionResult res = select_representation(model, model.h0, bundle, cfg);
  CHECK(res.chosen_mask.is_masked(2));
  CHECK(res.chosen_mask.masked_count() < 4);
  const SelectionResult brute = brute_force_select(model, model.h0, bundle, {});
  CHECK(brute.chosen_mask.is_masked(2));
}

TEST_CASE("selection is equivariant under sensor relabeling") {
  const std::vector<double> vars{0.01, 0.02, 0.04, 0.008};
  const std::vector<double> values{0.2, -0.4, 1.5, 0.1};
  const WorldModel model = bank_model(vars);
  const ObservationBundle bundle = bank_bundle(values);
  SelectionConfig cfg;
  const SelectionResult base = select_representation(model, model.h0, bundle, cfg);
  // reversal permutation
  std::vector<double> rvars(vars.rbegin(), vars.rend());
  std::vector<double> rvalues(values.rbegin(), values.rend());
  const WorldModel rmodel = bank_model(rvars);
  const SelectionResult perm =
      select_representation(rmodel, rmodel.h0, bank_bundle(rvalues), cfg);
  for (int i = 0; i < 4; ++i)
    CHECK(perm.chosen_mask.is_masked(3 - i) == base.chosen_mask.is_masked(i));
  CHECK(perm.chosen_belief.mean == base.chosen_belief.mean);
}

TEST_CASE("ties prefer fewer masked sensors, then the lexicographically lowest mask") {
  // identical sensors reading exactly the prior mean: every subset has the
  // same posterior mean; surprise differs only through variance contraction,
  // so equal-size subsets tie exactly
  const WorldModel model = bank_model({0.01, 0.01, 0.01});
  const ObservationBundle bundle = bank_bundle({0.0, 0.0, 0.0});
  const SelectionResult brute = brute_force_select(model, model.h0, bundle, {});
  int best_count = 3;
  double best = 1e300;
  for (const auto& c : brute.ledger)
    if (c.surprise < best - 1e-15) {
      best = c.surprise;
      best_count = c.mask.masked_count();
    }
  CHECK(brute.chosen_mask.masked_count() == best_count);
  // among equal-surprise, equal-size candidates the lowest mask vector wins
  std::vector<std::uint8_t> expect_lowest;
  bool first = true;
  for (const auto& c : brute.ledger) {
    if (c.surprise != best || c.mask.masked_count() != best_count) continue;
    if (first || c.mask.masked < expect_lowest) expect_lowest = c.mask.masked;
    first = false;
  }
  CHECK(brute.chosen_mask.masked == expect_lowest);
}

TEST_CASE("guards: bad required sensor and oversized brute force") {
  const WorldModel model = bank_model({0.01, 0.01});
  const ObservationBundle bundle = bank_bundle({0.0, 0.0});
  SelectionConfig cfg;
  cfg.required_sensors = {5};
  CHECK_THROWS_AS(select_representation(model, model.h0, bundle, cfg), ConfigError);
  std::vector<double> many(17, 0.01);
  const WorldModel big = bank_model(many);
  const ObservationBundle bb = bank_bundle(std::vector<double>(17, 0.0));
  CHECK_THROWS_AS(brute_force_select(big, big.h0, bb, {}), ConfigError);
}
