#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "sgr/harness.hpp"

using namespace sgr;

namespace {

// Small but fit-worthy pipeline configuration for unit tests.
RunConfig tiny_config() {
  RunConfig cfg = default_run_config();
  cfg.seed = 11;
  cfg.collect_episodes = 6;
  cfg.collect_steps = 40;
  cfg.eval.episodes = 2;
  cfg.eval.steps = 30;
  cfg.eval.intensities = {0.0, 1.0};
  cfg.eval.proportions = {0.0, 1.0};
  cfg.eval.kinds = {NoiseKind::Glare};
  return cfg;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

TEST_CASE("agent kind names round-trip") {
  for (AgentKind k : {AgentKind::Base, AgentKind::Augmented,
                      AgentKind::ConfidentRepresentation, AgentKind::RejectionGate,
                      AgentKind::BruteForce}) {
    CHECK(agent_kind_from_name(agent_kind_name(k)) == k);
  }
  CHECK(std::string(agent_kind_name(AgentKind::ConfidentRepresentation)) ==
        "confident_representation");
  CHECK_THROWS_AS(agent_kind_from_name("psychic"), ConfigError);
}

TEST_CASE("spearman matches a rank-then-pearson oracle") {
  const std::vector<double> xs{0.0, 0.25, 0.5, 0.75, 1.0};
  CHECK(*metric_spearman(xs, xs) == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> neg{1.0, 0.75, 0.5, 0.25, 0.0};
  CHECK(*metric_spearman(xs, neg) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(!metric_spearman(xs, {1, 1, 1, 1, 1}).has_value());
  // tie handling: ys = (10, 20, 20, 30, 40) has average ranks
  // (1, 2.5, 2.5, 4, 5); Pearson against (1, 2, 3, 4, 5) = 9.5/sqrt(10*9.5)
  const std::vector<double> ties{10, 20, 20, 30, 40};
  CHECK(*metric_spearman(xs, ties) ==
        doctest::Approx(9.5 / std::sqrt(10.0 * 9.5)).epsilon(1e-12));
  CHECK_THROWS_AS(metric_spearman(xs, {1.0}), ContractError);
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.0, 1.0, -1.0, 0.1, 1.0 / 3.0, 1e-17, -123.456,
                   0.30000000000000004, 1e300}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("metrics CSV schema and round-trip values") {
  CHECK(metrics_to_csv({}) == std::string(kMetricsCsvHeader) + "\n");
  MetricsRow row;
  row.agent = "base";
  row.kind = "glare";
  row.intensity = 0.625;
  row.proportion = 0.875;
  row.failed = 2;
  row.ret_mean = -123.456;
  row.ret_std = 7.5;
  row.surprise_mean = 0.1;
  row.sel_acc = 0.9;
  row.episodes = 20;
  const std::string csv = metrics_to_csv({row});
  std::stringstream ss(csv);
  std::string header, line;
  std::getline(ss, header);
  CHECK(header == kMetricsCsvHeader);
  std::getline(ss, line);
  const auto fields = split_csv_line(line);
  REQUIRE(fields.size() == 12);
  CHECK(fields[0] == "base");
  CHECK(fields[1] == "glare");
  CHECK(std::strtod(fields[2].c_str(), nullptr) == 0.625);
  CHECK(std::strtod(fields[3].c_str(), nullptr) == 0.875);
  CHECK(fields[4] == "2");
  CHECK(std::strtod(fields[5].c_str(), nullptr) == -123.456);
  CHECK(std::strtod(fields[8].c_str(), nullptr) == 0.9);
  CHECK(fields[9].empty());   // absent rej_prec
  CHECK(fields[10].empty());  // absent rej_rec
  CHECK(fields[11] == "20");
}

TEST_CASE("config JSON: defaults, overrides and parse errors") {
  const RunConfig def = run_config_from_json("{}");
  CHECK(def.seed == default_run_config().seed);
  CHECK(def.eval.intensities == default_run_config().eval.intensities);
  const RunConfig cfg = run_config_from_json(R"({
    "seed": 99,
    "collect": {"episodes": 7, "steps": 50},
    "eval": {"agents": ["base", "rejection_gate"], "kinds": ["glare"],
             "episodes": 3}
  })");
  CHECK(cfg.seed == 99);
  CHECK(cfg.collect_episodes == 7);
  CHECK(cfg.eval.agents ==
        std::vector<AgentKind>{AgentKind::Base, AgentKind::RejectionGate});
  CHECK(cfg.eval.kinds == std::vector<NoiseKind>{NoiseKind::Glare});
  CHECK(cfg.eval.episodes == 3);
  CHECK_THROWS_AS(run_config_from_json("{nope"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"eval": {"agents": ["psychic"]}})"),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"eval": {"intensities": [2.0]}})"),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"eval": {"episodes": 0}})"),
                  ConfigError);
}

TEST_CASE("collect is deterministic and the store round-trips through JSONL") {
  const RunConfig cfg = tiny_config();
  const TrajectoryStore store = run_collect(cfg);
  CHECK(static_cast<int>(store.episodes.size()) == cfg.collect_episodes);
  CHECK(store.total_steps() == cfg.collect_episodes * cfg.collect_steps);
  for (const auto& ep : store.episodes)
    for (const auto& b : ep.bundles) CHECK(b.matches(store.layout));
  const std::string text = store_to_jsonl(store);
  CHECK(store_to_jsonl(run_collect(cfg)) == text);
  const TrajectoryStore back = store_from_jsonl(text);
  CHECK(store_to_jsonl(back) == text);
  CHECK(back.fingerprint == store.fingerprint);
  CHECK(back.episodes[2].bundles[5].frames[1].values ==
        store.episodes[2].bundles[5].frames[1].values);
  CHECK(back.episodes[0].rewards == store.episodes[0].rewards);
}

TEST_CASE("fit refuses a store collected under a different config") {
  const RunConfig cfg = tiny_config();
  TrajectoryStore store = run_collect(cfg);
  RunConfig other = cfg;
  other.seed = 12;
  CHECK_THROWS_AS(run_fit(other, store), ConfigError);
  store.fingerprint ^= 1;
  CHECK_THROWS_AS(run_fit(cfg, store), ConfigError);
}

TEST_CASE("pipeline: fit, calibrate and paired episodes") {
  const RunConfig cfg = tiny_config();
  const TrajectoryStore store = run_collect(cfg);
  const FittedModels models = run_fit(cfg, store);
  const GateConfig gate = run_calibrate(cfg, models.base);
  CHECK(gate.calibrated);
  CHECK(gate.tau > 0.0);

  // determinism of a full episode
  const std::set<int> targets{0, 1, 2, 3, 4, 5};
  const EpisodeStats a = run_episode(cfg, models.base, AgentKind::Base, gate,
                                     NoiseKind::Glare, 0.75, 0.5, targets, 123);
  const EpisodeStats b = run_episode(cfg, models.base, AgentKind::Base, gate,
                                     NoiseKind::Glare, 0.75, 0.5, targets, 123);
  CHECK(a.ret == b.ret);
  CHECK(a.surprise_sum == b.surprise_sum);
  REQUIRE(a.z_trace.size() == b.z_trace.size());
  for (std::size_t i = 0; i < a.z_trace.size(); ++i)
    CHECK(a.z_trace[i] == b.z_trace[i]);

  // a gate that can never fire reproduces the base agent bit for bit
  GateConfig inert = gate;
  inert.tau = std::numeric_limits<double>::infinity();
  inert.tau_d = inert.tau;
  const EpisodeStats g = run_episode(cfg, models.base, AgentKind::RejectionGate,
                                     inert, NoiseKind::Glare, 0.75, 0.5, targets,
                                     123);
  CHECK(g.ret == a.ret);
  for (std::size_t i = 0; i < a.z_trace.size(); ++i)
    CHECK(g.z_trace[i] == a.z_trace[i]);
  CHECK(g.reject_steps == 0);
}

TEST_CASE("eval emits one row per cell with the requested episode count") {
  RunConfig cfg = tiny_config();
  cfg.eval.agents = {AgentKind::Base, AgentKind::RejectionGate};
  const TrajectoryStore store = run_collect(cfg);
  const FittedModels models = run_fit(cfg, store);
  const GateConfig gate = run_calibrate(cfg, models.base);
  const auto rows = run_eval(cfg, models, gate);
  const std::size_t cells = cfg.eval.agents.size() * cfg.eval.kinds.size() *
                            cfg.eval.intensities.size() *
                            cfg.eval.proportions.size() *
                            cfg.eval.failed_counts.size();
  CHECK(rows.size() == cells);
  for (const auto& r : rows) {
    CHECK(r.episodes == cfg.eval.episodes);
    if (r.sel_acc) {
      CHECK(*r.sel_acc >= 0.0);
      CHECK(*r.sel_acc <= 1.0);
    }
    if (r.rej_prec) {
      CHECK(*r.rej_prec >= 0.0);
      CHECK(*r.rej_prec <= 1.0);
    }
  }
  // zero-noise cells: both agents see identical clean streams, returns close
  double base0 = 0, gate0 = 0;
  for (const auto& r : rows) {
    if (r.intensity == 0.0 && r.proportion == 0.0) {
      if (r.agent == "base") base0 = r.ret_mean;
      if (r.agent == "rejection_gate") gate0 = r.ret_mean;
    }
  }
  CHECK(std::abs(base0 - gate0) < 0.2 * std::abs(base0) + 5.0);
}

TEST_CASE("corruption labels never reach the agent-side modules") {
  // The selection and gate APIs take only model state and observations; the
  // harness keeps its ground-truth corruption log to itself. Feeding the same
  // frames with different harness-side labellings must give identical output.
  const RunConfig cfg = tiny_config();
  const TrajectoryStore store = run_collect(cfg);
  const FittedModels models = run_fit(cfg, store);
  const WorldModel& m = models.base;
  const ObservationBundle& bundle = store.episodes[0].bundles[3];

  CorruptionLog labeled;
  labeled.records.push_back({3, 0, NoiseKind::Glare, true});
  CorruptionLog empty;
  CHECK(labeled.sensor_corrupted(3, 0));
  CHECK(!empty.sensor_corrupted(3, 0));

  SelectionConfig sel;
  const SelectionResult r1 = select_representation(m, m.h0, bundle, sel);
  const SelectionResult r2 = select_representation(m, m.h0, bundle, sel);
  CHECK(r1.chosen_mask == r2.chosen_mask);
  CHECK(r1.chosen_z == r2.chosen_z);

  GateConfig gcfg;
  gcfg.tau = 1.0;
  gcfg.tau_d = 1.0;
  gcfg.calibrated = true;
  const GateState s = make_gate_state(m);
  const auto [d1, n1] = gate_step(m, gcfg, s, bundle, VectorXd::Zero(2));
  const auto [d2, n2] = gate_step(m, gcfg, s, bundle, VectorXd::Zero(2));
  CHECK(d1.used_z == d2.used_z);
  CHECK(d1.verdict == d2.verdict);
}

TEST_CASE("run_config validation") {
  RunConfig cfg = tiny_config();
  cfg.eval.agents.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.collect_episodes = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.eval.intensities = {1.5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.eval.target_all_sensors = false;
  cfg.eval.failed_counts = {6};  // would leave no clean sensor
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
