#include "sgr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace sgr {

using nlohmann::json;

const char* agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::Base: return "base";
    case AgentKind::Augmented: return "augmented";
    case AgentKind::ConfidentRepresentation: return "confident_representation";
    case AgentKind::RejectionGate: return "rejection_gate";
    case AgentKind::BruteForce: return "brute_force";
  }
  throw ConfigError("unknown agent kind");
}

AgentKind agent_kind_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(AgentKind::BruteForce); ++i) {
    AgentKind k = static_cast<AgentKind>(i);
    if (name == agent_kind_name(k)) return k;
  }
  throw ConfigError("unknown agent kind: " + name);
}

void RunConfig::validate() const {
  env.validate();
  if (eval.agents.empty()) throw ConfigError("RunConfig: no agents to evaluate");
  if (eval.episodes < 1) throw ConfigError("RunConfig: episodes must be >= 1");
  if (collect_episodes < 2 || collect_steps < 3)
    throw ConfigError("RunConfig: collection too small to fit a model");
  const int sensors = static_cast<int>(env.sensors.size());
  if (!eval.target_all_sensors) {
    for (int f : eval.failed_counts)
      if (f < 0 || f >= sensors)
        throw ConfigError(
            "RunConfig: failed-sensor count must leave at least one clean sensor");
  }
  for (double v : eval.intensities)
    if (v < 0.0 || v > 1.0) throw ConfigError("RunConfig: intensity outside [0,1]");
  for (double v : eval.proportions)
    if (v < 0.0 || v > 1.0) throw ConfigError("RunConfig: proportion outside [0,1]");
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.env = default_env_config();
  cfg.eval.agents = {AgentKind::Base, AgentKind::RejectionGate};
  cfg.eval.kinds = {NoiseKind::Gaussian, NoiseKind::Glare};
  cfg.eval.intensities = {0.0, 0.25, 0.5, 0.625, 0.75, 0.875, 1.0};
  cfg.eval.proportions = {0.0, 0.25, 0.5, 0.75, 0.875, 1.0};
  cfg.eval.failed_counts = {0};
  cfg.eval.target_all_sensors = true;
  cfg.eval.episodes = 20;
  cfg.eval.steps = 200;
  return cfg;
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg = default_run_config();
  try {
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("env")) {
      const auto& e = j["env"];
      if (e.contains("episode_length"))
        cfg.env.episode_length = e["episode_length"].get<int>();
      if (e.contains("reward_scale"))
        cfg.env.reward_scale = e["reward_scale"].get<double>();
      if (e.contains("goal")) {
        const auto& g = e["goal"];
        for (int i = 0; i < std::min<int>(cfg.env.state_dim, g.size()); ++i)
          cfg.env.goal(i) = g[i].get<double>();
      }
    }
    if (j.contains("collect")) {
      const auto& c = j["collect"];
      if (c.contains("episodes")) cfg.collect_episodes = c["episodes"].get<int>();
      if (c.contains("steps")) cfg.collect_steps = c["steps"].get<int>();
      if (c.contains("dither")) cfg.collect_dither = c["dither"].get<double>();
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.contains("ridge")) cfg.ridge = m["ridge"].get<double>();
      if (m.contains("dropout_enabled"))
        cfg.dropout.enabled = m["dropout_enabled"].get<bool>();
      if (m.contains("mask_value"))
        cfg.dropout.mask_value = m["mask_value"].get<double>();
    }
    if (j.contains("policy")) {
      const auto& p = j["policy"];
      if (p.contains("kp")) cfg.policy.kp = p["kp"].get<double>();
      if (p.contains("kd")) cfg.policy.kd = p["kd"].get<double>();
    }
    if (j.contains("selection")) {
      const auto& s = j["selection"];
      if (s.contains("depth")) cfg.selection.depth = s["depth"].get<int>();
      if (s.contains("required"))
        for (const auto& id : s["required"])
          cfg.selection.required_sensors.insert(id.get<int>());
    }
    if (j.contains("gate")) {
      const auto& g = j["gate"];
      if (g.contains("score"))
        cfg.gate.score = g["score"].get<std::string>() == "surprise"
                             ? ScoreStrategy::Surprise
                             : ScoreStrategy::Reconstruction;
      if (g.contains("denoiser"))
        cfg.gate.denoiser = g["denoiser"].get<std::string>() == "prior_interpolation"
                                ? DenoiserStrategy::PriorInterpolation
                                : DenoiserStrategy::PosteriorDecode;
      if (g.contains("alpha")) cfg.gate.interp_alpha = g["alpha"].get<double>();
      if (g.contains("tau_d_equals_tau"))
        cfg.gate.tau_d_equals_tau = g["tau_d_equals_tau"].get<bool>();
    }
    if (j.contains("calibrate_steps"))
      cfg.calibrate_steps = j["calibrate_steps"].get<int>();
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      if (e.contains("agents")) {
        cfg.eval.agents.clear();
        for (const auto& a : e["agents"])
          cfg.eval.agents.push_back(agent_kind_from_name(a.get<std::string>()));
      }
      if (e.contains("kinds")) {
        cfg.eval.kinds.clear();
        for (const auto& k : e["kinds"])
          cfg.eval.kinds.push_back(noise_kind_from_name(k.get<std::string>()));
      }
      if (e.contains("intensities")) {
        cfg.eval.intensities.clear();
        for (const auto& v : e["intensities"])
          cfg.eval.intensities.push_back(v.get<double>());
      }
      if (e.contains("proportions")) {
        cfg.eval.proportions.clear();
        for (const auto& v : e["proportions"])
          cfg.eval.proportions.push_back(v.get<double>());
      }
      if (e.contains("failed")) {
        cfg.eval.failed_counts.clear();
        for (const auto& v : e["failed"]) cfg.eval.failed_counts.push_back(v.get<int>());
      }
      if (e.contains("target_all"))
        cfg.eval.target_all_sensors = e["target_all"].get<bool>();
      if (e.contains("episodes")) cfg.eval.episodes = e["episodes"].get<int>();
      if (e.contains("steps")) cfg.eval.steps = e["steps"].get<int>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// collection
// ---------------------------------------------------------------------------

namespace {

std::uint64_t store_fingerprint(const RunConfig& cfg) {
  std::uint64_t f = mix64(cfg.seed);
  f = mix64(f ^ static_cast<std::uint64_t>(cfg.collect_episodes));
  f = mix64(f ^ static_cast<std::uint64_t>(cfg.collect_steps));
  f = mix64(f ^ static_cast<std::uint64_t>(cfg.env.sensors.size()));
  f = mix64(f ^ static_cast<std::uint64_t>(cfg.env.state_dim));
  return f;
}

}  // namespace

TrajectoryStore run_collect(const RunConfig& cfg) {
  cfg.validate();
  TrajectoryStore store;
  store.layout = cfg.env.layout();
  store.gen = cfg.env.generating_system();
  store.fingerprint = store_fingerprint(cfg);

  EnvConfig env_cfg = cfg.env;
  env_cfg.episode_length = cfg.collect_steps;
  PolicyConfig explore = cfg.policy;
  explore.dither_std = cfg.collect_dither;

  for (int e = 0; e < cfg.collect_episodes; ++e) {
    Env env(env_cfg, Rng::derive_seed(cfg.seed, {10, static_cast<std::uint64_t>(e)}));
    Rng dither = Rng::derive(cfg.seed, {11, static_cast<std::uint64_t>(e)});
    EpisodeTrace trace;
    StepRecord rec = env.reset();
    for (int t = 0; t < cfg.collect_steps; ++t) {
      // exploration uses the true state; collection is harness-side
      const VectorXd action = feedback_action(explore, rec.hidden_state,
                                              cfg.env.goal, cfg.env.action_limit,
                                              &dither);
      trace.bundles.push_back(rec.bundle);
      trace.actions.push_back(action);
      rec = env.step(action);
      trace.rewards.push_back(rec.reward);
    }
    store.episodes.push_back(std::move(trace));
  }
  return store;
}

std::string store_to_jsonl(const TrajectoryStore& store) {
  std::ostringstream out;
  json header;
  header["fingerprint"] = store.fingerprint;
  json shapes = json::array();
  for (const auto& s : store.layout.shapes) shapes.push_back({s[0], s[1], s[2]});
  header["layout"] = shapes;
  json gen;
  auto mat = [](const MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto vec = [](const VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  gen["F"] = mat(store.gen.F);
  gen["G"] = mat(store.gen.G);
  gen["process_std"] = vec(store.gen.process_std);
  gen["start_mean"] = vec(store.gen.start_mean);
  gen["start_std"] = vec(store.gen.start_std);
  gen["H"] = json::array();
  gen["render_offset"] = json::array();
  gen["obs_std"] = store.gen.obs_std;
  for (std::size_t i = 0; i < store.gen.H.size(); ++i) {
    gen["H"].push_back(mat(store.gen.H[i]));
    gen["render_offset"].push_back(vec(store.gen.render_offset[i]));
  }
  header["gen"] = gen;
  out << header.dump() << "\n";

  for (const auto& ep : store.episodes) {
    json jep;
    jep["bundles"] = json::array();
    for (const auto& b : ep.bundles) {
      json jb;
      jb["step_index"] = b.step_index;
      jb["frames"] = json::array();
      for (const auto& f : b.frames) {
        json jf;
        jf["sensor_id"] = f.sensor_id;
        jf["shape"] = {f.rows, f.cols, f.channels};
        jf["values"] = json::array();
        for (int i = 0; i < f.values.size(); ++i) jf["values"].push_back(f.values(i));
        jb["frames"].push_back(std::move(jf));
      }
      jep["bundles"].push_back(std::move(jb));
    }
    jep["actions"] = json::array();
    for (const auto& a : ep.actions) {
      json ja = json::array();
      for (int i = 0; i < a.size(); ++i) ja.push_back(a(i));
      jep["actions"].push_back(std::move(ja));
    }
    jep["rewards"] = ep.rewards;
    out << jep.dump() << "\n";
  }
  return out.str();
}

TrajectoryStore store_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("store: empty file");
  json header = json::parse(line);
  TrajectoryStore store;
  store.fingerprint = header["fingerprint"].get<std::uint64_t>();
  for (const auto& s : header["layout"])
    store.layout.shapes.push_back({s[0].get<int>(), s[1].get<int>(), s[2].get<int>()});
  auto mat = [](const json& j) {
    const int rows = static_cast<int>(j.size());
    const int cols = rows == 0 ? 0 : static_cast<int>(j[0].size());
    MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    return m;
  };
  auto vec = [](const json& j) {
    VectorXd v(j.size());
    for (int i = 0; i < static_cast<int>(j.size()); ++i) v(i) = j[i].get<double>();
    return v;
  };
  const auto& gen = header["gen"];
  store.gen.F = mat(gen["F"]);
  store.gen.G = mat(gen["G"]);
  store.gen.process_std = vec(gen["process_std"]);
  store.gen.start_mean = vec(gen["start_mean"]);
  store.gen.start_std = vec(gen["start_std"]);
  for (const auto& h : gen["H"]) store.gen.H.push_back(mat(h));
  for (const auto& o : gen["render_offset"])
    store.gen.render_offset.push_back(vec(o));
  store.gen.obs_std = gen["obs_std"].get<std::vector<double>>();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json jep = json::parse(line);
    EpisodeTrace ep;
    for (const auto& jb : jep["bundles"]) {
      ObservationBundle b;
      b.step_index = jb["step_index"].get<int>();
      for (const auto& jf : jb["frames"]) {
        SensorFrame f;
        f.sensor_id = jf["sensor_id"].get<int>();
        f.rows = jf["shape"][0].get<int>();
        f.cols = jf["shape"][1].get<int>();
        f.channels = jf["shape"][2].get<int>();
        f.values = vec(jf["values"]);
        b.frames.push_back(std::move(f));
      }
      ep.bundles.push_back(std::move(b));
    }
    for (const auto& ja : jep["actions"]) ep.actions.push_back(vec(ja));
    ep.rewards = jep["rewards"].get<std::vector<double>>();
    store.episodes.push_back(std::move(ep));
  }
  return store;
}

// ---------------------------------------------------------------------------
// fitting
// ---------------------------------------------------------------------------

FittedModels run_fit(const RunConfig& cfg, const TrajectoryStore& store) {
  if (store.fingerprint != store_fingerprint(cfg))
    throw ConfigError("run_fit: store fingerprint does not match config");
  const FitDims dims{cfg.env.state_dim, cfg.env.state_dim};
  DropoutPolicy dropout = cfg.dropout;
  dropout.seed = cfg.seed;

  FittedModels models;
  models.base = fit(store, dropout, dims, cfg.ridge, cfg.seed);

  const bool want_augmented =
      std::find(cfg.eval.agents.begin(), cfg.eval.agents.end(),
                AgentKind::Augmented) != cfg.eval.agents.end();
  if (want_augmented) {
    // gaussian corruption (fixed intensity 0.3) on a random half of the steps
    TrajectoryStore noisy = store;
    Rng rng = Rng::derive(cfg.seed, {20});
    for (auto& ep : noisy.episodes) {
      for (auto& b : ep.bundles) {
        if (rng.uniform() < 0.5) continue;
        for (auto& f : b.frames) f = corrupt_gaussian(f, 0.3, rng);
      }
    }
    models.augmented = fit(noisy, dropout, dims, cfg.ridge, cfg.seed ^ 0xA06ULL);
  }
  return models;
}

std::vector<ObservationBundle> collect_clean_stream(const RunConfig& cfg,
                                                    int steps,
                                                    std::uint64_t seed,
                                                    double dither_std) {
  std::vector<ObservationBundle> out;
  out.reserve(steps);
  EnvConfig env_cfg = cfg.env;
  env_cfg.episode_length = cfg.eval.steps;
  PolicyConfig policy = cfg.policy;
  policy.dither_std = dither_std;
  std::uint64_t episode = 0;
  while (static_cast<int>(out.size()) < steps) {
    Env env(env_cfg, Rng::derive_seed(seed, {30, episode}));
    Rng dither = Rng::derive(seed, {31, episode});
    StepRecord rec = env.reset();
    for (int t = 0; t < env_cfg.episode_length && static_cast<int>(out.size()) < steps;
         ++t) {
      out.push_back(rec.bundle);
      const VectorXd action = feedback_action(policy, rec.hidden_state, cfg.env.goal,
                                              cfg.env.action_limit, &dither);
      rec = env.step(action);
    }
    ++episode;
  }
  return out;
}

GateConfig run_calibrate(const RunConfig& cfg, const WorldModel& model) {
  const auto stream = collect_clean_stream(cfg, cfg.calibrate_steps,
                                           Rng::derive_seed(cfg.seed, {40}), 0.0);
  GateConfig gate = calibrate(model, stream, cfg.gate.score);
  gate.denoiser = cfg.gate.denoiser;
  gate.interp_alpha = cfg.gate.interp_alpha;
  if (cfg.gate.tau_d_equals_tau) gate.tau_d = gate.tau;
  return gate;
}

// ---------------------------------------------------------------------------
// episode evaluation
// ---------------------------------------------------------------------------

EpisodeStats run_episode(const RunConfig& cfg, const WorldModel& model,
                         AgentKind agent, const GateConfig& gate,
                         NoiseKind kind, double intensity, double proportion,
                         const std::set<int>& targets,
                         std::uint64_t episode_seed) {
  const int steps = cfg.eval.steps;
  const int sensors = static_cast<int>(cfg.env.sensors.size());

  EnvConfig env_cfg = cfg.env;
  env_cfg.episode_length = steps;
  Env env(env_cfg, Rng::derive_seed(episode_seed, {1}));
  Rng noise_rng = Rng::derive(episode_seed, {2});
  Rng sched_rng = Rng::derive(episode_seed, {3});
  const std::vector<std::uint8_t> flags =
      targets.empty() ? std::vector<std::uint8_t>(steps, 0)
                      : schedule(proportion, steps, sched_rng);
  std::vector<LatencyStage> lat_stages;
  if (kind == NoiseKind::Latency)
    for (int i = 0; i < sensors; ++i) lat_stages.emplace_back(intensity);

  const SensorMask no_mask = SensorMask::none(sensors);
  VectorXd h = model.h0;
  VectorXd z_prev = prior(model, model.h0).mean;
  VectorXd a_prev = VectorXd::Zero(model.action_dim());
  GateState gstate = make_gate_state(model);

  EpisodeStats stats;
  StepRecord rec = env.reset();
  for (int t = 0; t < steps; ++t) {
    // corruption stage (harness-side; the agent sees only `obs`)
    ObservationBundle obs = rec.bundle;
    std::vector<std::uint8_t> corrupted(sensors, 0);
    const bool apply = flags[t] != 0 && intensity > 0.0;
    for (int i : targets) {
      if (kind == NoiseKind::Latency) {
        SensorFrame stale = lat_stages[i].push(obs.frames[i]);
        if (apply) {
          obs.frames[i] = std::move(stale);
          corrupted[i] = 1;
        }
      } else if (apply) {
        obs.frames[i] = corrupt_frame(kind, obs.frames[i], intensity, noise_rng);
        corrupted[i] = 1;
      }
    }
    const bool any_corrupted =
        std::any_of(corrupted.begin(), corrupted.end(), [](auto c) { return c != 0; });
    if (any_corrupted) ++stats.corrupted_steps;

    // agent update
    VectorXd z;
    if (agent == AgentKind::RejectionGate) {
      auto [dec, next] = gate_step(model, gate, gstate, obs, a_prev);
      gstate = next;
      h = dec.used_h;
      z = dec.used_z;
      stats.verdicts.push_back(dec.verdict);
      if (dec.verdict == GateVerdict::Reject) {
        ++stats.reject_steps;
        if (any_corrupted) ++stats.rejects_on_corrupted;
      }
    } else {
      h = sequence_step(model, h, z_prev, a_prev);
      if (agent == AgentKind::ConfidentRepresentation ||
          agent == AgentKind::BruteForce) {
        SelectionResult sel =
            agent == AgentKind::BruteForce
                ? brute_force_select(model, h, obs, cfg.selection.required_sensors)
                : select_representation(model, h, obs, cfg.selection);
        z = sel.chosen_z;
        for (int i = 0; i < sensors; ++i) {
          if (!corrupted[i]) continue;
          ++stats.corrupted_pairs;
          if (sel.chosen_mask.is_masked(i)) ++stats.excluded_pairs;
        }
      } else {
        z = posterior(model, h, obs, no_mask).mean;
      }
    }
    stats.surprise_sum += kl_surprise(posterior(model, h, obs, no_mask), prior(model, h));

    const VectorXd action =
        feedback_action(cfg.policy, z, cfg.env.goal, cfg.env.action_limit, nullptr);
    rec = env.step(action);
    stats.ret += rec.reward;
    stats.reward_trace.push_back(rec.reward);
    stats.z_trace.push_back(z);
    z_prev = z;
    a_prev = action;
    ++stats.steps;
  }
  return stats;
}

namespace {

struct Cell {
  AgentKind agent;
  NoiseKind kind;
  double intensity;
  double proportion;
  int failed;
};

std::set<int> sample_targets(const RunConfig& cfg, int failed,
                             std::uint64_t cell_noise_seed, int episode) {
  const int sensors = static_cast<int>(cfg.env.sensors.size());
  std::set<int> targets;
  if (cfg.eval.target_all_sensors) {
    for (int i = 0; i < sensors; ++i) targets.insert(i);
    return targets;
  }
  if (failed == 0) return targets;
  Rng rng = Rng::derive(cell_noise_seed, {7, static_cast<std::uint64_t>(episode)});
  std::vector<int> ids(sensors);
  for (int i = 0; i < sensors; ++i) ids[i] = i;
  for (int i = 0; i < failed; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(sensors - i));
    std::swap(ids[i], ids[j]);
    targets.insert(ids[i]);
  }
  return targets;
}

MetricsRow eval_cell(const RunConfig& cfg, const WorldModel& model,
                     const GateConfig& gate, const Cell& cell,
                     std::uint64_t cell_seed) {
  MetricsRow row;
  row.agent = agent_kind_name(cell.agent);
  row.kind = noise_kind_name(cell.kind);
  row.intensity = cell.intensity;
  row.proportion = cell.proportion;
  row.failed = cfg.eval.target_all_sensors
                   ? static_cast<int>(cfg.env.sensors.size())
                   : cell.failed;
  row.episodes = cfg.eval.episodes;

  double ret_sum = 0, ret_sq = 0, surprise_sum = 0;
  long total_steps = 0;
  long corrupted_pairs = 0, excluded_pairs = 0;
  long reject_steps = 0, rejects_on_corrupted = 0, corrupted_steps = 0;
  for (int e = 0; e < cfg.eval.episodes; ++e) {
    // episode seed is agent-independent: paired noise across agents
    const std::uint64_t ep_seed =
        Rng::derive_seed(cfg.seed, {50, static_cast<std::uint64_t>(cell.kind),
                                    static_cast<std::uint64_t>(cell.failed),
                                    std::bit_cast<std::uint64_t>(cell.intensity),
                                    std::bit_cast<std::uint64_t>(cell.proportion),
                                    static_cast<std::uint64_t>(e)});
    const std::set<int> targets = sample_targets(cfg, cell.failed, ep_seed, e);
    EpisodeStats st =
        run_episode(cfg, model, cell.agent, gate, cell.kind, cell.intensity,
                    cell.proportion, targets, ep_seed);
    ret_sum += st.ret;
    ret_sq += st.ret * st.ret;
    surprise_sum += st.surprise_sum;
    total_steps += st.steps;
    corrupted_pairs += st.corrupted_pairs;
    excluded_pairs += st.excluded_pairs;
    reject_steps += st.reject_steps;
    rejects_on_corrupted += st.rejects_on_corrupted;
    corrupted_steps += st.corrupted_steps;
  }
  const double n = cfg.eval.episodes;
  row.ret_mean = ret_sum / n;
  row.ret_std = std::sqrt(std::max(0.0, ret_sq / n - row.ret_mean * row.ret_mean));
  row.surprise_mean = surprise_sum / total_steps;
  if ((cell.agent == AgentKind::ConfidentRepresentation ||
       cell.agent == AgentKind::BruteForce) &&
      corrupted_pairs > 0)
    row.sel_acc = static_cast<double>(excluded_pairs) / corrupted_pairs;
  if (cell.agent == AgentKind::RejectionGate) {
    if (reject_steps > 0)
      row.rej_prec = static_cast<double>(rejects_on_corrupted) / reject_steps;
    if (corrupted_steps > 0)
      row.rej_rec = static_cast<double>(rejects_on_corrupted) / corrupted_steps;
  }
  return row;
}

}  // namespace

std::vector<MetricsRow> run_eval(const RunConfig& cfg, const FittedModels& models,
                                 const GateConfig& gate) {
  cfg.validate();
  std::vector<Cell> cells;
  for (AgentKind agent : cfg.eval.agents)
    for (NoiseKind kind : cfg.eval.kinds)
      for (double intensity : cfg.eval.intensities)
        for (double proportion : cfg.eval.proportions)
          for (int failed : cfg.eval.failed_counts)
            cells.push_back({agent, kind, intensity, proportion, failed});

  std::vector<MetricsRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(cells.size())));
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const WorldModel& model =
          (cells[i].agent == AgentKind::Augmented && models.augmented)
              ? *models.augmented
              : models.base;
      rows[i] = eval_cell(cfg, model, gate, cells[i], cfg.seed);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return rows;
}

// ---------------------------------------------------------------------------
// greedy vs brute-force comparison
// ---------------------------------------------------------------------------

std::vector<CompareRow> run_compare(const RunConfig& cfg, const WorldModel& model) {
  const int sensors = static_cast<int>(cfg.env.sensors.size());
  if (sensors > 12) throw ConfigError("run_compare: sensor count exceeds guard (12)");
  const double intensity = 0.75;
  const int episodes = 3;
  std::vector<CompareRow> out;

  for (NoiseKind kind : cfg.eval.kinds) {
    std::vector<double> gaps;
    int agree = 0, total = 0;
    int greedy_evals = 0, brute_evals = 0;
    for (int e = 0; e < episodes; ++e) {
      const std::uint64_t ep_seed =
          Rng::derive_seed(cfg.seed, {60, static_cast<std::uint64_t>(kind),
                                      static_cast<std::uint64_t>(e)});
      EnvConfig env_cfg = cfg.env;
      env_cfg.episode_length = cfg.eval.steps;
      Env env(env_cfg, Rng::derive_seed(ep_seed, {1}));
      Rng noise_rng = Rng::derive(ep_seed, {2});
      LatencyStage lat(intensity);
      VectorXd h = model.h0;
      VectorXd z_prev = prior(model, model.h0).mean;
      VectorXd a_prev = VectorXd::Zero(model.action_dim());
      const SensorMask no_mask = SensorMask::none(sensors);
      StepRecord rec = env.reset();
      for (int t = 0; t < cfg.eval.steps; ++t) {
        ObservationBundle obs = rec.bundle;
        if (kind == NoiseKind::Latency)
          obs.frames[0] = lat.push(obs.frames[0]);
        else
          obs.frames[0] = corrupt_frame(kind, obs.frames[0], intensity, noise_rng);

        h = sequence_step(model, h, z_prev, a_prev);
        SelectionResult greedy = select_representation(model, h, obs, cfg.selection);
        SelectionResult brute =
            brute_force_select(model, h, obs, cfg.selection.required_sensors);
        const double gs = kl_surprise(greedy.chosen_belief, prior(model, h));
        const double bs = kl_surprise(brute.chosen_belief, prior(model, h));
        gaps.push_back((gs - bs) / std::max(bs, 1e-12));
        if (greedy.chosen_mask == brute.chosen_mask) ++agree;
        ++total;
        greedy_evals = greedy.evaluations;
        brute_evals = brute.evaluations;

        z_prev = posterior(model, h, obs, no_mask).mean;
        const VectorXd action = feedback_action(cfg.policy, greedy.chosen_z,
                                                cfg.env.goal, cfg.env.action_limit,
                                                nullptr);
        rec = env.step(action);
        a_prev = action;
      }
    }
    std::sort(gaps.begin(), gaps.end());
    CompareRow row;
    row.kind = noise_kind_name(kind);
    row.intensity = intensity;
    row.median_rel_gap = gaps.empty() ? 0.0 : gaps[gaps.size() / 2];
    row.agreement = total > 0 ? static_cast<double>(agree) / total : 1.0;
    row.greedy_evals = greedy_evals;
    row.brute_evals = brute_evals;
    row.steps = total;
    out.push_back(std::move(row));
  }
  return out;
}

std::string compare_to_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  out << "kind,intensity,median_rel_gap,agreement,greedy_evals,brute_evals,steps\n";
  for (const auto& r : rows)
    out << r.kind << ',' << format_double(r.intensity) << ','
        << format_double(r.median_rel_gap) << ',' << format_double(r.agreement)
        << ',' << r.greedy_evals << ',' << r.brute_evals << ',' << r.steps << "\n";
  return out.str();
}

std::vector<MetricsRow> run_sweep(const RunConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const TrajectoryStore store = run_collect(cfg);
  const FittedModels models = run_fit(cfg, store);
  const GateConfig gate = run_calibrate(cfg, models.base);
  const std::vector<MetricsRow> rows = run_eval(cfg, models, gate);
  write_text_file(cfg.out_dir + "/model.json", model_to_json(models.base));
  csv_emit(rows, cfg.out_dir + "/metrics.csv");
  return rows;
}

}  // namespace sgr
