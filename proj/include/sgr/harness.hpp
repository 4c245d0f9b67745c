#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sgr/env.hpp"
#include "sgr/metrics.hpp"
#include "sgr/noise.hpp"
#include "sgr/rejection.hpp"
#include "sgr/selection.hpp"
#include "sgr/world_model.hpp"

namespace sgr {

enum class AgentKind { Base, Augmented, ConfidentRepresentation, RejectionGate, BruteForce };

const char* agent_kind_name(AgentKind kind);
AgentKind agent_kind_from_name(const std::string& name);

struct GateOverrides {
  ScoreStrategy score = ScoreStrategy::Reconstruction;
  DenoiserStrategy denoiser = DenoiserStrategy::PosteriorDecode;
  double interp_alpha = 0.5;
  // Default for evaluation: tau_d = tau, the strict two-case configuration.
  bool tau_d_equals_tau = true;
};

struct EvalConfig {
  std::vector<AgentKind> agents;
  std::vector<NoiseKind> kinds;
  std::vector<double> intensities;
  std::vector<double> proportions;
  std::vector<int> failed_counts{0};
  // Whole-bundle corruption (every sensor targeted); otherwise a random
  // subset of failed_counts[i] sensors fails per episode, always leaving at
  // least one sensor clean.
  bool target_all_sensors = false;
  int episodes = 20;
  int steps = 200;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  EnvConfig env;
  PolicyConfig policy;           // evaluation policy, no dither
  double collect_dither = 0.3;   // exploration dither during collection
  int collect_episodes = 30;
  int collect_steps = 150;
  double ridge = 1e-4;
  DropoutPolicy dropout;
  SelectionConfig selection;
  GateOverrides gate;
  EvalConfig eval;
  int calibrate_steps = 600;

  void validate() const;
};

RunConfig default_run_config();
RunConfig run_config_from_json(const std::string& text);

// ---- pipeline stages ----

TrajectoryStore run_collect(const RunConfig& cfg);

std::string store_to_jsonl(const TrajectoryStore& store);
TrajectoryStore store_from_jsonl(const std::string& text);

struct FittedModels {
  WorldModel base;
  std::optional<WorldModel> augmented;
};

FittedModels run_fit(const RunConfig& cfg, const TrajectoryStore& store);

// Clean observation stream from the nominal environment (true-state feedback
// policy plus optional dither), for calibration and surprise sweeps.
std::vector<ObservationBundle> collect_clean_stream(const RunConfig& cfg,
                                                    int steps,
                                                    std::uint64_t seed,
                                                    double dither_std);

GateConfig run_calibrate(const RunConfig& cfg, const WorldModel& model);

// ---- episode evaluation ----

struct EpisodeStats {
  double ret = 0.0;
  double surprise_sum = 0.0;
  int steps = 0;
  // selection agents: corrupted (step, sensor) pairs and how many were masked
  int corrupted_pairs = 0;
  int excluded_pairs = 0;
  // gate agents
  int corrupted_steps = 0;
  int reject_steps = 0;
  int rejects_on_corrupted = 0;
  std::vector<double> reward_trace;
  std::vector<VectorXd> z_trace;
  std::vector<GateVerdict> verdicts;
};

// Runs one closed-loop episode. The corruption stream is derived from
// episode_seed only, so different agents under the same seed face paired
// noise. Pass an empty target set for no corruption.
EpisodeStats run_episode(const RunConfig& cfg, const WorldModel& model,
                         AgentKind agent, const GateConfig& gate,
                         NoiseKind kind, double intensity, double proportion,
                         const std::set<int>& targets,
                         std::uint64_t episode_seed);

std::vector<MetricsRow> run_eval(const RunConfig& cfg, const FittedModels& models,
                                 const GateConfig& gate);

// ---- greedy vs brute-force comparison ----

struct CompareRow {
  std::string kind;
  double intensity = 0.0;
  double median_rel_gap = 0.0;
  double agreement = 0.0;
  int greedy_evals = 0;
  int brute_evals = 0;
  int steps = 0;
};

std::vector<CompareRow> run_compare(const RunConfig& cfg, const WorldModel& model);
std::string compare_to_csv(const std::vector<CompareRow>& rows);

// collect + fit + calibrate + eval, emitting metrics.csv under cfg.out_dir.
// Returns the rows; the CSV bytes are deterministic for a fixed seed.
std::vector<MetricsRow> run_sweep(const RunConfig& cfg);

}  // namespace sgr
