// sgr: collect / fit / calibrate / eval / sweep / compare pipeline driver.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgr/harness.hpp"

namespace {

using namespace sgr;
using nlohmann::json;

RunConfig load_config(const std::string& path, std::uint64_t seed_override,
                      bool has_seed, const std::string& out_override) {
  RunConfig cfg =
      path.empty() ? default_run_config() : run_config_from_json(read_text_file(path));
  if (has_seed) cfg.seed = seed_override;
  if (!out_override.empty()) cfg.out_dir = out_override;
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  return cfg;
}

std::string gate_to_json(const GateConfig& g) {
  json j;
  j["tau"] = g.tau;
  j["tau_d"] = g.tau_d;
  j["score"] = g.score == ScoreStrategy::Surprise ? "surprise" : "reconstruction";
  j["denoiser"] = g.denoiser == DenoiserStrategy::PriorInterpolation
                      ? "prior_interpolation"
                      : "posterior_decode";
  j["alpha"] = g.interp_alpha;
  j["calibrated"] = g.calibrated;
  return j.dump(2) + "\n";
}

GateConfig gate_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("gate parse error: ") + e.what());
  }
  GateConfig g;
  g.tau = j.at("tau").get<double>();
  g.tau_d = j.at("tau_d").get<double>();
  g.score = j.value("score", "reconstruction") == "surprise"
                ? ScoreStrategy::Surprise
                : ScoreStrategy::Reconstruction;
  g.denoiser = j.value("denoiser", "posterior_decode") == "prior_interpolation"
                   ? DenoiserStrategy::PriorInterpolation
                   : DenoiserStrategy::PosteriorDecode;
  g.interp_alpha = j.value("alpha", 0.5);
  g.calibrated = j.value("calibrated", true);
  g.validate();
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surprise-guided robustness pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir, store_path, model_path, gate_path;
  std::uint64_t seed = 0;
  bool has_seed = false;
  app.add_option("--config", config_path, "run config JSON");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "master seed (overrides config)")
      ->each([&](const std::string&) { has_seed = true; });

  auto* c_collect = app.add_subcommand("collect", "collect clean trajectories")->fallthrough();
  auto* c_fit = app.add_subcommand("fit", "fit world model from a store")->fallthrough();
  c_fit->add_option("--store", store_path, "trajectory store JSONL");
  auto* c_cal = app.add_subcommand("calibrate", "calibrate the rejection gate")->fallthrough();
  c_cal->add_option("--model", model_path, "fitted model JSON");
  auto* c_eval = app.add_subcommand("eval", "evaluate agents on the noise grid")->fallthrough();
  c_eval->add_option("--model", model_path, "fitted model JSON");
  c_eval->add_option("--gate", gate_path, "calibrated gate JSON");
  auto* c_sweep = app.add_subcommand("sweep", "collect + fit + calibrate + eval")->fallthrough();
  auto* c_cmp = app.add_subcommand("compare", "greedy vs brute-force selection")->fallthrough();
  c_cmp->add_option("--model", model_path, "fitted model JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg = load_config(config_path, seed, has_seed, out_dir);

    if (c_collect->parsed()) {
      const TrajectoryStore store = run_collect(cfg);
      write_text_file(cfg.out_dir + "/trajectories.jsonl", store_to_jsonl(store));
      std::printf("collected %d episodes -> %s/trajectories.jsonl\n",
                  static_cast<int>(store.episodes.size()), cfg.out_dir.c_str());
    } else if (c_fit->parsed()) {
      const std::string path =
          store_path.empty() ? cfg.out_dir + "/trajectories.jsonl" : store_path;
      const TrajectoryStore store = store_from_jsonl(read_text_file(path));
      const FittedModels models = run_fit(cfg, store);
      write_text_file(cfg.out_dir + "/model.json", model_to_json(models.base));
      if (models.augmented)
        write_text_file(cfg.out_dir + "/model_augmented.json",
                        model_to_json(*models.augmented));
      std::printf("fitted model -> %s/model.json\n", cfg.out_dir.c_str());
    } else if (c_cal->parsed()) {
      const std::string path =
          model_path.empty() ? cfg.out_dir + "/model.json" : model_path;
      const WorldModel model = model_from_json(read_text_file(path));
      const GateConfig gate = run_calibrate(cfg, model);
      write_text_file(cfg.out_dir + "/gate.json", gate_to_json(gate));
      std::printf("calibrated gate tau=%.6g tau_d=%.6g -> %s/gate.json\n", gate.tau,
                  gate.tau_d, cfg.out_dir.c_str());
    } else if (c_eval->parsed()) {
      const std::string mpath =
          model_path.empty() ? cfg.out_dir + "/model.json" : model_path;
      const std::string gpath =
          gate_path.empty() ? cfg.out_dir + "/gate.json" : gate_path;
      FittedModels models;
      models.base = model_from_json(read_text_file(mpath));
      const GateConfig gate = gate_from_json(read_text_file(gpath));
      const auto rows = run_eval(cfg, models, gate);
      csv_emit(rows, cfg.out_dir + "/metrics.csv");
      std::printf("evaluated %d cells -> %s/metrics.csv\n",
                  static_cast<int>(rows.size()), cfg.out_dir.c_str());
    } else if (c_sweep->parsed()) {
      const auto rows = run_sweep(cfg);
      std::printf("sweep wrote %d rows -> %s/metrics.csv\n",
                  static_cast<int>(rows.size()), cfg.out_dir.c_str());
    } else if (c_cmp->parsed()) {
      const std::string path =
          model_path.empty() ? cfg.out_dir + "/model.json" : model_path;
      const WorldModel model = model_from_json(read_text_file(path));
      const auto rows = run_compare(cfg, model);
      write_text_file(cfg.out_dir + "/compare.csv", compare_to_csv(rows));
      std::printf("compared %d kinds -> %s/compare.csv\n",
                  static_cast<int>(rows.size()), cfg.out_dir.c_str());
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
