#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sgr/common.hpp"

namespace sgr {

struct MetricsRow {
  std::string agent;
  std::string kind;
  double intensity = 0.0;
  double proportion = 0.0;
  int failed = 0;
  double ret_mean = 0.0;
  double ret_std = 0.0;
  double surprise_mean = 0.0;
  std::optional<double> sel_acc;
  std::optional<double> rej_prec;
  std::optional<double> rej_rec;
  int episodes = 0;
};

inline const char* kMetricsCsvHeader =
    "agent,kind,intensity,proportion,failed,ret_mean,ret_std,surprise_mean,"
    "sel_acc,rej_prec,rej_rec,episodes";

// Spearman rank correlation with average-rank tie handling. Empty optional on
// degenerate (constant) input.
std::optional<double> metric_spearman(const std::vector<double>& xs,
                                      const std::vector<double>& ys);

// Shortest round-trip decimal representation.
std::string format_double(double v);

std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
void csv_emit(const std::vector<MetricsRow>& rows, const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace sgr
