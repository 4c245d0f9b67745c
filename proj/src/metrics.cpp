#include "sgr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sgr {

namespace {

std::vector<double> average_ranks(const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (int t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    syy += ys[i] * ys[i];
    sxy += xs[i] * ys[i];
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  if (vx <= 0.0 || vy <= 0.0) return 2.0;  // sentinel: degenerate
  return cov / std::sqrt(vx * vy);
}

}  // namespace

std::optional<double> metric_spearman(const std::vector<double>& xs,
                                      const std::vector<double>& ys) {
  require(xs.size() == ys.size(), "metric_spearman: length mismatch");
  require(xs.size() >= 3, "metric_spearman: need at least 3 points");
  const double r = pearson(average_ranks(xs), average_ranks(ys));
  if (r > 1.5) return std::nullopt;
  return r;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << kMetricsCsvHeader << "\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const auto& r : rows) {
    out << r.agent << ',' << r.kind << ',' << format_double(r.intensity) << ','
        << format_double(r.proportion) << ',' << r.failed << ','
        << format_double(r.ret_mean) << ',' << format_double(r.ret_std) << ','
        << format_double(r.surprise_mean) << ',' << opt(r.sel_acc) << ','
        << opt(r.rej_prec) << ',' << opt(r.rej_rec) << ',' << r.episodes << "\n";
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void csv_emit(const std::vector<MetricsRow>& rows, const std::string& path) {
  write_text_file(path, metrics_to_csv(rows));
}

}  // namespace sgr
