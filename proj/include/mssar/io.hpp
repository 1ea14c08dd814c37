#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mssar/diagnostics.hpp"
#include "mssar/model.hpp"
#include "mssar/sampler.hpp"
#include "mssar/simulate.hpp"

namespace mssar::io {

namespace fs = std::filesystem;

// Formats a double with 17 significant digits ("%.17g").
std::string format_double(double v);

// ---- Panel CSV -------------------------------------------------------------
//
// Long format, one row per (period, unit):
//   period,unit,y,z1,...,zM[,weight]
// Periods are ISO-8601 strings and are sorted lexicographically; units keep
// their order of first appearance.

PanelData load_panel_csv(const fs::path& path);
PanelData parse_panel_csv(const std::string& text);
void write_panel_csv(const PanelData& data, const fs::path& path);
std::string panel_csv_text(const PanelData& data);

// ---- Run configuration -------------------------------------------------------

struct ModelSettings {
  std::size_t K = 2;
  std::vector<double> a_q{1.0};  // one value, or one per state
  std::vector<double> b_q{1.0};
  double a_rho = 1.0;
  double b_rho = 1.0;
  double a_xi = 1.0;
  std::optional<std::vector<double>> mu_beta;                // default 0
  std::optional<std::vector<std::vector<double>>> Sigma_beta;  // default 100 I
  double a_sigma = 0.01;
  double b_sigma = 0.01;
  std::size_t grid_size = 100;
  double threshold = 0.68;

  Hyperparams to_hyperparams(std::size_t M) const;
  bool operator==(const ModelSettings&) const = default;
};

struct ChainSettings {
  std::size_t n_iter = 10000;
  std::size_t n_burn = 5000;
  std::size_t thin = 5;
  std::uint64_t seed = 1;
  InitStrategy init = InitStrategy::KSegments;

  bool operator==(const ChainSettings&) const = default;
};

struct RunConfig {
  std::string data;
  std::string out;
  ModelSettings model;
  ChainSettings sampler;
  std::size_t k_min = 1;  // dic-scan range
  std::size_t k_max = 3;

  SamplerConfig sampler_config() const;
  // Numeric checks; throws ConfigError with a path such as "model.a_rho".
  void validate() const;
  // Also requires the data path, when set, to exist.
  void validate_paths() const;
  bool operator==(const RunConfig&) const = default;
};

// Parses a JSON document. Unknown keys and type errors are rejected with the
// path to the offending field.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const fs::path& path);
std::string serialize_config(const RunConfig& config);

TruthSpec parse_truth(const std::string& json_text);
TruthSpec load_truth(const fs::path& path);

// ---- Draws -----------------------------------------------------------------
//
// A directory holding manifest.json plus one JSON-lines file per family
// (s, omega, rho, q, xi, beta, sigma2, loglik, trace). Row counts are
// recorded in the manifest and checked on read.

void write_draws(const DrawStore& store, const fs::path& dir);
DrawStore read_draws(const fs::path& dir);

// ---- Reports ---------------------------------------------------------------

struct ReportFiles {
  fs::path state_probs;
  std::vector<fs::path> effects;  // empty path for a regime without qualifying periods
  fs::path network_stats;
  std::vector<fs::path> edges;
  fs::path summary;
};

// Relabels the draws, then writes state_probs.csv, effects_<k>.csv,
// network_stats.csv, edges_<k>.csv and summary.json into dir.
ReportFiles export_report(const DrawStore& store, const PanelData& data, const fs::path& dir,
                          double threshold = 0.68);

}  // namespace mssar::io
