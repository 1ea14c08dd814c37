#include <fstream>

#include <json.hpp>

#include "mssar/errors.hpp"
#include "mssar/io.hpp"

namespace mssar::io {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string num(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

std::string label_of(const std::vector<std::string>& labels, std::size_t i, const char* prefix) {
  return i < labels.size() ? labels[i] : prefix + std::to_string(i + 1);
}

}  // namespace

ReportFiles export_report(const DrawStore& raw, const PanelData& data, const fs::path& dir,
                          double threshold) {
  if (raw.draws.empty()) throw DataError("cannot report on a store without retained draws");
  fs::create_directories(dir);
  const DrawStore store = relabel_draws(raw);
  const std::size_t K = store.states();
  const std::size_t N = data.units();

  const auto regimes = regime_estimates(store, threshold);
  const Matrix smoothed = smoothed_state_probabilities(store, data);
  const EffectsReport effects = state_averaged_effects(regimes, smoothed, data);
  const auto stats = network_stats(regimes);
  const double dic = dic5(store, data, threshold);
  const auto summary = posterior_summary(store);

  ReportFiles files;

  std::string probs = "period";
  for (std::size_t k = 0; k < K; ++k) probs += ",state_" + std::to_string(k + 1);
  probs += '\n';
  for (std::size_t t = 0; t < data.periods(); ++t) {
    probs += label_of(data.period_labels, t, "t");
    for (std::size_t k = 0; k < K; ++k) {
      probs += ',' + num(smoothed(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)));
    }
    probs += '\n';
  }
  files.state_probs = dir / "state_probs.csv";
  write_text(files.state_probs, probs);

  for (std::size_t k = 0; k < K; ++k) {
    const auto& se = effects.states[k];
    const fs::path path = dir / ("effects_" + std::to_string(k + 1) + ".csv");
    if (!se) {
      fs::remove(path);
      files.effects.emplace_back();
      continue;
    }
    std::string text = "unit,direct,spillover,total\n";
    for (std::size_t i = 0; i < N; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      text += label_of(data.unit_labels, i, "u") + ',' + num(se->average.direct(r)) + ',' +
              num(se->average.spillover(r)) + ',' + num(se->average.total(r)) + '\n';
    }
    write_text(path, text);
    files.effects.push_back(path);
  }

  std::string net = "state,link_density,network_density_W,network_density_rhoW,rho_mean,rho_std\n";
  for (std::size_t k = 0; k < K; ++k) {
    const auto& s = stats[k];
    net += std::to_string(k + 1) + ',' + num(s.link_density) + ',' + num(s.network_density_w) + ',' +
           num(s.network_density_rho_w) + ',' + num(s.rho_mean) + ',' + num(s.rho_std) + '\n';
  }
  files.network_stats = dir / "network_stats.csv";
  write_text(files.network_stats, net);

  for (std::size_t k = 0; k < K; ++k) {
    std::string text = "from,to,inclusion\n";
    const auto& r = regimes[k];
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        if (r.hardened(i, j) == 0) continue;
        text += label_of(data.unit_labels, i, "u") + ',' + label_of(data.unit_labels, j, "u") + ',' +
                num(r.inclusion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) + '\n';
      }
    }
    const fs::path path = dir / ("edges_" + std::to_string(k + 1) + ".csv");
    write_text(path, text);
    files.edges.push_back(path);
  }

  std::string js = "{\n";
  js += "  \"K\": " + std::to_string(K) + ",\n";
  js += "  \"draws\": " + std::to_string(store.draws.size()) + ",\n";
  js += "  \"seed\": " + std::to_string(store.seed) + ",\n";
  js += "  \"config_hash\": " + quoted(store.config_hash) + ",\n";
  js += "  \"threshold\": " + num(threshold) + ",\n";
  js += "  \"dic5\": " + num(dic) + ",\n";
  js += "  \"effects_periods\": [";
  for (std::size_t k = 0; k < K; ++k) {
    js += k ? ", " : "";
    js += effects.states[k] ? std::to_string(effects.states[k]->periods.size()) : "null";
  }
  js += "],\n  \"parameters\": [\n";
  for (std::size_t r = 0; r < summary.size(); ++r) {
    const auto& row = summary[r];
    js += "    {\"name\": " + quoted(row.name) + ", \"mean\": " + num(row.mean) + ", \"sd\": " + num(row.sd) +
          ", \"p05\": " + num(row.p05) + ", \"p50\": " + num(row.p50) + ", \"p95\": " + num(row.p95) + "}";
    js += r + 1 < summary.size() ? ",\n" : "\n";
  }
  js += "  ]\n}\n";
  files.summary = dir / "summary.json";
  write_text(files.summary, js);
  return files;
}

}  // namespace mssar::io
