#include "mssar/cli.hpp"

#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mssar/errors.hpp"
#include "mssar/io.hpp"

namespace mssar {

namespace {

namespace fs = std::filesystem;

struct Overrides {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::size_t> iters;
  std::optional<std::size_t> burn;
  std::optional<std::size_t> thin;
  std::optional<double> threshold;
  std::optional<std::size_t> k_min;
  std::optional<std::size_t> k_max;
  std::string draws;
  bool progress = false;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--data", o.data, "panel CSV (period,unit,y,z1..zM[,weight])");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--k", o.k, "number of regimes");
  cmd->add_option("--iters", o.iters, "total Gibbs sweeps");
  cmd->add_option("--burn", o.burn, "discarded sweeps");
  cmd->add_option("--thin", o.thin, "keep every n-th sweep");
  cmd->add_option("--threshold", o.threshold, "edge hardening cutoff");
}

io::RunConfig resolve_config(const Overrides& o) {
  io::RunConfig cfg = o.config.empty() ? io::RunConfig{} : io::load_config(o.config);
  if (!o.data.empty()) cfg.data = o.data;
  if (!o.out.empty()) cfg.out = o.out;
  if (o.seed) cfg.sampler.seed = *o.seed;
  if (o.k) cfg.model.K = *o.k;
  if (o.iters) cfg.sampler.n_iter = *o.iters;
  if (o.burn) cfg.sampler.n_burn = *o.burn;
  if (o.thin) cfg.sampler.thin = *o.thin;
  if (o.threshold) cfg.model.threshold = *o.threshold;
  if (o.k_min) cfg.k_min = *o.k_min;
  if (o.k_max) cfg.k_max = *o.k_max;
  cfg.validate_paths();
  return cfg;
}

void require_set(const std::string& value, const std::string& what) {
  if (value.empty()) throw ConfigError(what, "is required (flag or config key)");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string truth_json(const SimulatedPanel& sim) {
  std::string js = "{\n  \"s\": [";
  for (std::size_t t = 0; t < sim.s.size(); ++t) js += (t ? "," : "") + std::to_string(sim.s[t] + 1);
  js += "],\n  \"omegas\": [";
  for (std::size_t k = 0; k < sim.omegas.size(); ++k) {
    const auto& e = sim.omegas[k].entries();
    js += k ? ",\n    [" : "\n    [";
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
      js += i ? ",[" : "[";
      for (Eigen::Index j = 0; j < e.cols(); ++j) js += (j ? "," : "") + std::to_string(e(i, j));
      js += "]";
    }
    js += "]";
  }
  js += "\n  ]\n}\n";
  return js;
}

double run_fit(const PanelData& data, const io::RunConfig& cfg, const fs::path& out, bool progress,
               std::ostream& err) {
  const Hyperparams hyper = cfg.model.to_hyperparams(data.covariates());
  ProgressHook hook;
  std::mutex mu;
  if (progress) {
    hook = [&](std::size_t sweep, std::size_t total) {
      if ((sweep + 1) % 1000 == 0 || sweep + 1 == total) {
        std::lock_guard lock(mu);
        err << "K=" << hyper.K << " sweep " << sweep + 1 << "/" << total << "\n";
      }
    };
  }
  const DrawStore store = run_gibbs(data, hyper, cfg.sampler_config(), hook);
  io::write_draws(store, out / "draws");
  io::export_report(store, data, out / "report", cfg.model.threshold);
  write_text(out / "config.json", io::serialize_config(cfg));
  return dic5(relabel_draws(store), data, cfg.model.threshold);
}

std::size_t thread_cap() {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MSSAR_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) cap = v;
  }
  return cap;
}

int run_command(const std::string& name, const Overrides& o, std::ostream& out, std::ostream& err) {
  if (name == "simulate") {
    require_set(o.config, "--config");
    require_set(o.out, "--out");
    TruthSpec truth = io::load_truth(o.config);
    if (o.seed) truth.seed = *o.seed;
    const SimulatedPanel sim = simulate_panel(truth);
    fs::create_directories(o.out);
    io::write_panel_csv(sim.data, fs::path(o.out) / "data.csv");
    write_text(fs::path(o.out) / "truth.json", truth_json(sim));
    out << "wrote " << (fs::path(o.out) / "data.csv").string() << "\n";
    return 0;
  }

  if (name == "validate") {
    io::RunConfig cfg = resolve_config(o);
    std::size_t M = 0;
    if (!cfg.data.empty()) {
      const PanelData data = io::load_panel_csv(cfg.data);
      M = data.covariates();
      out << "data ok: T=" << data.periods() << " N=" << data.units() << " M=" << M << "\n";
    }
    cfg.model.to_hyperparams(M);
    out << "config ok\n";
    return 0;
  }

  if (name == "fit") {
    const io::RunConfig cfg = resolve_config(o);
    require_set(cfg.data, "--data");
    require_set(cfg.out, "--out");
    const PanelData data = io::load_panel_csv(cfg.data);
    const double dic = run_fit(data, cfg, cfg.out, o.progress, err);
    out << "dic5 " << io::format_double(dic) << "\n";
    return 0;
  }

  if (name == "report") {
    const io::RunConfig cfg = resolve_config(o);
    require_set(cfg.data, "--data");
    require_set(cfg.out, "--out");
    require_set(o.draws, "--draws");
    const PanelData data = io::load_panel_csv(cfg.data);
    const DrawStore store = io::read_draws(o.draws);
    io::export_report(store, data, cfg.out, cfg.model.threshold);
    out << "wrote report to " << cfg.out << "\n";
    return 0;
  }

  if (name == "dic-scan") {
    const io::RunConfig base = resolve_config(o);
    require_set(base.data, "--data");
    require_set(base.out, "--out");
    const PanelData data = io::load_panel_csv(base.data);
    const std::size_t count = base.k_max - base.k_min + 1;
    std::vector<double> dics(count);
    std::vector<std::exception_ptr> failures(count);
    std::size_t next = 0;
    std::mutex mu;
    auto worker = [&] {
      for (;;) {
        std::size_t idx;
        {
          std::lock_guard lock(mu);
          if (next >= count) return;
          idx = next++;
        }
        try {
          io::RunConfig cfg = base;
          cfg.model.K = base.k_min + idx;
          cfg.sampler.seed = base.sampler.seed + 1000 * cfg.model.K;
          dics[idx] = run_fit(data, cfg, fs::path(base.out) / ("K" + std::to_string(cfg.model.K)), o.progress, err);
        } catch (...) {
          failures[idx] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const std::size_t threads = std::min(count, thread_cap());
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
    std::string table = "K,dic5\n";
    for (std::size_t i = 0; i < count; ++i) table += std::to_string(base.k_min + i) + ',' + io::format_double(dics[i]) + '\n';
    fs::create_directories(base.out);
    write_text(fs::path(base.out) / "dic.csv", table);
    out << table;
    return 0;
  }
  return 2;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const DataError*>(&e)) return "DataError";
  if (dynamic_cast<const SweepError*>(&e)) return "SweepError";
  if (dynamic_cast<const NumericalDegeneracy*>(&e)) return "NumericalDegeneracy";
  if (dynamic_cast<const UnderflowCollapse*>(&e)) return "UnderflowCollapse";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "InvalidArgument";
  return "Error";
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Markov-switching SAR panel estimation with unknown regime networks", "mssar"};
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic panel from a truth JSON");
  simulate->add_option("--config", o.config, "truth specification JSON")->required();
  simulate->add_option("--out", o.out, "output directory")->required();
  simulate->add_option("--seed", o.seed, "override the truth seed");

  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler and write draws plus a report");
  add_run_flags(fit, o);
  fit->add_flag("--progress", o.progress, "print progress to stderr");

  auto* report = app.add_subcommand("report", "rebuild the report from stored draws");
  add_run_flags(report, o);
  report->add_option("--draws", o.draws, "draws directory written by fit")->required();

  auto* scan = app.add_subcommand("dic-scan", "fit over a range of K and tabulate DIC5");
  add_run_flags(scan, o);
  scan->add_option("--k-min", o.k_min, "smallest K (default 1)");
  scan->add_option("--k-max", o.k_max, "largest K (default 3)");
  scan->add_flag("--progress", o.progress, "print progress to stderr");

  auto* validate = app.add_subcommand("validate", "check a data file and configuration");
  add_run_flags(validate, o);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run_command(name, o, out, err);
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", error_kind(e)}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}

}  // namespace mssar
