#include <doctest.h>

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "fixtures.hpp"
#include "mssar/errors.hpp"
#include "mssar/io.hpp"

using namespace mssar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mssar_io_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SimulatedPanel fixture_panel(std::size_t T = 30) {
  TruthSpec t;
  t.N = 5;
  t.T = T;
  t.M = 2;
  t.K = 2;
  t.xi = Matrix(2, 2);
  t.xi << 0.9, 0.1, 0.1, 0.9;
  t.link_prob = {0.3, 0.3};
  t.rhos = {0.6, 0.2};
  t.beta = Vector(2);
  t.beta << 1.0, -0.5;
  t.sigma2 = 0.25;
  t.seed = 3;
  return simulate_panel(t);
}

DrawStore short_run(const PanelData& d, std::size_t K = 2) {
  SamplerConfig cfg;
  cfg.n_iter = 60;
  cfg.n_burn = 20;
  cfg.thin = 4;
  cfg.seed = 5;
  return run_gibbs(d, Hyperparams::defaults(K, d.covariates()), cfg);
}

}  // namespace

TEST_CASE("17 significant digits") {
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(io::format_double(2.0) == "2");
  CHECK(std::stod(io::format_double(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("small panel CSV") {
  const PanelData d = io::parse_panel_csv(
      "period,unit,y,z1\n"
      "2020-02,b,4,0.5\n"
      "2020-01,a,1,1.5\n"
      "2020-01,b,2,2.5\n"
      "2020-02,a,3,-1\n");
  CHECK(d.periods() == 2);
  CHECK(d.units() == 2);
  CHECK(d.covariates() == 1);
  CHECK(d.period_labels == std::vector<std::string>{"2020-01", "2020-02"});
  CHECK(d.unit_labels == std::vector<std::string>{"b", "a"});  // first appearance
  CHECK(d.y(0, 0) == 2.0);
  CHECK(d.y(1, 1) == 3.0);
  CHECK(d.z[1](0, 0) == 0.5);
  CHECK_FALSE(d.basket_weights.has_value());
}

TEST_CASE("CSV errors") {
  const std::string head = "period,unit,y,z1\n";
  try {
    io::parse_panel_csv(head + "2020-01,a,1,1\n2020-01,b,2,1\n2020-02,a,3,1\n");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(2020-02, b)") != std::string::npos);
  }
  CHECK_THROWS_AS(io::parse_panel_csv(head + "2020-01,a,1\n"), DataError);               // ragged
  CHECK_THROWS_AS(io::parse_panel_csv(head + "2020-01,a,nan,1\n2020-01,b,1,1\n"), DataError);
  CHECK_THROWS_AS(io::parse_panel_csv(head + "2020-01,a,1,inf\n2020-01,b,1,1\n"), DataError);
  CHECK_THROWS_AS(io::parse_panel_csv(head + "2020-01,a,,1\n2020-01,b,1,1\n"), DataError);
  CHECK_THROWS_AS(io::parse_panel_csv(head + "Jan 2020,a,1,1\n"), DataError);
  CHECK_THROWS_AS(io::parse_panel_csv(head + "2020-01,a,1,1\n2020-01,a,2,1\n"), DataError);  // duplicate
  CHECK_THROWS_AS(io::parse_panel_csv("period,unit,y,x\n2020-01,a,1,1\n"), DataError);       // bad header
  CHECK_THROWS_AS(io::parse_panel_csv(""), DataError);
}

TEST_CASE("CSV round trip is exact") {
  const SimulatedPanel sim = fixture_panel();
  const fs::path dir = scratch("csv");
  io::write_panel_csv(sim.data, dir / "data.csv");
  const PanelData back = io::load_panel_csv(dir / "data.csv");
  CHECK(back.y == sim.data.y);
  for (std::size_t t = 0; t < sim.data.periods(); ++t) CHECK(back.z[t] == sim.data.z[t]);
  REQUIRE(back.basket_weights.has_value());
  CHECK(*back.basket_weights == *sim.data.basket_weights);
  CHECK(back.unit_labels == sim.data.unit_labels);
  CHECK(back.period_labels == sim.data.period_labels);
  CHECK(io::panel_csv_text(back) == slurp(dir / "data.csv"));
  fs::remove_all(dir);
}

TEST_CASE("config defaults") {
  for (const char* text : {"{}", "", "  \n"}) {
    const io::RunConfig c = io::parse_config(text);
    CHECK(c.model.K == 2);
    CHECK(c.model.grid_size == 100);
    CHECK(c.model.a_q == std::vector<double>{1.0});
    CHECK(c.model.a_rho == 1.0);
    CHECK(c.model.a_sigma == 0.01);
    CHECK(c.model.threshold == 0.68);
    CHECK(c.sampler.n_iter == 10000);
    CHECK(c.sampler.n_burn == 5000);
    CHECK(c.sampler.thin == 5);
  }
  const Hyperparams h = io::parse_config("{}").model.to_hyperparams(3);
  CHECK(h.Sigma_beta.isApprox(100.0 * Matrix::Identity(3, 3)));
  CHECK(h.mu_beta.isZero());
  CHECK(h.a_q == std::vector<double>{1.0, 1.0});
}

TEST_CASE("config errors carry the field path") {
  auto path_of = [](const std::string& text) {
    try {
      io::parse_config(text);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  CHECK(path_of(R"({"model": {"threshold": 1.5}})") == "model.threshold");
  CHECK(path_of(R"({"model": {"a_rhoo": 2}})") == "model.a_rhoo");
  CHECK(path_of(R"({"model": {"a_rho": -1}})") == "model.a_rho");
  CHECK(path_of(R"({"sampler": {"thin": "two"}})") == "sampler.thin");
  CHECK(path_of(R"({"sampler": {"n_iter": 10, "n_burn": 10}})").rfind("sampler", 0) == 0);
  CHECK(path_of(R"({"extra": 1})") == "extra");
  CHECK(path_of("{not json") == "$");
}

TEST_CASE("config serialisation is idempotent") {
  const io::RunConfig c = io::parse_config(R"({
    "data": "panel.csv", "out": "run",
    "model": {"K": 3, "a_q": [1, 2, 3], "b_q": 4, "a_rho": 2.5, "mu_beta": [0.5, -1],
              "Sigma_beta": [[2, 0.1], [0.1, 3]], "threshold": 0.75},
    "sampler": {"n_iter": 500, "n_burn": 100, "thin": 2, "seed": 42, "init": "prior-draw"},
    "dic_scan": {"k_min": 2, "k_max": 4}})");
  CHECK(c.model.K == 3);
  CHECK(c.model.b_q == std::vector<double>{4.0});
  CHECK(c.sampler.init == InitStrategy::PriorDraw);
  CHECK(c.k_max == 4);
  const std::string once = io::serialize_config(c);
  const io::RunConfig back = io::parse_config(once);
  CHECK(back == c);
  CHECK(io::serialize_config(back) == once);
}

TEST_CASE("truth files") {
  const TruthSpec t = io::parse_truth(R"({"N": 4, "T": 10, "M": 1, "K": 2, "xi": [[0.9, 0.1], [0.2, 0.8]],
      "link_prob": 0.25, "rhos": [0.5, 0.1], "beta": [1], "sigma2": 0.5, "seed": 9})");
  CHECK(t.link_prob == std::vector<double>{0.25, 0.25});
  CHECK(t.xi(1, 0) == 0.2);
  CHECK(t.seed == 9);
  CHECK_THROWS_AS(io::parse_truth(R"({"N": 4, "bogus": 1})"), ConfigError);
}

TEST_CASE("draws round trip") {
  const SimulatedPanel sim = fixture_panel();
  const DrawStore store = short_run(sim.data);
  REQUIRE(store.draws.size() == 10);
  const fs::path dir = scratch("draws");
  io::write_draws(store, dir);
  for (const char* f : {"manifest.json", "s.jsonl", "omega.jsonl", "rho.jsonl", "q.jsonl", "xi.jsonl", "beta.jsonl",
                        "sigma2.jsonl", "loglik.jsonl", "trace.jsonl"})
    CHECK(fs::exists(dir / f));
  const DrawStore back = io::read_draws(dir);
  CHECK(back == store);
  fs::remove_all(dir);
}

TEST_CASE("empty store writes only the manifest") {
  DrawStore empty;
  empty.seed = 3;
  empty.config_hash = "abcdef0123456789";
  const fs::path dir = scratch("empty");
  io::write_draws(empty, dir);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  CHECK(io::read_draws(dir) == empty);
  fs::remove_all(dir);
}

TEST_CASE("truncated draw files are detected") {
  const SimulatedPanel sim = fixture_panel();
  const fs::path dir = scratch("trunc");
  io::write_draws(short_run(sim.data), dir);
  std::string rho = slurp(dir / "rho.jsonl");
  rho.erase(rho.rfind('\n', rho.size() - 2) + 1);  // drop the last line
  std::ofstream(dir / "rho.jsonl", std::ios::binary | std::ios::trunc) << rho;
  try {
    io::read_draws(dir);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("rho.jsonl") != std::string::npos);
  }
  fs::remove(dir / "manifest.json");
  CHECK_THROWS_AS(io::read_draws(dir), DataError);
  fs::remove_all(dir);
}

TEST_CASE("report files") {
  const SimulatedPanel sim = fixture_panel(40);
  const DrawStore store = short_run(sim.data);
  const fs::path dir = scratch("report");
  const io::ReportFiles files = io::export_report(store, sim.data, dir);
  CHECK(fs::exists(files.state_probs));
  CHECK(fs::exists(files.network_stats));
  CHECK(fs::exists(files.summary));
  CHECK(files.edges.size() == 2);

  const std::string net = slurp(files.network_stats);
  CHECK(net.rfind("state,link_density,network_density_W,network_density_rhoW,rho_mean,rho_std\n", 0) == 0);

  for (const auto& path : files.effects) {
    if (path.empty()) continue;
    std::istringstream in(slurp(path));
    std::string line;
    std::getline(in, line);
    CHECK(line == "unit,direct,spillover,total");
    while (std::getline(in, line)) {
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      std::string unit;
      double a, b, c;
      row >> unit >> a >> b >> c;
      CHECK(std::abs(c - (a + b)) < 1e-12);
    }
  }

  // identical inputs give identical bytes
  const fs::path again = scratch("report2");
  io::export_report(store, sim.data, again);
  for (const auto& e : fs::directory_iterator(dir)) CHECK(slurp(e.path()) == slurp(again / e.path().filename()));
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("one-state report has an all-ones probability column") {
  const SimulatedPanel sim = fixture_panel(20);
  const fs::path dir = scratch("k1");
  const auto files = io::export_report(short_run(sim.data, 1), sim.data, dir);
  std::istringstream in(slurp(files.state_probs));
  std::string line;
  std::getline(in, line);
  CHECK(line == "period,state_1");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.substr(line.find(',') + 1) == "1");
    ++rows;
  }
  CHECK(rows == 20);
  fs::remove_all(dir);
}
