#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mssar/errors.hpp"
#include "mssar/io.hpp"

namespace mssar::io {

using nlohmann::json;

namespace {

// Reads fields from one JSON object, remembering which keys were used so
// that leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
  }

  std::string field_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_number(*v, field_path(key));
  }

  void count(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) out = as_count(*v, field_path(key));
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(field_path(key), "expected a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void text(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(field_path(it.key()), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
  }

  static std::size_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) throw ConfigError(path, "expected a nonnegative integer");
    return v.get<std::size_t>();
  }

  static std::vector<double> as_vector(const json& v, const std::string& path) {
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError(path, "expected a number or an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

json parse_json(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
}

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

Hyperparams ModelSettings::to_hyperparams(std::size_t M) const {
  Hyperparams h = Hyperparams::defaults(K, M);
  auto per_state = [&](const std::vector<double>& v, const char* name) {
    if (v.size() == 1) return std::vector<double>(K, v.front());
    if (v.size() != K) throw ConfigError(std::string("model.") + name, "needs one value or one per state");
    return v;
  };
  h.a_q = per_state(a_q, "a_q");
  h.b_q = per_state(b_q, "b_q");
  h.a_rho = a_rho;
  h.b_rho = b_rho;
  h.a_xi = a_xi;
  h.a_sigma = a_sigma;
  h.b_sigma = b_sigma;
  h.grid_size = grid_size;
  h.harden_threshold = threshold;
  const auto m = static_cast<Eigen::Index>(M);
  if (mu_beta) {
    if (mu_beta->size() == 1) {
      h.mu_beta = Vector::Constant(m, mu_beta->front());
    } else if (mu_beta->size() == M) {
      h.mu_beta = Eigen::Map<const Vector>(mu_beta->data(), m);
    } else {
      throw ConfigError("model.mu_beta", "needs one value or M = " + std::to_string(M) + " values");
    }
  }
  if (Sigma_beta) {
    const auto& rows = *Sigma_beta;
    if (rows.size() == 1 && rows.front().size() == 1) {
      h.Sigma_beta = rows.front().front() * Matrix::Identity(m, m);
    } else {
      if (rows.size() != M) throw ConfigError("model.Sigma_beta", "must be a scalar or an M x M matrix");
      for (std::size_t i = 0; i < M; ++i) {
        if (rows[i].size() != M) throw ConfigError("model.Sigma_beta[" + std::to_string(i) + "]", "row must have M entries");
        for (std::size_t j = 0; j < M; ++j) h.Sigma_beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
  }
  try {
    h.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  return h;
}

SamplerConfig RunConfig::sampler_config() const {
  SamplerConfig c;
  c.n_iter = sampler.n_iter;
  c.n_burn = sampler.n_burn;
  c.thin = sampler.thin;
  c.seed = sampler.seed;
  c.init_strategy = sampler.init;
  c.rho_grid = SamplerConfig::midpoint_grid(model.grid_size);
  return c;
}

void RunConfig::validate() const {
  const auto& m = model;
  require(m.K >= 1, "model.K", "must be at least 1");
  auto check_shapes = [&](const std::vector<double>& v, const std::string& path) {
    require(v.size() == 1 || v.size() == m.K, path, "needs one value or one per state");
    for (std::size_t i = 0; i < v.size(); ++i) require(v[i] > 0.0, path + "[" + std::to_string(i) + "]", "must be positive");
  };
  check_shapes(m.a_q, "model.a_q");
  check_shapes(m.b_q, "model.b_q");
  require(m.a_rho > 0.0, "model.a_rho", "must be positive");
  require(m.b_rho > 0.0, "model.b_rho", "must be positive");
  require(m.a_xi > 0.0, "model.a_xi", "must be positive");
  require(m.a_sigma > 0.0, "model.a_sigma", "must be positive");
  require(m.b_sigma > 0.0, "model.b_sigma", "must be positive");
  require(m.grid_size >= 2, "model.grid_size", "must be at least 2");
  require(m.threshold >= 0.0 && m.threshold <= 1.0, "model.threshold", "must lie in [0,1]");
  if (m.Sigma_beta) {
    for (const auto& row : *m.Sigma_beta) require(!row.empty(), "model.Sigma_beta", "rows must be non-empty");
  }
  require(sampler.n_iter >= 1, "sampler.n_iter", "must be positive");
  require(sampler.n_burn < sampler.n_iter, "sampler.n_burn", "must be smaller than sampler.n_iter");
  require(sampler.thin >= 1, "sampler.thin", "must be at least 1");
  require(k_min >= 1, "dic_scan.k_min", "must be at least 1");
  require(k_min <= k_max, "dic_scan.k_max", "must be at least dic_scan.k_min");
}

void RunConfig::validate_paths() const {
  validate();
  if (!data.empty() && !fs::exists(data)) throw ConfigError("data", "file does not exist: " + data);
}

RunConfig parse_config(const std::string& json_text) {
  const json doc = parse_json(json_text);
  RunConfig cfg;
  ObjectReader root(doc, "");
  root.text("data", cfg.data);
  root.text("out", cfg.out);

  if (const json* model = root.find("model")) {
    ObjectReader r(*model, "model");
    auto& m = cfg.model;
    r.count("K", m.K);
    if (const json* v = r.find("a_q")) m.a_q = ObjectReader::as_vector(*v, "model.a_q");
    if (const json* v = r.find("b_q")) m.b_q = ObjectReader::as_vector(*v, "model.b_q");
    r.number("a_rho", m.a_rho);
    r.number("b_rho", m.b_rho);
    r.number("a_xi", m.a_xi);
    if (const json* v = r.find("mu_beta")) m.mu_beta = ObjectReader::as_vector(*v, "model.mu_beta");
    if (const json* v = r.find("Sigma_beta")) {
      if (v->is_number()) {
        m.Sigma_beta = std::vector<std::vector<double>>{{v->get<double>()}};
      } else if (v->is_array()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < v->size(); ++i) {
          const std::string p = "model.Sigma_beta[" + std::to_string(i) + "]";
          if (!(*v)[i].is_array()) throw ConfigError(p, "expected an array of numbers");
          rows.push_back(ObjectReader::as_vector((*v)[i], p));
        }
        m.Sigma_beta = std::move(rows);
      } else {
        throw ConfigError("model.Sigma_beta", "expected a number or a matrix");
      }
    }
    r.number("a_sigma", m.a_sigma);
    r.number("b_sigma", m.b_sigma);
    r.count("grid_size", m.grid_size);
    r.number("threshold", m.threshold);
    r.finish();
  }

  if (const json* sampler = root.find("sampler")) {
    ObjectReader r(*sampler, "sampler");
    auto& s = cfg.sampler;
    r.count("n_iter", s.n_iter);
    r.count("n_burn", s.n_burn);
    r.count("thin", s.thin);
    r.seed("seed", s.seed);
    std::string init;
    r.text("init", init);
    if (init == "k-segments") {
      s.init = InitStrategy::KSegments;
    } else if (init == "prior-draw") {
      s.init = InitStrategy::PriorDraw;
    } else if (!init.empty()) {
      throw ConfigError("sampler.init", "must be \"k-segments\" or \"prior-draw\"");
    }
    r.finish();
  }

  if (const json* scan = root.find("dic_scan")) {
    ObjectReader r(*scan, "dic_scan");
    r.count("k_min", cfg.k_min);
    r.count("k_max", cfg.k_max);
    r.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) { return parse_config(slurp(path)); }

std::string serialize_config(const RunConfig& cfg) {
  json doc;
  if (!cfg.data.empty()) doc["data"] = cfg.data;
  if (!cfg.out.empty()) doc["out"] = cfg.out;
  const auto& m = cfg.model;
  json model;
  model["K"] = m.K;
  model["a_q"] = m.a_q;
  model["b_q"] = m.b_q;
  model["a_rho"] = m.a_rho;
  model["b_rho"] = m.b_rho;
  model["a_xi"] = m.a_xi;
  if (m.mu_beta) model["mu_beta"] = *m.mu_beta;
  if (m.Sigma_beta) model["Sigma_beta"] = *m.Sigma_beta;
  model["a_sigma"] = m.a_sigma;
  model["b_sigma"] = m.b_sigma;
  model["grid_size"] = m.grid_size;
  model["threshold"] = m.threshold;
  doc["model"] = model;
  json sampler;
  sampler["n_iter"] = cfg.sampler.n_iter;
  sampler["n_burn"] = cfg.sampler.n_burn;
  sampler["thin"] = cfg.sampler.thin;
  sampler["seed"] = cfg.sampler.seed;
  sampler["init"] = cfg.sampler.init == InitStrategy::KSegments ? "k-segments" : "prior-draw";
  doc["sampler"] = sampler;
  doc["dic_scan"] = {{"k_min", cfg.k_min}, {"k_max", cfg.k_max}};
  return doc.dump(2) + "\n";
}

TruthSpec parse_truth(const std::string& json_text) {
  const json doc = parse_json(json_text);
  ObjectReader r(doc, "");
  TruthSpec t;
  r.count("N", t.N);
  r.count("T", t.T);
  r.count("M", t.M);
  r.count("K", t.K);
  if (const json* v = r.find("xi")) {
    if (!v->is_array()) throw ConfigError("xi", "expected a K x K matrix");
    t.xi.resize(static_cast<Eigen::Index>(v->size()), static_cast<Eigen::Index>(v->size()));
    for (std::size_t k = 0; k < v->size(); ++k) {
      const std::string p = "xi[" + std::to_string(k) + "]";
      const auto row = ObjectReader::as_vector((*v)[k], p);
      if (row.size() != v->size()) throw ConfigError(p, "row length must equal the number of rows");
      for (std::size_t l = 0; l < row.size(); ++l) t.xi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = row[l];
    }
  } else {
    t.xi = Matrix::Constant(static_cast<Eigen::Index>(t.K), static_cast<Eigen::Index>(t.K), 1.0 / static_cast<double>(t.K));
  }
  if (const json* v = r.find("link_prob")) {
    t.link_prob = ObjectReader::as_vector(*v, "link_prob");
    if (t.link_prob.size() == 1) t.link_prob.assign(t.K, t.link_prob.front());
  }
  if (const json* v = r.find("omegas")) {
    if (!v->is_array()) throw ConfigError("omegas", "expected an array of adjacency matrices");
    for (std::size_t k = 0; k < v->size(); ++k) {
      const std::string p = "omegas[" + std::to_string(k) + "]";
      const json& mat = (*v)[k];
      if (!mat.is_array()) throw ConfigError(p, "expected a square 0/1 matrix");
      const auto n = static_cast<Eigen::Index>(mat.size());
      Eigen::MatrixXi bits(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = ObjectReader::as_vector(mat[static_cast<std::size_t>(i)], p + "[" + std::to_string(i) + "]");
        if (static_cast<Eigen::Index>(row.size()) != n) throw ConfigError(p, "matrix must be square");
        for (Eigen::Index j = 0; j < n; ++j) bits(i, j) = static_cast<int>(row[static_cast<std::size_t>(j)]);
      }
      try {
        t.omegas.emplace_back(bits);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(p, e.what());
      }
    }
  }
  if (const json* v = r.find("rhos")) t.rhos = ObjectReader::as_vector(*v, "rhos");
  if (const json* v = r.find("beta")) {
    const auto b = ObjectReader::as_vector(*v, "beta");
    t.beta = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
  } else {
    t.beta = Vector::Zero(static_cast<Eigen::Index>(t.M));
  }
  r.number("sigma2", t.sigma2);
  if (const json* v = r.find("intercept")) {
    if (!v->is_boolean()) throw ConfigError("intercept", "expected true or false");
    t.intercept = v->get<bool>();
  }
  r.seed("seed", t.seed);
  r.finish();
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("$", e.what());
  }
  return t;
}

TruthSpec load_truth(const fs::path& path) { return parse_truth(slurp(path)); }

}  // namespace mssar::io
