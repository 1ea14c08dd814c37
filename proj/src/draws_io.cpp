#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mssar/errors.hpp"
#include "mssar/io.hpp"

namespace mssar::io {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "mssar-draws/1";
const std::vector<std::string> kFamilies = {"s", "omega", "rho", "q", "xi", "beta", "sigma2", "loglik"};

// Numbers at 17 significant digits; non-finite values become null.
std::string num(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

std::string vec_text(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v(i));
  return out + "]";
}

std::string mat_text(const Matrix& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) out += (i ? "," : "") + vec_text(m.row(i).transpose());
  return out + "]";
}

std::string bits_text(const Eigen::MatrixXi& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += i ? ",[" : "[";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += (j ? "," : "") + std::to_string(m(i, j));
    out += "]";
  }
  return out + "]";
}

double as_double(const json& v) {
  if (v.is_null()) return -std::numeric_limits<double>::infinity();
  if (!v.is_number()) throw DataError("expected a number in draws file");
  return v.get<double>();
}

Vector to_vector(const json& arr) {
  if (!arr.is_array()) throw DataError("expected an array in draws file");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_double(arr[i]);
  return v;
}

Matrix to_matrix(const json& arr) {
  if (!arr.is_array()) throw DataError("expected a matrix in draws file");
  const auto rows = static_cast<Eigen::Index>(arr.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(arr[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vector r = to_vector(arr[static_cast<std::size_t>(i)]);
    if (r.size() != cols) throw DataError("ragged matrix in draws file");
    m.row(i) = r.transpose();
  }
  return m;
}

std::vector<json> read_lines(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing draws file " + path.filename().string());
  std::vector<json> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error&) {
      throw DataError(path.filename().string() + " line " + std::to_string(rows.size() + 1) + " is malformed");
    }
  }
  if (rows.size() != expected) {
    throw DataError(path.filename().string() + " has " + std::to_string(rows.size()) + " rows, manifest expects " +
                    std::to_string(expected));
  }
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

void write_draws(const DrawStore& store, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& family : kFamilies) fs::remove(dir / (family + ".jsonl"));
  fs::remove(dir / "trace.jsonl");

  const std::size_t n = store.draws.size();
  std::string manifest = "{\n";
  manifest += "  \"format\": \"" + std::string(kFormat) + "\",\n";
  manifest += "  \"seed\": " + std::to_string(store.seed) + ",\n";
  manifest += "  \"config_hash\": " + json(store.config_hash).dump() + ",\n";
  manifest += "  \"n_iter\": " + std::to_string(store.n_iter) + ",\n";
  manifest += "  \"n_burn\": " + std::to_string(store.n_burn) + ",\n";
  manifest += "  \"thin\": " + std::to_string(store.thin) + ",\n";
  manifest += "  \"draws\": " + std::to_string(n) + ",\n";
  manifest += "  \"trace\": " + std::to_string(store.trace.size()) + ",\n";
  manifest += "  \"iterations\": [";
  for (std::size_t d = 0; d < n; ++d) manifest += (d ? "," : "") + std::to_string(store.draws[d].iteration);
  manifest += "]\n}\n";

  if (n > 0) {
    std::string s, omega, rho, q, xi, beta, sigma2, loglik;
    for (const auto& draw : store.draws) {
      const auto& st = draw.state;
      s += "[";
      for (std::size_t t = 0; t < st.s.size(); ++t) s += (t ? "," : "") + std::to_string(st.s[t] + 1);
      s += "]\n";
      omega += "[";
      q += "[";
      for (std::size_t k = 0; k < st.states(); ++k) {
        omega += (k ? "," : "") + bits_text(st.omegas[k].entries());
        q += (k ? "," : "") + mat_text(st.q[k]);
      }
      omega += "]\n";
      q += "]\n";
      rho += vec_text(Eigen::Map<const Vector>(st.rhos.data(), static_cast<Eigen::Index>(st.rhos.size()))) + "\n";
      xi += mat_text(st.xi) + "\n";
      beta += vec_text(st.beta) + "\n";
      sigma2 += num(st.sigma2) + "\n";
      loglik += num(draw.loglik) + "\n";
    }
    write_text(dir / "s.jsonl", s);
    write_text(dir / "omega.jsonl", omega);
    write_text(dir / "rho.jsonl", rho);
    write_text(dir / "q.jsonl", q);
    write_text(dir / "xi.jsonl", xi);
    write_text(dir / "beta.jsonl", beta);
    write_text(dir / "sigma2.jsonl", sigma2);
    write_text(dir / "loglik.jsonl", loglik);
  }
  if (!store.trace.empty()) {
    std::string trace;
    for (double v : store.trace) trace += num(v) + "\n";
    write_text(dir / "trace.jsonl", trace);
  }
  write_text(dir / "manifest.json", manifest);
}

DrawStore read_draws(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) throw DataError("draws directory " + dir.string() + " has no manifest.json");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error&) {
    throw DataError("manifest.json is malformed");
  }
  if (manifest.value("format", "") != kFormat) throw DataError("manifest.json has an unknown format tag");

  DrawStore store;
  std::size_t n = 0;
  std::size_t trace_len = 0;
  std::vector<std::size_t> iterations;
  try {
    store.seed = manifest.at("seed").get<std::uint64_t>();
    store.config_hash = manifest.at("config_hash").get<std::string>();
    store.n_iter = manifest.at("n_iter").get<std::size_t>();
    store.n_burn = manifest.at("n_burn").get<std::size_t>();
    store.thin = manifest.at("thin").get<std::size_t>();
    n = manifest.at("draws").get<std::size_t>();
    trace_len = manifest.at("trace").get<std::size_t>();
    iterations = manifest.at("iterations").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest.json: ") + e.what());
  }
  if (iterations.size() != n) throw DataError("manifest iteration list disagrees with its draw count");

  if (trace_len > 0) {
    for (const auto& row : read_lines(dir / "trace.jsonl", trace_len)) store.trace.push_back(as_double(row));
  }
  if (n == 0) return store;

  const auto s = read_lines(dir / "s.jsonl", n);
  const auto omega = read_lines(dir / "omega.jsonl", n);
  const auto rho = read_lines(dir / "rho.jsonl", n);
  const auto q = read_lines(dir / "q.jsonl", n);
  const auto xi = read_lines(dir / "xi.jsonl", n);
  const auto beta = read_lines(dir / "beta.jsonl", n);
  const auto sigma2 = read_lines(dir / "sigma2.jsonl", n);
  const auto loglik = read_lines(dir / "loglik.jsonl", n);

  store.draws.reserve(n);
  for (std::size_t d = 0; d < n; ++d) {
    Draw draw;
    draw.iteration = iterations[d];
    auto& st = draw.state;
    try {
      for (const auto& label : s[d]) st.s.push_back(label.get<int>() - 1);
      const Vector r = to_vector(rho[d]);
      st.rhos.assign(r.data(), r.data() + r.size());
      const std::size_t K = st.rhos.size();
      if (omega[d].size() != K || q[d].size() != K) throw DataError("per-regime arrays disagree on K");
      for (std::size_t k = 0; k < K; ++k) {
        st.omegas.emplace_back(to_matrix(omega[d][k]).cast<int>().eval());
        st.q.push_back(to_matrix(q[d][k]));
      }
      st.xi = to_matrix(xi[d]);
      st.beta = to_vector(beta[d]);
      st.sigma2 = as_double(sigma2[d]);
      draw.loglik = as_double(loglik[d]);
    } catch (const json::exception& e) {
      throw DataError("draw " + std::to_string(d) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw DataError("draw " + std::to_string(d) + ": " + e.what());
    }
    store.draws.push_back(std::move(draw));
  }
  return store;
}

}  // namespace mssar::io
