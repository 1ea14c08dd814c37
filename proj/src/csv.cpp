#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <unordered_map>

#include "mssar/errors.hpp"
#include "mssar/io.hpp"

namespace mssar::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

double parse_cell(const std::string& cell, const std::string& period, const std::string& unit,
                  const std::string& column) {
  const std::string where = "(" + period + ", " + unit + ") column " + column;
  if (cell.empty()) throw DataError("missing cell at " + where);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size()) throw DataError("unparseable number '" + cell + "' at " + where);
  if (!std::isfinite(v)) throw DataError("non-finite value at " + where);
  return v;
}

}  // namespace

PanelData parse_panel_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError("panel CSV is empty");
  const auto header = split_fields(lines.front());
  if (header.size() < 3 || header[0] != "period" || header[1] != "unit" || header[2] != "y") {
    throw DataError("panel CSV header must start with period,unit,y");
  }
  bool has_weight = header.back() == "weight";
  const std::size_t M = header.size() - 3 - (has_weight ? 1 : 0);
  for (std::size_t m = 0; m < M; ++m) {
    if (header[3 + m] != "z" + std::to_string(m + 1)) {
      throw DataError("panel CSV header column " + std::to_string(4 + m) + " must be z" + std::to_string(m + 1));
    }
  }

  struct Row {
    double y;
    std::vector<double> z;
    double weight;
  };
  static const std::regex iso(R"(\d{4}(-\d{2}(-\d{2})?)?)");
  std::map<std::string, std::unordered_map<std::string, Row>> cells;
  std::vector<std::string> units;
  std::unordered_map<std::string, std::size_t> unit_index;

  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto fields = split_fields(lines[ln]);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(ln + 1) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    const std::string& period = fields[0];
    const std::string& unit = fields[1];
    if (!std::regex_match(period, iso)) {
      throw DataError("line " + std::to_string(ln + 1) + ": period '" + period + "' is not an ISO-8601 date");
    }
    if (unit.empty()) throw DataError("line " + std::to_string(ln + 1) + ": empty unit label");
    Row row;
    row.y = parse_cell(fields[2], period, unit, "y");
    for (std::size_t m = 0; m < M; ++m) row.z.push_back(parse_cell(fields[3 + m], period, unit, header[3 + m]));
    row.weight = has_weight ? parse_cell(fields.back(), period, unit, "weight") : 0.0;
    if (unit_index.emplace(unit, units.size()).second) units.push_back(unit);
    if (!cells[period].emplace(unit, std::move(row)).second) {
      throw DataError("duplicate row for (" + period + ", " + unit + ")");
    }
  }
  if (cells.empty()) throw DataError("panel CSV has no data rows");
  const std::size_t period_len = cells.begin()->first.size();
  for (const auto& [period, _] : cells) {
    if (period.size() != period_len) throw DataError("periods mix ISO-8601 precisions ('" + period + "')");
  }

  const auto T = static_cast<Eigen::Index>(cells.size());
  const auto N = static_cast<Eigen::Index>(units.size());
  PanelData data;
  data.y.resize(T, N);
  if (has_weight) data.basket_weights = Matrix(T, N);
  data.unit_labels = units;
  Eigen::Index t = 0;
  for (const auto& [period, row_map] : cells) {
    data.period_labels.push_back(period);
    Matrix z(N, static_cast<Eigen::Index>(M));
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto it = row_map.find(units[static_cast<std::size_t>(i)]);
      if (it == row_map.end()) {
        throw DataError("missing row for (" + period + ", " + units[static_cast<std::size_t>(i)] + ")");
      }
      data.y(t, i) = it->second.y;
      for (std::size_t m = 0; m < M; ++m) z(i, static_cast<Eigen::Index>(m)) = it->second.z[m];
      if (has_weight) (*data.basket_weights)(t, i) = it->second.weight;
    }
    data.z.push_back(std::move(z));
    ++t;
  }
  data.validate();
  return data;
}

PanelData load_panel_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open panel CSV " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_panel_csv(buf.str());
}

std::string panel_csv_text(const PanelData& data) {
  const std::size_t M = data.covariates();
  std::string out = "period,unit,y";
  for (std::size_t m = 0; m < M; ++m) out += ",z" + std::to_string(m + 1);
  if (data.basket_weights) out += ",weight";
  out += '\n';
  for (std::size_t t = 0; t < data.periods(); ++t) {
    const auto r = static_cast<Eigen::Index>(t);
    for (std::size_t i = 0; i < data.units(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      out += data.period_labels.at(t) + ',' + data.unit_labels.at(i) + ',' + format_double(data.y(r, c));
      for (std::size_t m = 0; m < M; ++m) out += ',' + format_double(data.z[t](c, static_cast<Eigen::Index>(m)));
      if (data.basket_weights) out += ',' + format_double((*data.basket_weights)(r, c));
      out += '\n';
    }
  }
  return out;
}

void write_panel_csv(const PanelData& data, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << panel_csv_text(data);
}

}  // namespace mssar::io
