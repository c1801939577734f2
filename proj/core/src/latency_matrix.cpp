#include "geosync/latency_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "geosync/error.hpp"
#include "geosync/hash.hpp"

namespace geosync {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

LatencyMatrix::LatencyMatrix(int n, std::vector<double> delay, std::vector<std::string> labels)
    : n_(n), delay_(std::move(delay)), labels_(std::move(labels)) {
  require(n_ >= 1, "latency matrix: need at least one node");
  require(delay_.size() == static_cast<std::size_t>(n_) * n_, "latency matrix: grid is not n x n");
  require(labels_.empty() || labels_.size() == static_cast<std::size_t>(n_),
          "latency matrix: label count does not match n");
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      double v = at(i, j);
      require(std::isfinite(v), "latency matrix: non-finite entry at (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
      require(v >= 0.0, "latency matrix: negative entry at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
    }
    double d = at(i, i);
    require(std::abs(d) <= 1e-9, "latency matrix: nonzero diagonal at node " + std::to_string(i));
    delay_[static_cast<std::size_t>(i) * n_ + i] = 0.0;
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

}  // namespace

LatencyMatrix LatencyMatrix::from_csv(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '#') continue;
    lines.push_back(line);
  }
  require(!lines.empty(), "matrix csv: empty input");

  std::vector<std::string> labels;
  std::size_t first_row = 0;
  {
    // A non-numeric first row is a header of node labels.
    auto cells = split_csv_line(lines[0]);
    double tmp;
    bool numeric = true;
    for (const auto& c : cells) numeric = numeric && parse_number(c, tmp);
    if (!numeric) {
      labels = cells;
      first_row = 1;
    }
  }
  require(first_row < lines.size(), "matrix csv: no data rows");

  std::vector<std::vector<double>> rows;
  for (std::size_t r = first_row; r < lines.size(); ++r) {
    auto cells = split_csv_line(lines[r]);
    std::vector<double> row;
    for (const auto& c : cells) {
      double v;
      require(parse_number(c, v), "matrix csv: non-numeric cell '" + c + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  for (const auto& row : rows)
    require(row.size() == n, "matrix csv: grid is not square");

  std::vector<double> flat;
  flat.reserve(n * n);
  for (const auto& row : rows) flat.insert(flat.end(), row.begin(), row.end());
  return LatencyMatrix(static_cast<int>(n), std::move(flat), std::move(labels));
}

LatencyMatrix LatencyMatrix::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("n") && j.contains("delay"), "matrix json: need {n, delay}");
  const int n = j.at("n").get<int>();
  std::vector<std::string> labels;
  if (j.contains("labels") && j.at("labels").is_array())
    labels = j.at("labels").get<std::vector<std::string>>();
  const auto& grid = j.at("delay");
  require(grid.is_array() && grid.size() == static_cast<std::size_t>(n),
          "matrix json: delay is not n rows");
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n) * n);
  for (const auto& row : grid) {
    require(row.is_array() && row.size() == static_cast<std::size_t>(n),
            "matrix json: row is not n wide");
    for (const auto& v : row) {
      require(v.is_number(), "matrix json: non-numeric entry");
      flat.push_back(v.get<double>());
    }
  }
  return LatencyMatrix(n, std::move(flat), std::move(labels));
}

LatencyMatrix LatencyMatrix::load_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  require(in.good(), "cannot open matrix file: " + p.string());
  if (p.extension() == ".json") {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("matrix json parse error: " + std::string(e.what()));
    }
    return from_json(j);
  }
  return from_csv(in);
}

void LatencyMatrix::to_csv(std::ostream& out) const {
  if (!labels_.empty()) {
    for (int j = 0; j < n_; ++j) out << (j ? "," : "") << labels_[static_cast<std::size_t>(j)];
    out << "\n";
  }
  out.precision(17);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) out << (j ? "," : "") << at(i, j);
    out << "\n";
  }
}

nlohmann::json LatencyMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < n_; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < n_; ++j) row.push_back(at(i, j));
    rows.push_back(std::move(row));
  }
  nlohmann::json j{{"n", n_}, {"delay", std::move(rows)}};
  if (!labels_.empty()) j["labels"] = labels_;
  return j;
}

double LatencyMatrix::max_off_diagonal() const {
  double m = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (i != j) m = std::max(m, at(i, j));
  return m;
}

LatencyMatrix LatencyMatrix::scaled(double f) const {
  std::vector<double> d = delay_;
  for (auto& v : d) v *= f;
  return LatencyMatrix(n_, std::move(d), labels_);
}

const LatencyMatrix& LatencyTrace::at_time(std::int64_t t_ms) const {
  if (matrices.empty()) throw ValidationError("trace: empty");
  auto it = std::upper_bound(timestamps_ms.begin(), timestamps_ms.end(), t_ms);
  if (it == timestamps_ms.begin()) return matrices.front();
  std::size_t idx = static_cast<std::size_t>(it - timestamps_ms.begin()) - 1;
  return matrices[idx];
}

void LatencyTrace::validate() const {
  require(timestamps_ms.size() == matrices.size(), "trace: timestamp/matrix count mismatch");
  require(!matrices.empty(), "trace: empty");
  const int n = matrices.front().size();
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    require(matrices[i].size() == n, "trace: inconsistent node count");
    if (i > 0)
      require(timestamps_ms[i] > timestamps_ms[i - 1], "trace: timestamps not strictly increasing");
  }
}

LatencyTrace LatencyTrace::load_jsonl(std::istream& in) {
  LatencyTrace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("trace jsonl parse error: " + std::string(e.what()));
    }
    require(j.contains("t_ms") && j.contains("delay"), "trace jsonl: need {t_ms, delay}");
    const auto& grid = j.at("delay");
    const int n = static_cast<int>(grid.size());
    nlohmann::json jm{{"n", n}, {"delay", grid}};
    trace.timestamps_ms.push_back(j.at("t_ms").get<std::int64_t>());
    trace.matrices.push_back(LatencyMatrix::from_json(jm));
  }
  trace.validate();
  return trace;
}

void LatencyTrace::save_jsonl(std::ostream& out) const {
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    nlohmann::json j{{"t_ms", timestamps_ms[i]}, {"delay", matrices[i].to_json().at("delay")}};
    out << j.dump() << "\n";
  }
}

LatencyTrace LatencyTrace::load_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  require(in.good(), "cannot open trace file: " + p.string());
  return load_jsonl(in);
}

}  // namespace geosync
