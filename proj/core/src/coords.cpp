#include "geosync/coords.hpp"

#include <cmath>

#include "geosync/error.hpp"

namespace geosync {

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

constexpr double kMinError = 1e-12;

}  // namespace

double coord_estimate(const NetCoordinate& a, const NetCoordinate& b) {
  require(a.position.size() == b.position.size(), "coords: dimension mismatch");
  double s = 0.0;
  for (std::size_t d = 0; d < a.position.size(); ++d) {
    const double diff = a.position[d] - b.position[d];
    s += diff * diff;
  }
  return std::sqrt(s) + a.height + b.height;
}

CoordSystem::CoordSystem(int n, CoordConfig cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(seed, /*stream=*/0x766976616c6469ULL) {
  require(n >= 1, "coords: need at least one node");
  require(cfg_.dim >= 1, "coords: dimension must be positive");
  coords_.resize(static_cast<std::size_t>(n));
  for (auto& c : coords_) c.position.assign(static_cast<std::size_t>(cfg_.dim), 0.0);
}

double CoordSystem::estimate(int i, int j) const {
  return coord_estimate(coords_[static_cast<std::size_t>(i)], coords_[static_cast<std::size_t>(j)]);
}

bool CoordSystem::update(int i, int j, double rtt_ms) {
  require(i != j, "coords: update needs distinct nodes");
  require(rtt_ms >= 0.0, "coords: negative rtt");
  if (rtt_ms == 0.0) return false;  // degenerate sample, skip

  NetCoordinate& ci = coords_[static_cast<std::size_t>(i)];
  const NetCoordinate& cj = coords_[static_cast<std::size_t>(j)];

  const double est = coord_estimate(ci, cj);
  const double rel_err = std::abs(est - rtt_ms) / rtt_ms;

  const double w = ci.error_estimate / (ci.error_estimate + cj.error_estimate);
  const double delta = cfg_.cc * w;
  const double force = rtt_ms - est;  // positive pushes i away from j

  std::vector<double> dir(ci.position.size());
  for (std::size_t d = 0; d < dir.size(); ++d) dir[d] = ci.position[d] - cj.position[d];
  const double dist = norm(dir);
  double height_part = 0.0;
  if (dist > 1e-12) {
    const double full = dist + ci.height + cj.height;
    for (auto& x : dir) x /= full;
    height_part = (ci.height + cj.height) / full;
  } else {
    // Coincident positions: seeded random unit direction, spatial only.
    double len = 0.0;
    while (len < 1e-9) {
      for (auto& x : dir) x = rng_.uniform(-1.0, 1.0);
      len = norm(dir);
    }
    for (auto& x : dir) x /= len;
  }

  for (std::size_t d = 0; d < dir.size(); ++d) ci.position[d] += delta * force * dir[d];
  ci.height = std::max(0.0, ci.height + delta * force * height_part);

  const double alpha = cfg_.ce * w;
  ci.error_estimate = rel_err * alpha + ci.error_estimate * (1.0 - alpha);
  if (ci.error_estimate > 1.0) ci.error_estimate = 1.0;
  if (ci.error_estimate < kMinError) ci.error_estimate = kMinError;
  return true;
}

LatencyMatrix CoordSystem::estimated_matrix() const {
  const int n = size();
  std::vector<double> flat(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) flat[static_cast<std::size_t>(i) * n + j] = estimate(i, j);
  return LatencyMatrix(n, std::move(flat));
}

CalibrationReport CoordSystem::calibrate(const std::vector<CalibrationSample>& samples,
                                         double tolerance) {
  for (const auto& s : samples) {
    require(s.i >= 0 && s.i < size() && s.j >= 0 && s.j < size(),
            "coords: calibration sample references unknown node");
    update(s.i, s.j, s.measured_ms);
  }
  CalibrationReport report;
  for (const auto& s : samples) {
    if (s.measured_ms <= 0.0) continue;
    const double est = estimate(s.i, s.j);
    const double rel = std::abs(est - s.measured_ms) / s.measured_ms;
    if (rel > tolerance) report.exceeding.push_back({s.i, s.j, s.measured_ms, est, rel});
  }
  return report;
}

nlohmann::json CoordSystem::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& c : coords_) {
    nodes.push_back({{"position", c.position}, {"height", c.height}, {"error", c.error_estimate}});
  }
  return nlohmann::json{{"dim", cfg_.dim}, {"nodes", std::move(nodes)}};
}

}  // namespace geosync
