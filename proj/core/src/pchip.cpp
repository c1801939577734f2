#include "geosync/pchip.hpp"

#include <algorithm>
#include <cmath>

#include "geosync/error.hpp"

namespace geosync {

PchipInterpolator::PchipInterpolator(std::vector<double> times, std::vector<double> values)
    : t_(std::move(times)), v_(std::move(values)) {
  require(t_.size() == v_.size(), "pchip: times/values size mismatch");
  require(t_.size() >= 2, "pchip: need at least 2 knots");
  const std::size_t n = t_.size();
  for (std::size_t i = 1; i < n; ++i)
    require(t_[i] > t_[i - 1], "pchip: times not strictly increasing");

  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = t_[k + 1] - t_[k];
    d[k] = (v_[k + 1] - v_[k]) / h[k];
  }

  m_.assign(n, 0.0);
  m_[0] = d[0];
  m_[n - 1] = d[n - 2];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    // Secant average where the data is locally monotone, zero at extrema.
    if (d[k - 1] * d[k] > 0.0)
      m_[k] = 0.5 * (d[k - 1] + d[k]);
    else
      m_[k] = 0.0;
  }

  // Fritsch-Carlson limiting: keep (alpha, beta) inside the circle of
  // radius 3 so each interval's cubic stays monotone.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (d[k] == 0.0) {
      m_[k] = 0.0;
      m_[k + 1] = 0.0;
      continue;
    }
    double alpha = m_[k] / d[k];
    double beta = m_[k + 1] / d[k];
    if (alpha < 0.0) {
      m_[k] = 0.0;
      alpha = 0.0;
    }
    if (beta < 0.0) {
      m_[k + 1] = 0.0;
      beta = 0.0;
    }
    const double r2 = alpha * alpha + beta * beta;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      m_[k] = tau * alpha * d[k];
      m_[k + 1] = tau * beta * d[k];
    }
  }
}

double PchipInterpolator::operator()(double t) const {
  if (t <= t_.front()) return v_.front();
  if (t >= t_.back()) return v_.back();
  // Largest knot index with t_[k] <= t.
  const std::size_t k = static_cast<std::size_t>(
      std::upper_bound(t_.begin(), t_.end(), t) - t_.begin() - 1);
  const double h = t_[k + 1] - t_[k];
  const double s = (t - t_[k]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * v_[k] + h10 * h * m_[k] + h01 * v_[k + 1] + h11 * h * m_[k + 1];
}

PchipInterpolator pchip_fit(const std::vector<std::pair<double, double>>& knots) {
  std::vector<double> t, v;
  t.reserve(knots.size());
  v.reserve(knots.size());
  for (const auto& [time, value] : knots) {
    require(value >= 0.0, "pchip: negative knot value");
    t.push_back(time);
    v.push_back(value);
  }
  return PchipInterpolator(std::move(t), std::move(v));
}

}  // namespace geosync
