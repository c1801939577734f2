#pragma once

#include <utility>
#include <vector>

namespace geosync {

/// Monotonicity-preserving piecewise cubic Hermite interpolant with
/// Fritsch-Carlson tangent limiting. Exact at the knots; constant across
/// intervals whose endpoint values are equal; never overshoots the endpoint
/// value range on any single interval. Queries outside the knot span clamp
/// to the boundary values.
class PchipInterpolator {
 public:
  /// Requires >= 2 knots with strictly increasing times.
  PchipInterpolator(std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;

  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return v_; }
  const std::vector<double>& tangents() const { return m_; }

 private:
  std::vector<double> t_, v_, m_;
};

PchipInterpolator pchip_fit(const std::vector<std::pair<double, double>>& knots);

}  // namespace geosync
