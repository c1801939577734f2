#include "geosync/trace_gen.hpp"

#include <vector>

#include "geosync/error.hpp"
#include "geosync/pchip.hpp"
#include "geosync/rng.hpp"

namespace geosync {

LatencyTrace gen_trace(const LatencyMatrix& base, const TraceGenConfig& cfg) {
  require(cfg.knots_per_pair >= 2, "gen_trace: need at least 2 knots per pair");
  require(cfg.jitter_scale >= 0.0 && cfg.jitter_scale <= 1.0, "gen_trace: jitter_scale in [0,1]");
  require(cfg.step_ms > 0, "gen_trace: step_ms must be positive");
  require(cfg.duration_ms >= 0, "gen_trace: negative duration");

  const int n = base.size();
  const int knots = cfg.knots_per_pair;
  CounterRng root(cfg.seed, /*stream=*/0x7261636567656eULL);

  // One interpolator per ordered pair.
  std::vector<PchipInterpolator> curves;
  curves.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        curves.push_back(PchipInterpolator({0.0, 1.0}, {0.0, 0.0}));
        continue;
      }
      CounterRng rng = root.substream(static_cast<std::uint64_t>(i) * n + j);
      std::vector<double> t(knots), v(knots);
      for (int k = 0; k < knots; ++k) {
        t[static_cast<std::size_t>(k)] =
            static_cast<double>(cfg.duration_ms) * k / (knots - 1);
        const double u = cfg.jitter_scale == 0.0
                             ? 0.0
                             : rng.uniform(-cfg.jitter_scale, cfg.jitter_scale);
        v[static_cast<std::size_t>(k)] = base.at(i, j) * (1.0 + u);
      }
      curves.emplace_back(std::move(t), std::move(v));
    }
  }

  LatencyTrace trace;
  for (std::int64_t t = 0; t <= cfg.duration_ms; t += cfg.step_ms) {
    std::vector<double> flat(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j)
          flat[static_cast<std::size_t>(i) * n + j] =
              curves[static_cast<std::size_t>(i) * n + j](static_cast<double>(t));
    trace.timestamps_ms.push_back(t);
    trace.matrices.emplace_back(n, std::move(flat), base.labels());
  }
  trace.validate();
  return trace;
}

}  // namespace geosync
