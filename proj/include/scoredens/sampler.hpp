#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scoredens/mixture.hpp"
#include "scoredens/predictor.hpp"
#include "scoredens/schedule.hpp"

namespace scoredens {

/// Ensemble moments after the update into step t (t = T is the initial draw).
struct MomentRow {
  std::size_t t = 0;
  std::vector<double> mean;
  /// Componentwise sample variance; absent for a single particle.
  std::optional<std::vector<double>> variance;
};

struct SamplerRun {
  std::string source;  // exact | bias | scale | custom
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  PointSet points;  // Y_0
  std::vector<MomentRow> trace;  // rows for t = T, T-1, ..., 0
};

/// Reverse chain Y_{t-1} = (Y_t + eta_t s(t, Y_t) + sigma_t Z_t) / sqrt(alpha_t)
/// from Y_T ~ N(0, I), with eta_t = beta_t and sigma_t^2 = Schedule::sigma2(t).
/// Particle i draws from substream i of seed, so the output does not depend
/// on the thread count. score_fn defaults to exact_score(m, s). Throws
/// NumericError naming the step if a state turns non-finite or exceeds 1e6
/// in absolute value.
SamplerRun reverse_sample(const GaussianMixture& m, const Schedule& s, std::size_t n, std::uint64_t seed,
                          const ScoreFn* score_fn = nullptr, std::string source = "exact");

inline const std::vector<MomentRow>& moment_trace(const SamplerRun& run) { return run.trace; }

}  // namespace scoredens
