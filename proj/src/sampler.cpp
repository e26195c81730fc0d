#include "scoredens/sampler.hpp"

#include <cmath>
#include <string>

#include "scoredens/errors.hpp"
#include "scoredens/mc.hpp"
#include "scoredens/parallel.hpp"

namespace scoredens {

namespace {

constexpr std::size_t kChunk = 512;
constexpr double kDivergence = 1e6;

/// Per-coordinate count/mean/M2, merged with Chan's pairwise update.
struct Moments {
  double count = 0.0;
  std::vector<double> mean;
  std::vector<double> m2;

  explicit Moments(std::size_t d = 0) : mean(d, 0.0), m2(d, 0.0) {}

  void push(std::span<const double> y) {
    count += 1.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double delta = y[i] - mean[i];
      mean[i] += delta / count;
      m2[i] += delta * (y[i] - mean[i]);
    }
  }

  void merge(const Moments& o) {
    if (o.count == 0.0) {
      return;
    }
    const double n = count + o.count;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double delta = o.mean[i] - mean[i];
      mean[i] += delta * o.count / n;
      m2[i] += o.m2[i] + delta * delta * count * o.count / n;
    }
    count = n;
  }
};

}  // namespace

SamplerRun reverse_sample(const GaussianMixture& m, const Schedule& s, std::size_t n, std::uint64_t seed,
                          const ScoreFn* score_fn, std::string source) {
  if (n < 1) {
    throw ParameterError("reverse_sample: need at least one particle");
  }
  ScoreFn exact;
  if (score_fn == nullptr) {
    exact = exact_score(m, s);
    score_fn = &exact;
  }
  const std::size_t d = m.dim();
  const std::size_t T = s.steps();
  std::vector<double> drift(T + 1), noise(T + 1), inv_root_alpha(T + 1);
  for (std::size_t t = 1; t <= T; ++t) {
    drift[t] = s.eta(t);
    noise[t] = std::sqrt(s.sigma2(t));
    inv_root_alpha[t] = 1.0 / std::sqrt(s.alpha(t));
  }

  SamplerRun run;
  run.source = std::move(source);
  run.n_samples = n;
  run.seed = seed;
  run.steps = T;
  run.points = PointSet(d, n);

  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  // chunk_moments[c][k] holds moments at level t = T - k.
  std::vector<std::vector<Moments>> chunk_moments(n_chunks, std::vector<Moments>(T + 1, Moments(d)));
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    const std::size_t last = std::min(n, first + kChunk);
    std::vector<double> z(d), score(d);
    auto& mom = chunk_moments[c];
    for (std::size_t p = first; p < last; ++p) {
      const CounterStream stream(seed, p);
      auto y = run.points.row(p);
      stream.normals(0, y);
      mom[0].push(y);
      for (std::size_t t = T; t >= 1; --t) {
        (*score_fn)(t, y, score);
        stream.normals(static_cast<std::uint64_t>(t * d), z);
        for (std::size_t i = 0; i < d; ++i) {
          y[i] = (y[i] + drift[t] * score[i] + noise[t] * z[i]) * inv_root_alpha[t];
          if (!std::isfinite(y[i]) || std::abs(y[i]) > kDivergence) {
            throw NumericError("reverse_sample: particle " + std::to_string(p) + " diverged at step " +
                               std::to_string(t));
          }
        }
        mom[T - t + 1].push(y);
      }
    }
  });

  run.trace.resize(T + 1);
  for (std::size_t k = 0; k <= T; ++k) {
    Moments total(d);
    for (std::size_t c = 0; c < n_chunks; ++c) {
      total.merge(chunk_moments[c][k]);
    }
    MomentRow& row = run.trace[k];
    row.t = T - k;
    row.mean = total.mean;
    if (n > 1) {
      std::vector<double> var(d);
      for (std::size_t i = 0; i < d; ++i) {
        var[i] = total.m2[i] / (total.count - 1.0);
      }
      row.variance = std::move(var);
    }
  }
  return run;
}

}  // namespace scoredens
