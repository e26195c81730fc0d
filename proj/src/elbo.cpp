#include "scoredens/elbo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scoredens/errors.hpp"
#include "scoredens/parallel.hpp"

namespace scoredens {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_dim(const GaussianMixture& m, std::span<const double> x, const char* what) {
  if (x.size() != m.dim()) {
    throw DimensionError(std::string(what) + ": point has dimension " + std::to_string(x.size()) + ", model has " +
                         std::to_string(m.dim()));
  }
}

std::uint64_t outer_seed(std::uint64_t seed, std::size_t j) { return mix64(seed ^ mix64(0xa5a5a5a5ULL + j)); }

}  // namespace

double kl_gaussian(std::span<const double> mu1, double var1, std::span<const double> mu2, double var2) {
  if (!(var1 > 0.0) || !(var2 > 0.0)) {
    throw ParameterError("kl_gaussian: variances must be positive");
  }
  if (mu1.size() != mu2.size()) {
    throw DimensionError("kl_gaussian: mean dimensions differ");
  }
  const double d = static_cast<double>(mu1.size());
  double dist2 = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    const double diff = mu2[i] - mu1[i];
    dist2 += diff * diff;
  }
  const double ratio = var1 / var2;
  // d (ratio - 1 - log ratio) is nonnegative; keep it from cancelling to < 0.
  const double shape = std::max(0.0, d * (ratio - 1.0 - std::log(ratio)));
  return 0.5 * (shape + dist2 / var2);
}

McEstimate vlb_term(const GaussianMixture& m, const Schedule& s, std::size_t t, std::span<const double> x0,
                    const McConfig& cfg, const EpsilonFn* eps_fn) {
  if (t < 2 || t > s.steps()) {
    throw RangeError("vlb_term: step " + std::to_string(t) + " outside [2, " + std::to_string(s.steps()) + "]");
  }
  check_dim(m, x0, "vlb_term");
  EpsilonFn exact;
  if (eps_fn == nullptr) {
    exact = exact_epsilon(m, s);
    eps_fn = &exact;
  }
  const double coeff = s.vlb_coefficient(t);
  McEstimate e = epsilon_residual(*eps_fn, s, t, x0, cfg.with_stream(cfg.stream_id + t));
  e.mean *= coeff;
  e.std_error *= coeff;
  return e;
}

McEstimate c0_term(const GaussianMixture& m, const Schedule& s, std::span<const double> x0, const McConfig& cfg,
                   const ScoreFn* score_fn) {
  check_dim(m, x0, "c0_term");
  const std::size_t d = m.dim();
  const double beta1 = s.beta(1);
  const double signal = std::sqrt(s.alpha(1));
  const double noise = std::sqrt(beta1);
  const GaussianMixture m1 = mixture_at(m, s.time(1));
  const double constant = -0.5 * static_cast<double>(d) * (kLog2Pi + std::log(beta1 / s.alpha(1)));
  std::vector<double> x(d);
  std::vector<double> score(d);
  return gaussian_expectation(
      [&](std::span<const double> eps) {
        for (std::size_t i = 0; i < d; ++i) {
          x[i] = signal * x0[i] + noise * eps[i];
        }
        if (score_fn != nullptr) {
          (*score_fn)(1, x, score);
        } else {
          m1.evaluate(x, score);
        }
        double r2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double r = eps[i] + noise * score[i];
          r2 += r * r;
        }
        return constant - 0.5 * r2;
      },
      d, cfg.with_stream(cfg.stream_id + 1));
}

double lt_term(const Schedule& s, std::span<const double> x0) {
  const double abar = s.alpha_bar(s.steps());
  if (!(abar < 1.0)) {
    throw ParameterError("lt_term: alpha_bar_T must be below 1");
  }
  const double d = static_cast<double>(x0.size());
  double norm2 = 0.0;
  for (double v : x0) {
    norm2 += v * v;
  }
  // With r = 1/(1 - abar): 0.5 [d (r - 1 - log r) + abar norm2 r].
  const double r_minus_1 = abar / (1.0 - abar);
  const double shape = d * (r_minus_1 + std::log1p(-abar));
  return 0.5 * (std::max(0.0, shape) + r_minus_1 * norm2);
}

ElboBreakdown elbo_total(const GaussianMixture& m, const Schedule& s, std::span<const double> x0, const McConfig& cfg,
                         const EpsilonFn* eps_fn) {
  const DensityReport r = log_density_discrete(m, s, x0, cfg, eps_fn);
  ElboBreakdown out;
  out.steps = r.steps;
  double se2 = 0.0;
  for (const auto& step : out.steps) {
    out.total_L += step.coefficient * step.term.mean;
    const double e = step.coefficient * step.term.std_error;
    se2 += e * e;
  }
  out.total_se = std::sqrt(se2);
  if (eps_fn == nullptr) {
    out.c0 = c0_term(m, s, x0, cfg);
  } else {
    const ScoreFn score = score_from_epsilon(*eps_fn, s);
    out.c0 = c0_term(m, s, x0, cfg, &score);
  }
  out.lt = lt_term(s, x0);
  return out;
}

McEstimate elbo_simple(const GaussianMixture& m, const Schedule& s, std::span<const double> x0, const McConfig& cfg,
                       const EpsilonFn* eps_fn) {
  const DensityReport r = log_density_discrete(m, s, x0, cfg, eps_fn);
  std::vector<McEstimate> terms;
  terms.reserve(r.steps.size());
  for (const auto& step : r.steps) {
    terms.push_back(step.term);
  }
  const std::vector<double> w(terms.size(), 1.0 / static_cast<double>(terms.size()));
  return weighted_sum(w, terms);
}

McEstimate kl_gap(const GaussianMixture& m, const Schedule& s, const McConfig& cfg, std::size_t n_outer,
                  std::uint64_t seed, const EpsilonFn* eps_fn) {
  if (n_outer < 2) {
    throw ParameterError("kl_gap: need at least two outer samples");
  }
  cfg.validate();
  EpsilonFn exact;
  if (eps_fn == nullptr) {
    exact = exact_epsilon(m, s);
    eps_fn = &exact;
  }
  const PointSet xs = sample0(m, n_outer, seed);
  std::vector<double> obs(n_outer);
  parallel_for(n_outer, [&](std::size_t j) {
    const DensityReport r = log_density_discrete(m, s, xs.row(j), cfg.with_seed(outer_seed(cfg.seed, j)), eps_fn);
    // L(x) = C0* - total, so L(x) + log q0(x) - C0* = log q0(x) - total.
    obs[j] = m.log_density(xs.row(j)) - r.total;
  });
  RunningStats stats;
  for (double v : obs) {
    stats.push(v);
  }
  return McEstimate{stats.mean(), stats.std_error(), n_outer * cfg.n_samples * s.steps()};
}

PredictorComparison optimal_predictor_check(const GaussianMixture& m, const Schedule& s, std::size_t t,
                                            std::span<const double> perturbation, const McConfig& cfg) {
  if (t < 1 || t > s.steps()) {
    throw RangeError("optimal_predictor_check: step index out of range");
  }
  if (perturbation.size() != m.dim()) {
    throw DimensionError("optimal_predictor_check: perturbation dimension differs from the model");
  }
  cfg.validate();
  const std::size_t d = m.dim();
  const std::size_t n = cfg.n_samples;
  const McConfig local = cfg.with_stream(cfg.stream_id + t);
  const PointSet xs = sample0(m, n, stream_key(local.seed, local.stream_id));
  const CounterStream noise_stream(local.seed, mix64(local.stream_id) ^ 0x5bd1e995ULL);
  const GaussianMixture mt = mixture_at(m, s.time(t));
  const double signal = std::sqrt(s.alpha_bar(t));
  const double noise = std::sqrt(s.time(t));

  std::vector<double> eps(d), xt(d), score(d);
  RunningStats base, pert, excess;
  auto residuals = [&](double sign, std::size_t j, double& b2, double& p2) {
    const auto x0 = xs.row(j);
    for (std::size_t i = 0; i < d; ++i) {
      xt[i] = signal * x0[i] + noise * sign * eps[i];
    }
    mt.evaluate(xt, score);
    b2 = 0.0;
    p2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double r = sign * eps[i] + noise * score[i];  // eps - eps*(x_t)
      b2 += r * r;
      const double q = r - perturbation[i];
      p2 += q * q;
    }
  };
  // Antithetic pairs share one x draw, so n/2 pairs use the first n/2 points.
  const std::size_t n_obs = cfg.antithetic ? n / 2 : n;
  for (std::size_t j = 0; j < n_obs; ++j) {
    noise_stream.normals(static_cast<std::uint64_t>(j * d), eps);
    double b2 = 0.0, p2 = 0.0;
    residuals(1.0, j, b2, p2);
    if (cfg.antithetic) {
      double b2m = 0.0, p2m = 0.0;
      residuals(-1.0, j, b2m, p2m);
      b2 = 0.5 * (b2 + b2m);
      p2 = 0.5 * (p2 + p2m);
    }
    base.push(b2);
    pert.push(p2);
    excess.push(p2 - b2);
  }
  auto est = [&](const RunningStats& r) { return McEstimate{r.mean(), r.std_error(), n}; };
  return PredictorComparison{est(base), est(pert), est(excess)};
}

McEstimate expected_elbo_shift(const GaussianMixture& m, const Schedule& s, std::span<const double> bias,
                               const McConfig& cfg) {
  std::vector<McEstimate> terms(s.steps());
  parallel_for(s.steps(), [&](std::size_t i) {
    terms[i] = optimal_predictor_check(m, s, i + 1, bias, cfg).excess;
  });
  return weighted_sum(elbo_weights(s), terms);
}

std::vector<double> elbo_weights(const Schedule& s) {
  std::vector<double> w(s.steps());
  for (std::size_t t = 1; t <= s.steps(); ++t) {
    w[t - 1] = s.elbo_coefficient(t);
  }
  return w;
}

McEstimate diffusion_loss(const GaussianMixture& conditional, const Schedule& s, std::span<const double> x,
                          std::span<const double> weights, const McConfig& cfg) {
  check_dim(conditional, x, "diffusion_loss");
  if (weights.size() != s.steps()) {
    throw ParameterError("diffusion_loss: expected " + std::to_string(s.steps()) + " weights, got " +
                         std::to_string(weights.size()));
  }
  cfg.validate();
  const EpsilonFn eps = exact_epsilon(conditional, s);
  std::vector<McEstimate> terms(s.steps());
  parallel_for(s.steps(), [&](std::size_t i) {
    const std::size_t t = i + 1;
    terms[i] = epsilon_residual(eps, s, t, x, cfg.with_stream(cfg.stream_id + t));
  });
  return weighted_sum(weights, terms);
}

McEstimate diffusion_loss(const LabeledFamily& family, const Schedule& s, std::string_view z, std::span<const double> x,
                          std::span<const double> weights, const McConfig& cfg) {
  return diffusion_loss(family.model(z), s, x, weights, cfg);
}

RiskReport empirical_risk(const Schedule& s, std::span<const double> data, std::span<const double> grid,
                          const McConfig& cfg) {
  if (data.empty()) {
    throw ParameterError("empirical_risk: empty dataset");
  }
  if (grid.empty()) {
    throw ParameterError("empirical_risk: empty parameter grid");
  }
  cfg.validate();
  const auto w = elbo_weights(s);
  RiskReport out;
  out.grid.assign(grid.begin(), grid.end());
  out.risk.resize(grid.size());
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const GaussianMixture model = GaussianMixture::gaussian({grid[g]}, 1.0);
    std::vector<McEstimate> losses(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
      // Datum i uses the same draws for every theta.
      const double x = data[i];
      losses[i] = diffusion_loss(model, s, std::span<const double>(&x, 1), w, cfg.with_seed(outer_seed(cfg.seed, i)));
    });
    const std::vector<double> avg(data.size(), inv_n);
    out.risk[g] = weighted_sum(avg, losses);
  }
  out.argmin = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (out.risk[g].mean < out.risk[out.argmin].mean) {
      out.argmin = g;
    }
  }
  out.argmin_theta = grid[out.argmin];
  double sum = 0.0;
  for (double v : data) {
    sum += v;
  }
  out.mle = sum * inv_n;
  double best = std::numeric_limits<double>::infinity();
  for (double th : grid) {
    if (std::abs(th - out.mle) < best) {
      best = std::abs(th - out.mle);
      out.mle_nearest_theta = th;
    }
  }
  return out;
}

}  // namespace scoredens
