#include "scoredens/density.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "scoredens/errors.hpp"
#include "scoredens/parallel.hpp"

namespace scoredens {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

enum class Role : std::uint64_t { lower = 1, upper = 2, node = 3 };

McConfig substream(const McConfig& cfg, Role role, std::uint64_t index) {
  return cfg.with_stream(mix64(mix64(cfg.stream_id) ^ mix64((static_cast<std::uint64_t>(role) << 48) + index)));
}

void check_open_unit(double t, const char* what) {
  if (!(t > 0.0 && t < 1.0)) {
    throw RangeError(std::string(what) + ": t = " + std::to_string(t) + " outside (0, 1)");
  }
}

void check_dim(const GaussianMixture& m, std::span<const double> x, const char* what) {
  if (x.size() != m.dim()) {
    throw DimensionError(std::string(what) + ": point has dimension " + std::to_string(x.size()) + ", model has " +
                         std::to_string(m.dim()));
  }
}

void finish(DensityReport& r) {
  r.total = r.recompute();
  r.total_std_error = r.recompute_std_error();
}

}  // namespace

std::string_view to_string(DensityMethod m) {
  switch (m) {
    case DensityMethod::discrete:
      return "discrete";
    case DensityMethod::smoothed:
      return "smoothed";
    case DensityMethod::ode:
      return "ode";
  }
  return "unknown";
}

double DensityReport::recompute() const {
  double acc = constant;
  for (const auto& r : steps) {
    acc -= r.coefficient * r.term.mean;
  }
  return acc;
}

double DensityReport::recompute_std_error() const {
  double acc = 0.0;
  for (const auto& r : steps) {
    const double e = r.coefficient * r.term.std_error;
    acc += e * e;
  }
  return std::sqrt(acc);
}

double gaussian_limit_constant(std::size_t d) { return -0.5 * (1.0 + kLog2Pi) * static_cast<double>(d); }

double discrete_constant(const Schedule& s, std::size_t d) {
  return -0.5 * (1.0 + kLog2Pi + std::log(s.beta(1))) * static_cast<double>(d);
}

McEstimate integrand_D(const GaussianMixture& m, double t, std::span<const double> x0, const McConfig& cfg) {
  check_open_unit(t, "integrand_D");
  check_dim(m, x0, "integrand_D");
  const std::size_t d = m.dim();
  const GaussianMixture mt = mixture_at(m, t);
  const double signal = std::sqrt(1.0 - t);
  const double noise = std::sqrt(t);
  const double cv = (1.0 - t) * (1.0 - t) / t;
  const double scale = 1.0 / (2.0 * (1.0 - t));
  std::vector<double> xt(d);
  std::vector<double> s(d);
  return gaussian_expectation(
      [&](std::span<const double> eps) {
        for (std::size_t i = 0; i < d; ++i) {
          xt[i] = signal * x0[i] + noise * eps[i];
        }
        mt.evaluate(xt, s);
        double r2 = 0.0;
        double e2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double r = eps[i] / noise + s[i];
          r2 += r * r;
          e2 += eps[i] * eps[i];
        }
        return scale * (r2 - cv * e2) - 0.5 * static_cast<double>(d);
      },
      d, cfg);
}

McEstimate conditional_log_density(const GaussianMixture& m, double t, std::span<const double> x0,
                                   const McConfig& cfg) {
  check_open_unit(t, "conditional_log_density");
  check_dim(m, x0, "conditional_log_density");
  const std::size_t d = m.dim();
  const GaussianMixture mt = mixture_at(m, t);
  const double signal = std::sqrt(1.0 - t);
  const double noise = std::sqrt(t);
  std::vector<double> xt(d);
  return gaussian_expectation(
      [&](std::span<const double> eps) {
        for (std::size_t i = 0; i < d; ++i) {
          xt[i] = signal * x0[i] + noise * eps[i];
        }
        return mt.log_density(xt);
      },
      d, cfg);
}

std::vector<double> logit_grid(double lo, double hi, std::size_t n_cells) {
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) {
    throw RangeError("logit_grid: need 0 < lo < hi < 1");
  }
  if (n_cells == 0) {
    throw ParameterError("logit_grid: need at least one cell");
  }
  const double a = std::log(lo / (1.0 - lo));
  const double b = std::log(hi / (1.0 - hi));
  std::vector<double> out(n_cells + 1);
  for (std::size_t i = 0; i <= n_cells; ++i) {
    const double u = a + (b - a) * static_cast<double>(i) / static_cast<double>(n_cells);
    out[i] = 1.0 / (1.0 + std::exp(-u));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

Quadrature midpoint_rule(std::span<const double> breakpoints) {
  if (breakpoints.size() < 2) {
    throw ParameterError("midpoint_rule: need at least two breakpoints");
  }
  Quadrature q;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double a = breakpoints[i];
    const double b = breakpoints[i + 1];
    if (!(b > a)) {
      throw ParameterError("midpoint_rule: breakpoints must increase strictly");
    }
    q.nodes.push_back(0.5 * (a + b));
    q.weights.push_back(b - a);
  }
  return q;
}

Theorem1Result theorem1_check(const GaussianMixture& m, std::span<const double> x0, double t1, double t2,
                              const McConfig& cfg, std::size_t n_quad, bool shared_noise) {
  check_open_unit(t1, "theorem1_check");
  check_open_unit(t2, "theorem1_check");
  if (!(t1 < t2)) {
    throw RangeError("theorem1_check: need t1 < t2");
  }
  check_dim(m, x0, "theorem1_check");
  const std::size_t d = m.dim();

  Theorem1Result out;
  if (shared_noise) {
    const GaussianMixture m1 = mixture_at(m, t1);
    const GaussianMixture m2 = mixture_at(m, t2);
    std::vector<double> x1(d);
    std::vector<double> x2(d);
    out.lhs = gaussian_expectation(
        [&](std::span<const double> eps) {
          for (std::size_t i = 0; i < d; ++i) {
            x1[i] = std::sqrt(1.0 - t1) * x0[i] + std::sqrt(t1) * eps[i];
            x2[i] = std::sqrt(1.0 - t2) * x0[i] + std::sqrt(t2) * eps[i];
          }
          return m2.log_density(x2) - m1.log_density(x1);
        },
        d, substream(cfg, Role::lower, 0));
  } else {
    const McEstimate lo = conditional_log_density(m, t1, x0, substream(cfg, Role::lower, 0));
    const McEstimate hi = conditional_log_density(m, t2, x0, substream(cfg, Role::upper, 0));
    out.lhs = McEstimate{hi.mean - lo.mean, std::hypot(hi.std_error, lo.std_error), hi.n_used + lo.n_used};
  }

  const auto q = midpoint_rule(logit_grid(t1, t2, n_quad));
  std::vector<McEstimate> node(q.nodes.size());
  parallel_for(q.nodes.size(), [&](std::size_t i) {
    node[i] = integrand_D(m, q.nodes[i], x0, substream(cfg, Role::node, i));
  });
  double var = 0.0;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.rhs += q.weights[i] * node[i].mean;
    var += q.weights[i] * q.weights[i] * node[i].std_error * node[i].std_error;
  }
  out.rhs_std_error = std::sqrt(var);
  out.gap = std::abs(out.lhs.mean - out.rhs);
  return out;
}

DensityReport log_density_smoothed(const GaussianMixture& m, std::span<const double> x0, std::span<const double> grid,
                                   const McConfig& cfg) {
  check_dim(m, x0, "log_density_smoothed");
  if (grid.empty() || !(grid.front() > 0.0) || !(grid.back() < 1.0)) {
    throw RangeError("log_density_smoothed: grid must lie in (0, 1)");
  }
  std::vector<double> breaks(grid.begin(), grid.end());
  breaks.push_back(1.0);
  const auto q = midpoint_rule(breaks);

  DensityReport r;
  r.x0.assign(x0.begin(), x0.end());
  r.method = DensityMethod::smoothed;
  r.constant = gaussian_limit_constant(m.dim());
  r.steps.resize(q.nodes.size());
  parallel_for(q.nodes.size(), [&](std::size_t i) {
    r.steps[i] = StepRecord{i + 1, q.nodes[i], q.weights[i], integrand_D(m, q.nodes[i], x0, substream(cfg, Role::node, i))};
  });
  finish(r);
  return r;
}

DensityReport log_density_smoothed(const GaussianMixture& m, std::span<const double> x0, double delta,
                                   const McConfig& cfg, std::size_t n_cells) {
  if (!(delta > 0.0 && delta < 0.5)) {
    throw RangeError("log_density_smoothed: delta must lie in (0, 0.5)");
  }
  const auto grid = logit_grid(delta, 1.0 - delta, n_cells);
  return log_density_smoothed(m, x0, grid, cfg);
}

DensityReport log_density_discrete(const GaussianMixture& m, const Schedule& s, std::span<const double> x0,
                                   const McConfig& cfg, const EpsilonFn* eps_fn) {
  check_dim(m, x0, "log_density_discrete");
  cfg.validate();
  EpsilonFn exact;
  if (eps_fn == nullptr) {
    exact = exact_epsilon(m, s);
    eps_fn = &exact;
  }
  DensityReport r;
  r.x0.assign(x0.begin(), x0.end());
  r.method = DensityMethod::discrete;
  r.constant = discrete_constant(s, m.dim());
  r.steps.resize(s.steps());
  parallel_for(s.steps(), [&](std::size_t i) {
    const std::size_t t = i + 1;
    r.steps[i] = StepRecord{t, s.time(t), s.elbo_coefficient(t),
                            epsilon_residual(*eps_fn, s, t, x0, cfg.with_stream(cfg.stream_id + t))};
  });
  finish(r);
  return r;
}

OdeResult ode_log_density(const GaussianMixture& m, std::span<const double> x0, std::size_t n_steps, double delta) {
  check_dim(m, x0, "ode_log_density");
  if (!(delta > 0.0 && delta < 0.5)) {
    throw RangeError("ode_log_density: delta must lie in (0, 0.5)");
  }
  if (n_steps < 10) {
    throw ParameterError("ode_log_density: need at least 10 steps");
  }
  const std::size_t d = m.dim();
  const double dd = static_cast<double>(d);
  const double u_end = -std::log(delta);
  const double h = u_end / static_cast<double>(n_steps);

  // In u = -log(1 - t): dx/du = -(x + s_t(x)) / 2, dI/du = (d + tr_t(x)) / 2.
  std::vector<double> score(d);
  auto field = [&](double u, std::span<const double> x, std::span<double> dx) {
    const double t = -std::expm1(-u);
    const GaussianMixture mt = mixture_at(m, t);
    const LocalEval e = mt.evaluate(x, score);
    for (std::size_t i = 0; i < d; ++i) {
      dx[i] = -0.5 * (x[i] + score[i]);
    }
    return 0.5 * (dd + e.hessian_trace);
  };

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
  double integral = 0.0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double u = h * static_cast<double>(n);
    const double j1 = field(u, x, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    const double j2 = field(u + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    const double j3 = field(u + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
    const double j4 = field(u + h, tmp, k4);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(x[i])) {
        throw NumericError("ode_log_density: non-finite state at step " + std::to_string(n + 1));
      }
    }
    integral += h / 6.0 * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
  }

  OdeResult out;
  out.log_density_end = mixture_at(m, 1.0 - delta).log_density(x);
  out.trace_integral = integral;
  out.total = out.log_density_end - integral;
  out.x_end = std::move(x);
  if (!std::isfinite(out.total)) {
    throw NumericError("ode_log_density: non-finite result");
  }
  return out;
}

SteinResult stein_diagnostic(const GaussianMixture& m, double t, std::span<const double> x0, const McConfig& cfg) {
  check_open_unit(t, "stein_diagnostic");
  check_dim(m, x0, "stein_diagnostic");
  const std::size_t d = m.dim();
  const GaussianMixture mt = mixture_at(m, t);
  const double signal = std::sqrt(1.0 - t);
  const double noise = std::sqrt(t);
  std::vector<double> xt(d);
  std::vector<double> s(d);
  const auto est = gaussian_expectations(
      [&](std::span<const double> eps, std::span<double> out) {
        for (std::size_t i = 0; i < d; ++i) {
          xt[i] = signal * x0[i] + noise * eps[i];
        }
        const LocalEval e = mt.evaluate(xt, s);
        double dot = 0.0;
        double comp = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          dot += eps[i] * s[i];
          const double c = eps[i] + noise * s[i];
          comp += c * c;
        }
        out[0] = dot;
        out[1] = noise * e.hessian_trace;
        out[2] = dot - noise * e.hessian_trace;
        out[3] = comp;
      },
      d, 4, cfg);
  return SteinResult{est[0], est[1], est[2], est[3]};
}

Claim1Result claim1_check(const GaussianMixture& m, double t, std::span<const double> y, double h) {
  check_open_unit(t, "claim1_check");
  check_dim(m, y, "claim1_check");
  if (!(h > 0.0) || !(t - h > 0.0) || !(t + h < 1.0)) {
    throw RangeError("claim1_check: step h must keep t +- h inside (0, 1)");
  }
  const std::size_t d = m.dim();
  auto g = [&](double tau) {
    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = std::sqrt(1.0 - tau) * y[i];
    }
    return mixture_at(m, tau).log_density(x);
  };
  std::vector<double> x(d);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = std::sqrt(1.0 - t) * y[i];
  }
  const double m2 = posterior_second_moment(m, t, x);
  Claim1Result r;
  r.analytic = -static_cast<double>(d) / (2.0 * t) + m2 / (2.0 * t * t * (1.0 - t));
  r.fd = (g(t + h) - g(t - h)) / (2.0 * h);
  return r;
}

}  // namespace scoredens
