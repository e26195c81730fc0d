#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "scoredens/mc.hpp"
#include "scoredens/mixture.hpp"
#include "scoredens/predictor.hpp"
#include "scoredens/schedule.hpp"

namespace scoredens {

enum class DensityMethod { discrete, smoothed, ode };
std::string_view to_string(DensityMethod m);

/// One summand of a density estimate: total -= coefficient * term.mean.
struct StepRecord {
  std::size_t index = 0;  // schedule step (discrete) or node number (smoothed)
  double time = 0.0;
  double coefficient = 0.0;
  McEstimate term;
};

struct DensityReport {
  std::vector<double> x0;
  DensityMethod method = DensityMethod::discrete;
  std::vector<StepRecord> steps;
  double constant = 0.0;
  double total = 0.0;
  double total_std_error = 0.0;

  /// constant - sum coefficient * term.mean, summed in record order.
  double recompute() const;
  double recompute_std_error() const;
};

/// -(1 + log 2 pi) d / 2, the t -> 1 limit of E log rho_t(X_t).
double gaussian_limit_constant(std::size_t d);
/// -(1 + log(2 pi beta_1)) d / 2.
double discrete_constant(const Schedule& s, std::size_t d);

/// D(t, x0) = E||eps/sqrt(t) + grad log rho_t(X_t)||^2 / (2(1-t)) - d/(2t),
/// X_t = sqrt(1-t) x0 + sqrt(t) eps.
///
/// The estimator subtracts the zero-mean term ((1-t)^2/t)(||eps||^2 - d)/(2(1-t))
/// from each draw (a control variate that cancels the 1/t blow-up of the
/// integrand near t = 0); the stationary case then has zero variance.
McEstimate integrand_D(const GaussianMixture& m, double t, std::span<const double> x0, const McConfig& cfg);

/// E[log rho_t(X_t) | X_0 = x0].
McEstimate conditional_log_density(const GaussianMixture& m, double t, std::span<const double> x0,
                                   const McConfig& cfg);
inline McEstimate limit_at_one(const GaussianMixture& m, std::span<const double> x0, double t, const McConfig& cfg) {
  return conditional_log_density(m, t, x0, cfg);
}
inline McEstimate limit_at_zero(const GaussianMixture& m, std::span<const double> x0, double t, const McConfig& cfg) {
  return conditional_log_density(m, t, x0, cfg);
}

/// Breakpoints t_0 = lo < t_1 < ... < t_n = hi, uniform in logit(t), so cells
/// shrink towards both ends of (0, 1).
std::vector<double> logit_grid(double lo, double hi, std::size_t n_cells);

/// Nodes and weights of the composite midpoint rule on the cells of
/// `breakpoints` (midpoints taken in t).
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Quadrature midpoint_rule(std::span<const double> breakpoints);

struct Theorem1Result {
  McEstimate lhs;
  double rhs = 0.0;
  double rhs_std_error = 0.0;
  double gap = 0.0;
};

/// lhs: E[log rho_{t2}(X_{t2}) - log rho_{t1}(X_{t1}) | x0]; rhs: midpoint
/// quadrature of integrand_D over [t1, t2] with n_quad logit-spaced cells.
/// Independent draws at the two times unless shared_noise.
Theorem1Result theorem1_check(const GaussianMixture& m, std::span<const double> x0, double t1, double t2,
                              const McConfig& cfg, std::size_t n_quad = 256, bool shared_noise = false);

inline constexpr std::size_t kDefaultQuadratureNodes = 256;

/// Smoothed log-density E[log rho_delta(X_delta) | x0] =
/// -(1 + log 2 pi) d/2 - int_delta^1 D(t, x0) dt. `grid` holds the cell
/// breakpoints starting at delta; the last cell ends at 1.
DensityReport log_density_smoothed(const GaussianMixture& m, std::span<const double> x0, std::span<const double> grid,
                                   const McConfig& cfg);
/// Same with the default grid: logit-spaced from delta to 1 - delta.
DensityReport log_density_smoothed(const GaussianMixture& m, std::span<const double> x0, double delta,
                                   const McConfig& cfg, std::size_t n_cells = kDefaultQuadratureNodes);

/// Discrete-time formula: -(1 + log(2 pi beta_1)) d/2 - sum_t elbo_coefficient(t) *
/// E||eps - eps_fn(t, sqrt(abar_t) x0 + sqrt(1 - abar_t) eps)||^2. Step t
/// draws from substream t of cfg.seed. eps_fn defaults to the exact predictor.
DensityReport log_density_discrete(const GaussianMixture& m, const Schedule& s, std::span<const double> x0,
                                   const McConfig& cfg, const EpsilonFn* eps_fn = nullptr);

struct OdeResult {
  std::vector<double> x_end;
  double total = 0.0;
  double trace_integral = 0.0;
  double log_density_end = 0.0;
};

/// Probability-flow reconstruction of log rho_0(x0). Integrates
/// dx/dt = -(x + grad log rho_t(x)) / (2(1-t)) from 0 to 1 - delta and
/// returns log rho_{1-delta}(x_end) - int (d + tr Hess log rho_s)/(2(1-s)) ds.
/// RK4 with uniform steps in u = -log(1 - t).
OdeResult ode_log_density(const GaussianMixture& m, std::span<const double> x0, std::size_t n_steps = 1000,
                          double delta = 1e-3);

struct SteinResult {
  McEstimate lhs;         // E[eps . s_t(X_t)]
  McEstimate rhs;         // sqrt(t) E[tr Hess log rho_t(X_t)]
  McEstimate difference;  // paired lhs - rhs
  McEstimate companion;   // E||eps + sqrt(t) s_t(X_t)||^2
};
SteinResult stein_diagnostic(const GaussianMixture& m, double t, std::span<const double> x0, const McConfig& cfg);

struct Claim1Result {
  double analytic = 0.0;
  double fd = 0.0;
};
/// d/dt of g(t, y) = log rho_t(sqrt(1-t) y): closed form
/// -d/(2t) + E[||x - sqrt(1-t) X_0||^2 | X_t = x] / (2 t^2 (1-t)) at
/// x = sqrt(1-t) y, against a central difference with step h.
Claim1Result claim1_check(const GaussianMixture& m, double t, std::span<const double> y, double h = 1e-5);

}  // namespace scoredens
