#include "scoredens/gan.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scoredens/errors.hpp"

namespace scoredens {

namespace {

/// (z p^lambda - 1)_+ from log p, without overflow for tiny p.
double ratio(double log_z, double lambda, double log_p) {
  const double e = log_z + lambda * log_p;
  return e > 0.0 ? std::expm1(e) : 0.0;
}

void fill(EquilibriumSolution& sol, double z) {
  const double log_z = std::log(z);
  const std::size_t n = sol.grid.size();
  sol.z = z;
  sol.p_g.assign(n, 0.0);
  sol.d.assign(n, 1.0);
  sol.support.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ratio(log_z, sol.lambda, sol.log_p_data[i]);
    if (r > 0.0) {
      sol.support[i] = true;
      sol.p_g[i] = sol.p_data[i] * r;
      sol.d[i] = sol.p_data[i] / (sol.p_data[i] + sol.p_g[i]);
    }
  }
  sol.p_g_mass = simpson(sol.p_g, sol.grid[1] - sol.grid[0]);
}

}  // namespace

double simpson(const std::vector<double>& values, double step) {
  const std::size_t n = values.size();
  if (n < 3 || n % 2 == 0) {
    throw ParameterError("simpson: need an odd number of at least 3 points");
  }
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    (i % 2 ? odd : even) += values[i];
  }
  return step / 3.0 * (values.front() + values.back() + 4.0 * odd + 2.0 * even);
}

double generator_mass(const EquilibriumSolution& sol, double z) {
  const double log_z = std::log(z);
  std::vector<double> f(sol.grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = sol.p_data[i] * ratio(log_z, sol.lambda, sol.log_p_data[i]);
  }
  return simpson(f, sol.grid[1] - sol.grid[0]);
}

EquilibriumSolution solve_equilibrium(const GaussianMixture& p, double lambda, const GridSpec& spec, double tol) {
  if (p.dim() != 1) {
    throw ParameterError("solve_equilibrium: the equilibrium is computed in one dimension only");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("solve_equilibrium: lambda must be a finite nonnegative number");
  }
  if (!(tol > 0.0)) {
    throw ParameterError("solve_equilibrium: tol must be positive");
  }
  if (spec.points < 3 || spec.points % 2 == 0) {
    throw ParameterError("solve_equilibrium: grid needs an odd number of points >= 3");
  }
  double lo = p.components().front().mean[0];
  double hi = lo;
  double widest = 0.0;
  for (const auto& c : p.components()) {
    lo = std::min(lo, c.mean[0]);
    hi = std::max(hi, c.mean[0]);
    widest = std::max(widest, std::sqrt(c.variance));
  }
  lo -= spec.half_width_sd * widest;
  hi += spec.half_width_sd * widest;

  EquilibriumSolution sol;
  sol.lambda = lambda;
  const std::size_t n = spec.points;
  const double step = (hi - lo) / static_cast<double>(n - 1);
  sol.grid.resize(n);
  sol.p_data.resize(n);
  sol.log_p_data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sol.grid[i] = lo + step * static_cast<double>(i);
    const double x = sol.grid[i];
    sol.log_p_data[i] = p.log_density(std::span<const double>(&x, 1));
    sol.p_data[i] = std::exp(sol.log_p_data[i]);
  }

  double z_low = 1.0;
  while (generator_mass(sol, z_low) >= 1.0) {
    z_low *= 0.5;
    if (z_low < 1e-300) {
      throw ConvergenceError("solve_equilibrium: no lower bracket for z");
    }
  }
  double z_high = 2.0;
  while (generator_mass(sol, z_high) < 1.0) {
    z_high *= 2.0;
    if (!std::isfinite(z_high) || z_high > 1e300) {
      throw ConvergenceError("solve_equilibrium: no upper bracket for z (lambda " + std::to_string(lambda) + ")");
    }
  }
  std::size_t iter = 0;
  while (z_high - z_low > tol * z_high) {
    const double mid = 0.5 * (z_low + z_high);
    const double f = generator_mass(sol, mid);
    if (f == 1.0) {
      z_low = z_high = mid;
      break;
    }
    (f < 1.0 ? z_low : z_high) = mid;
    if (++iter > 2000) {
      throw ConvergenceError("solve_equilibrium: bisection did not converge");
    }
  }
  sol.iterations = iter;
  fill(sol, 0.5 * (z_low + z_high));
  return sol;
}

NashCheck verify_nash(const EquilibriumSolution& sol, double c0_star, double tol) {
  NashCheck r;
  std::vector<double> on;
  std::vector<double> off;
  for (std::size_t i = 0; i < sol.grid.size(); ++i) {
    const double value = -std::log(sol.d[i]) + sol.lambda * (-sol.log_p_data[i] + c0_star);
    (sol.support[i] ? on : off).push_back(value);
  }
  r.c = std::log(sol.z) + sol.lambda * c0_star;
  if (on.empty()) {
    return r;
  }
  const auto [mn, mx] = std::minmax_element(on.begin(), on.end());
  r.on_support_range = *mx - *mn;
  std::nth_element(on.begin(), on.begin() + static_cast<std::ptrdiff_t>(on.size() / 2), on.end());
  r.constant = on[on.size() / 2];
  r.off_support_min_slack = 0.0;
  if (!off.empty()) {
    r.off_support_min_slack = *std::min_element(off.begin(), off.end()) - r.constant;
  }
  r.passed = r.on_support_range <= tol && r.off_support_min_slack >= -tol;
  return r;
}

EquilibriumSolution perturb_normalizer(const EquilibriumSolution& sol, double factor) {
  if (!(factor > 0.0)) {
    throw ParameterError("perturb_normalizer: factor must be positive");
  }
  EquilibriumSolution out = sol;
  fill(out, sol.z * factor);
  const double mass = out.p_g_mass;
  if (!(mass > 0.0)) {
    throw NumericError("perturb_normalizer: perturbed generator has no mass");
  }
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    out.p_g[i] /= mass;
    if (out.support[i]) {
      out.d[i] = out.p_data[i] / (out.p_data[i] + out.p_g[i]);
    }
  }
  out.p_g_mass = simpson(out.p_g, out.grid[1] - out.grid[0]);
  return out;
}

std::vector<std::pair<double, double>> amplification_profile(const EquilibriumSolution& sol) {
  const double log_z = std::log(sol.z);
  std::vector<std::pair<double, double>> out(sol.grid.size());
  for (std::size_t i = 0; i < sol.grid.size(); ++i) {
    out[i] = {sol.grid[i], ratio(log_z, sol.lambda, sol.log_p_data[i])};
  }
  return out;
}

}  // namespace scoredens
