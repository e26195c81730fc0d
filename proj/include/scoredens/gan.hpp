#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "scoredens/mixture.hpp"

namespace scoredens {

struct GridSpec {
  std::size_t points = 200001;  // odd, for Simpson's rule
  double half_width_sd = 10.0;  // grid spans the means +- this many widest-component sd
};

/// Fixed point of the score-regularized GAN game in one dimension:
/// p_G = p (z p^lambda - 1)_+, D = p / (p + p_G) on the support, 1 off it.
struct EquilibriumSolution {
  double lambda = 0.0;
  double z = 0.0;
  std::vector<double> grid;
  std::vector<double> p_data;
  std::vector<double> log_p_data;
  std::vector<double> p_g;
  std::vector<double> d;
  std::vector<bool> support;
  /// Simpson integral of p_g over the grid.
  double p_g_mass = 0.0;
  std::size_t iterations = 0;
};

/// Composite Simpson on a uniform grid with an odd number of points.
double simpson(const std::vector<double>& values, double step);

/// Bisection for z on F(z) = int p (z p^lambda - 1)_+ dx = 1, stopped once the
/// bracket is narrower than tol * z. Requires a 1D mixture, lambda >= 0 and
/// tol > 0 (ParameterError otherwise); ConvergenceError if no bracket exists.
EquilibriumSolution solve_equilibrium(const GaussianMixture& p, double lambda, const GridSpec& grid = {},
                                      double tol = 1e-12);

/// F(z) on the solution's grid.
double generator_mass(const EquilibriumSolution& sol, double z);

struct NashCheck {
  double constant = 0.0;  // -log D + lambda(-log p + C0*) on the support (median)
  double on_support_range = 0.0;
  double off_support_min_slack = 0.0;  // min over the complement of value - constant
  /// log z + lambda C0*.
  double c = 0.0;
  bool passed = false;
};

/// Evaluates -log D(x) + lambda (-log p(x) + C0*) over the grid; passes when
/// its range on the support is <= tol and the off-support slack is >= -tol.
NashCheck verify_nash(const EquilibriumSolution& sol, double c0_star, double tol);

/// The solution with z replaced by factor * z, p_G rebuilt from it and
/// renormalized to unit mass, and D recomputed. Not an equilibrium unless
/// factor == 1.
EquilibriumSolution perturb_normalizer(const EquilibriumSolution& sol, double factor);

/// (x, (z p(x)^lambda - 1)_+) per grid point.
std::vector<std::pair<double, double>> amplification_profile(const EquilibriumSolution& sol);

}  // namespace scoredens
