#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "scoredens/density.hpp"
#include "scoredens/mc.hpp"
#include "scoredens/mixture.hpp"
#include "scoredens/predictor.hpp"
#include "scoredens/schedule.hpp"

namespace scoredens {

/// KL(N(mu1, var1 I) || N(mu2, var2 I)). Throws ParameterError for a
/// non-positive variance and DimensionError for mismatched means.
double kl_gaussian(std::span<const double> mu1, double var1, std::span<const double> mu2, double var2);

/// vlb_coefficient(t) * E||eps - eps_fn(t, sqrt(abar_t) x0 + sqrt(1-abar_t) eps)||^2
/// for 2 <= t <= T, drawn from substream cfg.stream_id + t.
McEstimate vlb_term(const GaussianMixture& m, const Schedule& s, std::size_t t, std::span<const double> x0,
                    const McConfig& cfg, const EpsilonFn* eps_fn = nullptr);

/// -(d/2) log(2 pi beta_1 / alpha_1) - E||eps + sqrt(beta_1) s_1(sqrt(alpha_1) x0 + sqrt(beta_1) eps)||^2 / 2,
/// with s_1 the exact score at time t_1 unless score_fn is given.
McEstimate c0_term(const GaussianMixture& m, const Schedule& s, std::span<const double> x0, const McConfig& cfg,
                   const ScoreFn* score_fn = nullptr);

/// KL(N(0, I) || N(sqrt(abar_T) x0, (1 - abar_T) I)).
double lt_term(const Schedule& s, std::span<const double> x0);

/// -(1 + log(2 pi beta_1)) d / 2.
inline double c0_star(const Schedule& s, std::size_t d) { return discrete_constant(s, d); }

struct ElboBreakdown {
  std::vector<StepRecord> steps;
  McEstimate c0;
  double lt = 0.0;
  double total_L = 0.0;
  double total_se = 0.0;
};

/// total_L = sum_t elbo_coefficient(t) E||eps - eps_fn(...)||^2 with the same
/// draws as log_density_discrete, so total_L == C0* - density total. The C0
/// and L_T terms are reported alongside.
ElboBreakdown elbo_total(const GaussianMixture& m, const Schedule& s, std::span<const double> x0, const McConfig& cfg,
                         const EpsilonFn* eps_fn = nullptr);

/// (1/T) sum_t E||eps - eps_fn(...)||^2.
McEstimate elbo_simple(const GaussianMixture& m, const Schedule& s, std::span<const double> x0, const McConfig& cfg,
                       const EpsilonFn* eps_fn = nullptr);

/// E_{x ~ q0}[L(x)] - C0* - H(q0), estimated per outer draw as
/// L(x_j) + log q0(x_j) - C0*. Outer draws come from sample0(m, n_outer, seed);
/// the inner estimate for draw j uses cfg with its seed mixed with j.
McEstimate kl_gap(const GaussianMixture& m, const Schedule& s, const McConfig& cfg, std::size_t n_outer,
                  std::uint64_t seed, const EpsilonFn* eps_fn = nullptr);

struct PredictorComparison {
  McEstimate base;       // E||eps - eps*(X_t)||^2, x ~ q0
  McEstimate perturbed;  // E||eps - eps*(X_t) - b||^2
  McEstimate excess;     // paired perturbed - base
};

/// Joint draws x ~ q0 (cfg.n_samples points) and eps at step t; the same
/// draws feed both predictors.
PredictorComparison optimal_predictor_check(const GaussianMixture& m, const Schedule& s, std::size_t t,
                                            std::span<const double> perturbation, const McConfig& cfg);

/// sum_t elbo_coefficient(t) * optimal_predictor_check(t).excess: the change
/// of E_{q0}[L] when eps* is replaced by eps* + b.
McEstimate expected_elbo_shift(const GaussianMixture& m, const Schedule& s, std::span<const double> bias,
                               const McConfig& cfg);

/// sum_t w_t E||eps - eps*_{t|z}(sqrt(abar_t) x + sqrt(1 - abar_t) eps)||^2
/// with the exact predictors of the conditional model p(. | z). ParameterError
/// for an unknown label or a weight list not of length T.
McEstimate diffusion_loss(const LabeledFamily& family, const Schedule& s, std::string_view z, std::span<const double> x,
                          std::span<const double> weights, const McConfig& cfg);
/// Same for an explicit conditional model.
McEstimate diffusion_loss(const GaussianMixture& conditional, const Schedule& s, std::span<const double> x,
                          std::span<const double> weights, const McConfig& cfg);

/// Elbo weights elbo_coefficient(1..T).
std::vector<double> elbo_weights(const Schedule& s);

struct RiskReport {
  std::vector<double> grid;
  std::vector<McEstimate> risk;
  std::size_t argmin = 0;
  double argmin_theta = 0.0;
  double mle = 0.0;               // sample mean
  double mle_nearest_theta = 0.0; // grid point nearest to the sample mean
};

/// Toy conditional model x | theta ~ N(theta, 1) (scalar data). For each
/// grid value evaluates the mean diffusion loss with ELBO weights over the
/// dataset, using identical draws for every theta. ParameterError on an empty
/// dataset or grid.
RiskReport empirical_risk(const Schedule& s, std::span<const double> data, std::span<const double> grid,
                          const McConfig& cfg);

}  // namespace scoredens
