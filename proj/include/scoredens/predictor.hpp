#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scoredens/mc.hpp"
#include "scoredens/mixture.hpp"
#include "scoredens/schedule.hpp"

namespace scoredens {

/// Step-indexed vector field: writes f(t_index, x) into out (same dimension
/// as x). Used for epsilon predictors and scores alike.
using VectorField = std::function<void(std::size_t t_index, std::span<const double> x, std::span<double> out)>;
using EpsilonFn = VectorField;
using ScoreFn = VectorField;

/// epsilon*_t(x) = -sqrt(1 - alpha_bar_t) * grad log rho_{t_t}(x), with the
/// score taken at grid time t_t = 1 - alpha_bar_t.
std::vector<double> epsilon_star(const GaussianMixture& m, const Schedule& s, std::size_t t_index,
                                 std::span<const double> x);

/// Exact predictors/scores with the T time-t mixtures precomputed.
EpsilonFn exact_epsilon(const GaussianMixture& m, const Schedule& s);
ScoreFn exact_score(const GaussianMixture& m, const Schedule& s);

EpsilonFn zero_field();
/// f + b (constant offset).
VectorField with_bias(VectorField f, std::vector<double> bias);
/// factor * f.
VectorField with_scale(VectorField f, double factor);
/// grad log rho = -eps / sqrt(1 - alpha_bar_t).
ScoreFn score_from_epsilon(EpsilonFn eps, const Schedule& s);

/// Parses "exact", "zero", "bias:b" (b added to every coordinate) or
/// "scale:g" (multiply by g) into a predictor around exact_epsilon.
EpsilonFn parse_predictor(const std::string& spec, const GaussianMixture& m, const Schedule& s);

/// E || eps - f(t, sqrt(abar_t) x0 + sqrt(1 - abar_t) eps) ||^2 over
/// eps ~ N(0, I), drawn from cfg's substream, with ||eps||^2 as a control
/// variate.
McEstimate epsilon_residual(const EpsilonFn& f, const Schedule& s, std::size_t t_index, std::span<const double> x0,
                            const McConfig& cfg);

}  // namespace scoredens
