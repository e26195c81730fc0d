#pragma once

#include <span>
#include <string>
#include <vector>

#include "scoredens/mc.hpp"
#include "scoredens/mixture.hpp"
#include "scoredens/schedule.hpp"

namespace scoredens {

struct ClassScore {
  std::string label;
  McEstimate neg_elbo;  // -L(x; c)
};

/// -L(x; c) for every class with its exact predictors. All classes see the
/// same draws (substreams depend on seed and step only), so score
/// differences carry little noise.
std::vector<ClassScore> class_scores(const LabeledFamily& family, const Schedule& s, std::span<const double> x,
                                     const McConfig& cfg);

/// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> scores);

struct PosteriorReport {
  std::vector<ClassScore> scores;
  std::vector<double> posterior;
  std::vector<double> bayes;
  double tv_distance = 0.0;
  /// False when the family has a non-uniform prior: the posterior is still
  /// the softmax of the scores, and only the Bayes side uses the prior.
  bool uniform_prior = true;
};

PosteriorReport posterior(const LabeledFamily& family, const Schedule& s, std::span<const double> x,
                          const McConfig& cfg);

/// Exact class posterior from the class densities and prior.
std::vector<double> bayes_posterior(const LabeledFamily& family, std::span<const double> x);

}  // namespace scoredens
