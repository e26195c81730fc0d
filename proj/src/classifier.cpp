#include "scoredens/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "scoredens/elbo.hpp"
#include "scoredens/errors.hpp"
#include "scoredens/parallel.hpp"

namespace scoredens {

std::vector<ClassScore> class_scores(const LabeledFamily& family, const Schedule& s, std::span<const double> x,
                                     const McConfig& cfg) {
  if (x.size() != family.dim()) {
    throw DimensionError("class_scores: point dimension differs from the family");
  }
  std::vector<ClassScore> out(family.size());
  parallel_for(family.size(), [&](std::size_t c) {
    const ElboBreakdown e = elbo_total(family.models()[c], s, x, cfg);
    out[c] = ClassScore{family.labels()[c], McEstimate{-e.total_L, e.total_se, e.steps.size() * cfg.n_samples}};
  });
  return out;
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) {
    throw ParameterError("softmax: empty input");
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - top);
    total += out[i];
  }
  for (auto& v : out) {
    v /= total;
  }
  return out;
}

std::vector<double> bayes_posterior(const LabeledFamily& family, std::span<const double> x) {
  std::vector<double> logits(family.size());
  for (std::size_t c = 0; c < family.size(); ++c) {
    logits[c] = std::log(family.prior()[c]) + family.models()[c].log_density(x);
  }
  return softmax(logits);
}

PosteriorReport posterior(const LabeledFamily& family, const Schedule& s, std::span<const double> x,
                          const McConfig& cfg) {
  PosteriorReport r;
  r.scores = class_scores(family, s, x, cfg);
  std::vector<double> logits(r.scores.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    logits[c] = r.scores[c].neg_elbo.mean;
  }
  r.posterior = softmax(logits);
  r.bayes = bayes_posterior(family, x);
  r.uniform_prior = family.uniform_prior();
  double tv = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    tv += std::abs(r.posterior[c] - r.bayes[c]);
  }
  r.tv_distance = 0.5 * tv;
  return r;
}

}  // namespace scoredens
