#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scoredens {

/// Row-major set of points sharing one dimension.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t dim, std::size_t n) : dim_(dim), data_(dim * n, 0.0) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> flat() const { return data_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// One isotropic component w N(mean, variance I).
struct Component {
  double weight = 1.0;
  std::vector<double> mean;
  double variance = 1.0;
};

/// Log-density and Hessian trace at a point; the score goes to a caller
/// buffer.
struct LocalEval {
  double log_density = 0.0;
  double hessian_trace = 0.0;
};

/// Isotropic Gaussian mixture sum_k w_k N(mu_k, sigma_k^2 I).
///
/// All evaluations run a single pass with a running max shift, so far-tail
/// points return finite log values without exponentiating anything large.
class GaussianMixture {
 public:
  /// Throws ParameterError on empty input, non-positive weight or variance,
  /// weights not summing to 1 within 1e-12, or mixed mean dimensions.
  explicit GaussianMixture(std::vector<Component> components);

  static GaussianMixture standard_normal(std::size_t d);
  static GaussianMixture gaussian(std::vector<double> mean, double variance);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  const std::vector<Component>& components() const { return components_; }

  double log_density(std::span<const double> x) const;
  void score(std::span<const double> x, std::span<double> out) const;
  std::vector<double> score(std::span<const double> x) const;
  double hessian_trace(std::span<const double> x) const;
  /// Log-density, trace of the Hessian of the log-density, and the score
  /// (written to score_out, which must have dim() entries) in one pass.
  LocalEval evaluate(std::span<const double> x, std::span<double> score_out) const;

  /// Posterior component probabilities r_k(x) proportional to w_k N(x; mu_k, sigma_k^2 I).
  std::vector<double> responsibilities(std::span<const double> x) const;

  /// n i.i.d. draws, deterministic in seed.
  PointSet sample(std::size_t n, std::uint64_t seed) const;

 private:
  void check_dim(std::span<const double> x) const;

  std::vector<Component> components_;
  std::vector<double> log_weight_;
  std::size_t dim_ = 0;
};

/// Law of X_t = sqrt(1-t) X_0 + sqrt(t) Z for X_0 ~ source mixture: a mixture
/// with means sqrt(1-t) mu_k and variances (1-t) sigma_k^2 + t.
class TimeMarginal {
 public:
  /// Throws RangeError unless 0 < t < 1.
  TimeMarginal(const GaussianMixture& source, double t);

  double t() const { return t_; }
  const GaussianMixture& source() const { return source_; }
  const GaussianMixture& mixture() const { return mixture_; }

  double log_density(std::span<const double> x) const { return mixture_.log_density(x); }
  std::vector<double> score(std::span<const double> x) const { return mixture_.score(x); }
  double hessian_trace(std::span<const double> x) const { return mixture_.hessian_trace(x); }

  std::vector<double> posterior_component_weights(std::span<const double> x) const;
  /// E[X_0 | X_t = x].
  std::vector<double> posterior_mean_x0(std::span<const double> x) const;
  /// E[ ||x - sqrt(1-t) X_0||^2 | X_t = x ].
  double posterior_second_moment(std::span<const double> x) const;

 private:
  GaussianMixture source_;
  GaussianMixture mixture_;
  double t_;
};

/// Time-t mixture for 0 <= t <= 1 without the open-interval check; t = 0
/// returns the source itself and t = 1 the standard normal. Schedules whose
/// alpha_bar drops below double precision reach t = 1 exactly.
GaussianMixture mixture_at(const GaussianMixture& m, double t);

double log_density0(const GaussianMixture& m, std::span<const double> x);
TimeMarginal marginal(const GaussianMixture& m, double t);
double log_density_t(const GaussianMixture& m, double t, std::span<const double> x);
std::vector<double> score_t(const GaussianMixture& m, double t, std::span<const double> x);
double hessian_trace_t(const GaussianMixture& m, double t, std::span<const double> x);
std::vector<double> posterior_component_weights(const GaussianMixture& m, double t, std::span<const double> x);
std::vector<double> posterior_mean_x0(const GaussianMixture& m, double t, std::span<const double> x);
double posterior_second_moment(const GaussianMixture& m, double t, std::span<const double> x);
PointSet sample0(const GaussianMixture& m, std::size_t n, std::uint64_t seed);

/// Finite label set with one mixture per class and a prior over classes.
class LabeledFamily {
 public:
  /// Empty prior means uniform. Throws ParameterError on mismatched sizes,
  /// duplicate labels, or a prior that is not a probability vector;
  /// DimensionError when class dimensions differ.
  LabeledFamily(std::vector<std::string> labels, std::vector<GaussianMixture> models, std::vector<double> prior = {});

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return models_.front().dim(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<GaussianMixture>& models() const { return models_; }
  const std::vector<double>& prior() const { return prior_; }
  bool uniform_prior() const;

  /// Throws ParameterError for an unknown label.
  std::size_t index_of(std::string_view label) const;
  const GaussianMixture& model(std::string_view label) const { return models_[index_of(label)]; }

 private:
  std::vector<std::string> labels_;
  std::vector<GaussianMixture> models_;
  std::vector<double> prior_;
};

}  // namespace scoredens
