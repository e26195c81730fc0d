#include "scoredens/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "scoredens/errors.hpp"
#include "scoredens/mc.hpp"

namespace scoredens {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_normalizer(double weight, double variance, std::size_t d) {
  return std::log(weight) - 0.5 * static_cast<double>(d) * (kLog2Pi + std::log(variance));
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<Component> components) : components_(std::move(components)) {
  if (components_.empty()) {
    throw ParameterError("mixture: no components");
  }
  dim_ = components_.front().mean.size();
  if (dim_ == 0) {
    throw ParameterError("mixture: zero-dimensional component mean");
  }
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dim_) {
      throw ParameterError("mixture: components have different dimensions");
    }
    if (!(c.weight > 0.0)) {
      throw ParameterError("mixture: component weights must be positive");
    }
    if (!(c.variance > 0.0) || !std::isfinite(c.variance)) {
      throw ParameterError("mixture: component variances must be positive");
    }
    for (double v : c.mean) {
      if (!std::isfinite(v)) {
        throw ParameterError("mixture: non-finite component mean");
      }
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ParameterError("mixture: weights sum to " + std::to_string(total) + ", expected 1");
  }
  log_weight_.reserve(components_.size());
  for (const auto& c : components_) {
    log_weight_.push_back(log_normalizer(c.weight, c.variance, dim_));
  }
}

GaussianMixture GaussianMixture::standard_normal(std::size_t d) {
  return GaussianMixture({Component{1.0, std::vector<double>(d, 0.0), 1.0}});
}

GaussianMixture GaussianMixture::gaussian(std::vector<double> mean, double variance) {
  return GaussianMixture({Component{1.0, std::move(mean), variance}});
}

void GaussianMixture::check_dim(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw DimensionError("mixture: point has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(dim_));
  }
}

LocalEval GaussianMixture::evaluate(std::span<const double> x, std::span<double> score_out) const {
  check_dim(x);
  if (score_out.size() != dim_) {
    throw DimensionError("mixture: score buffer has wrong dimension");
  }
  std::fill(score_out.begin(), score_out.end(), 0.0);
  const double d = static_cast<double>(dim_);
  double shift = -std::numeric_limits<double>::infinity();
  double mass = 0.0;
  double curvature = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    double dist2 = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double diff = x[i] - c.mean[i];
      dist2 += diff * diff;
    }
    const double l = log_weight_[k] - dist2 / (2.0 * c.variance);
    if (l > shift) {
      const double rescale = std::isfinite(shift) ? std::exp(shift - l) : 0.0;
      mass *= rescale;
      curvature *= rescale;
      for (auto& g : score_out) {
        g *= rescale;
      }
      shift = l;
    }
    const double w = std::exp(l - shift);
    mass += w;
    curvature += w * (-d / c.variance + dist2 / (c.variance * c.variance));
    for (std::size_t i = 0; i < dim_; ++i) {
      score_out[i] -= w * (x[i] - c.mean[i]) / c.variance;
    }
  }
  double score2 = 0.0;
  for (auto& g : score_out) {
    g /= mass;
    score2 += g * g;
  }
  return LocalEval{shift + std::log(mass), curvature / mass - score2};
}

double GaussianMixture::log_density(std::span<const double> x) const {
  check_dim(x);
  double shift = -std::numeric_limits<double>::infinity();
  double mass = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    double dist2 = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double diff = x[i] - c.mean[i];
      dist2 += diff * diff;
    }
    const double l = log_weight_[k] - dist2 / (2.0 * c.variance);
    if (l > shift) {
      mass = std::isfinite(shift) ? mass * std::exp(shift - l) : 0.0;
      shift = l;
    }
    mass += std::exp(l - shift);
  }
  return shift + std::log(mass);
}

void GaussianMixture::score(std::span<const double> x, std::span<double> out) const { evaluate(x, out); }

std::vector<double> GaussianMixture::score(std::span<const double> x) const {
  std::vector<double> out(dim_);
  evaluate(x, out);
  return out;
}

double GaussianMixture::hessian_trace(std::span<const double> x) const {
  std::vector<double> buf(dim_);
  return evaluate(x, buf).hessian_trace;
}

std::vector<double> GaussianMixture::responsibilities(std::span<const double> x) const {
  check_dim(x);
  std::vector<double> r(components_.size());
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    double dist2 = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double diff = x[i] - c.mean[i];
      dist2 += diff * diff;
    }
    r[k] = log_weight_[k] - dist2 / (2.0 * c.variance);
    shift = std::max(shift, r[k]);
  }
  double mass = 0.0;
  for (auto& v : r) {
    v = std::exp(v - shift);
    mass += v;
  }
  for (auto& v : r) {
    v /= mass;
  }
  return r;
}

PointSet GaussianMixture::sample(std::size_t n, std::uint64_t seed) const {
  // Normals from stream 0, component choices from stream 1.
  const CounterStream normals(seed, 0);
  const CounterStream picks(seed, 1);
  std::vector<double> cumulative;
  cumulative.reserve(components_.size());
  double acc = 0.0;
  for (const auto& c : components_) {
    acc += c.weight;
    cumulative.push_back(acc);
  }
  PointSet out(dim_, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = picks.uniform(j) * acc;
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                                components_.size() - 1);
    const auto& c = components_[k];
    const double sd = std::sqrt(c.variance);
    auto row = out.row(j);
    for (std::size_t i = 0; i < dim_; ++i) {
      row[i] = c.mean[i] + sd * normals.normal(j * dim_ + i);
    }
  }
  return out;
}

GaussianMixture mixture_at(const GaussianMixture& m, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw RangeError("mixture_at: t must lie in [0, 1]");
  }
  if (t == 0.0) {
    return m;
  }
  const double shrink = std::sqrt(1.0 - t);
  std::vector<Component> comps = m.components();
  for (auto& c : comps) {
    for (auto& v : c.mean) {
      v *= shrink;
    }
    c.variance = (1.0 - t) * c.variance + t;
  }
  return GaussianMixture(std::move(comps));
}

TimeMarginal::TimeMarginal(const GaussianMixture& source, double t)
    : source_(source), mixture_(source), t_(t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw RangeError("marginal: t = " + std::to_string(t) + " outside (0, 1)");
  }
  mixture_ = mixture_at(source, t);
}

std::vector<double> TimeMarginal::posterior_component_weights(std::span<const double> x) const {
  return mixture_.responsibilities(x);
}

std::vector<double> TimeMarginal::posterior_mean_x0(std::span<const double> x) const {
  const auto r = mixture_.responsibilities(x);
  const std::size_t d = source_.dim();
  const double shrink = std::sqrt(1.0 - t_);
  std::vector<double> mean(d, 0.0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    const auto& c = source_.components()[k];
    const double gain = c.variance * shrink / mixture_.components()[k].variance;
    for (std::size_t i = 0; i < d; ++i) {
      mean[i] += r[k] * (c.mean[i] + gain * (x[i] - shrink * c.mean[i]));
    }
  }
  return mean;
}

double TimeMarginal::posterior_second_moment(std::span<const double> x) const {
  const auto r = mixture_.responsibilities(x);
  const std::size_t d = source_.dim();
  const double shrink = std::sqrt(1.0 - t_);
  double total = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const auto& c = source_.components()[k];
    const double v = mixture_.components()[k].variance;
    const double gain = c.variance * shrink / v;
    const double post_var = c.variance * t_ / v;
    double dist2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double post_mean = c.mean[i] + gain * (x[i] - shrink * c.mean[i]);
      const double diff = x[i] - shrink * post_mean;
      dist2 += diff * diff;
    }
    total += r[k] * (dist2 + (1.0 - t_) * static_cast<double>(d) * post_var);
  }
  return total;
}

double log_density0(const GaussianMixture& m, std::span<const double> x) { return m.log_density(x); }

TimeMarginal marginal(const GaussianMixture& m, double t) { return TimeMarginal(m, t); }

double log_density_t(const GaussianMixture& m, double t, std::span<const double> x) {
  return TimeMarginal(m, t).log_density(x);
}

std::vector<double> score_t(const GaussianMixture& m, double t, std::span<const double> x) {
  return TimeMarginal(m, t).score(x);
}

double hessian_trace_t(const GaussianMixture& m, double t, std::span<const double> x) {
  return TimeMarginal(m, t).hessian_trace(x);
}

std::vector<double> posterior_component_weights(const GaussianMixture& m, double t, std::span<const double> x) {
  return TimeMarginal(m, t).posterior_component_weights(x);
}

std::vector<double> posterior_mean_x0(const GaussianMixture& m, double t, std::span<const double> x) {
  return TimeMarginal(m, t).posterior_mean_x0(x);
}

double posterior_second_moment(const GaussianMixture& m, double t, std::span<const double> x) {
  return TimeMarginal(m, t).posterior_second_moment(x);
}

PointSet sample0(const GaussianMixture& m, std::size_t n, std::uint64_t seed) { return m.sample(n, seed); }

LabeledFamily::LabeledFamily(std::vector<std::string> labels, std::vector<GaussianMixture> models,
                             std::vector<double> prior)
    : labels_(std::move(labels)), models_(std::move(models)), prior_(std::move(prior)) {
  if (labels_.empty() || labels_.size() != models_.size()) {
    throw ParameterError("family: need one model per label and at least one class");
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) {
      throw ParameterError("family: duplicate label '" + l + "'");
    }
  }
  for (const auto& m : models_) {
    if (m.dim() != models_.front().dim()) {
      throw DimensionError("family: class models differ in dimension");
    }
  }
  if (prior_.empty()) {
    prior_.assign(labels_.size(), 1.0 / static_cast<double>(labels_.size()));
  }
  if (prior_.size() != labels_.size()) {
    throw ParameterError("family: prior length does not match the number of classes");
  }
  double total = 0.0;
  for (double p : prior_) {
    if (!(p > 0.0)) {
      throw ParameterError("family: prior entries must be positive");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ParameterError("family: prior sums to " + std::to_string(total) + ", expected 1");
  }
}

bool LabeledFamily::uniform_prior() const {
  const double u = 1.0 / static_cast<double>(prior_.size());
  return std::all_of(prior_.begin(), prior_.end(), [u](double p) { return std::abs(p - u) <= 1e-12; });
}

std::size_t LabeledFamily::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) {
      return i;
    }
  }
  throw ParameterError("family: unknown class label '" + std::string(label) + "'");
}

}  // namespace scoredens
