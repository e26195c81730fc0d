#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "scoredens/errors.hpp"

namespace scoredens {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key for the substream (seed, stream_id). Distinct stream ids give
/// unrelated keys; the same pair always gives the same key.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream_id) {
  return mix64(mix64(seed) ^ mix64(stream_id + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: the i-th output depends only on (key, i), so
/// any draw can be regenerated without replaying the stream.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream_id) : key_(stream_key(seed, stream_id)) {}

  std::uint64_t bits(std::uint64_t index) const { return mix64(key_ + index * 0xd1b54a32d192ed03ULL); }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t index) const {
    return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on the uniform pair (2k, 2k+1), where
  /// k = index / 2; even indices take the cosine branch, odd the sine branch.
  double normal(std::uint64_t index) const {
    const std::uint64_t pair = index >> 1;
    const double u1 = uniform(2 * pair);
    const double u2 = uniform(2 * pair + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (index & 1U) ? radius * std::sin(angle) : radius * std::cos(angle);
  }

  /// Fills out with normals [first, first + out.size()).
  void normals(std::uint64_t first, std::span<double> out) const {
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] = normal(first + j);
    }
  }

 private:
  std::uint64_t key_;
};

struct McConfig {
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
  bool antithetic = true;
  std::uint64_t stream_id = 0;

  /// Throws ParameterError unless n_samples >= 2 and, when antithetic, even.
  void validate() const;

  McConfig with_stream(std::uint64_t id) const {
    McConfig c = *this;
    c.stream_id = id;
    return c;
  }
  McConfig with_seed(std::uint64_t s) const {
    McConfig c = *this;
    c.seed = s;
    return c;
  }
  McConfig with_samples(std::size_t n) const {
    McConfig c = *this;
    c.n_samples = n;
    return c;
  }
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_used = 0;
};

/// Sum of independent estimates scaled by weights; standard errors add in
/// quadrature.
McEstimate weighted_sum(std::span<const double> weights, std::span<const McEstimate> terms);

/// Running mean/variance (Welford).
class RunningStats {
 public:
  void push(double v) {
    ++n_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

namespace detail {
[[noreturn]] void throw_non_finite(std::size_t draw, std::span<const double> eps, double value);
}

/// Estimates E f(eps), eps ~ N(0, I_d).
///
/// With antithetic sampling each observation is (f(eps) + f(-eps)) / 2 over
/// n_samples / 2 pairs, and the standard error treats a pair as one
/// observation. Draw j uses normals [j d, (j+1) d) of the (seed, stream_id)
/// substream, so results are bit-identical for identical configs.
template <class F>
McEstimate gaussian_expectation(F&& f, std::size_t d, const McConfig& cfg) {
  cfg.validate();
  const CounterStream stream(cfg.seed, cfg.stream_id);
  const std::size_t n_obs = cfg.antithetic ? cfg.n_samples / 2 : cfg.n_samples;
  std::vector<double> eps(d);
  std::vector<double> neg(d);
  RunningStats stats;
  for (std::size_t j = 0; j < n_obs; ++j) {
    stream.normals(static_cast<std::uint64_t>(j * d), eps);
    double value = f(std::span<const double>(eps));
    if (!std::isfinite(value)) {
      detail::throw_non_finite(j, eps, value);
    }
    if (cfg.antithetic) {
      for (std::size_t k = 0; k < d; ++k) {
        neg[k] = -eps[k];
      }
      const double mirrored = f(std::span<const double>(neg));
      if (!std::isfinite(mirrored)) {
        detail::throw_non_finite(j, neg, mirrored);
      }
      value = 0.5 * (value + mirrored);
    }
    stats.push(value);
  }
  return McEstimate{stats.mean(), stats.std_error(), cfg.n_samples};
}

/// E f(eps) with ||eps||^2 (mean d) as a control variate: the mean is
/// adjusted by the fitted regression slope, ybar - c (zbar - d), and the
/// standard error comes from the regression residuals. Draws and pairing as
/// in gaussian_expectation. Falls back to the plain mean if ||eps||^2 does
/// not vary.
template <class F>
McEstimate gaussian_expectation_cv(F&& f, std::size_t d, const McConfig& cfg) {
  cfg.validate();
  const CounterStream stream(cfg.seed, cfg.stream_id);
  const std::size_t n_obs = cfg.antithetic ? cfg.n_samples / 2 : cfg.n_samples;
  std::vector<double> eps(d);
  std::vector<double> neg(d);
  // Running bivariate moments of (y, z).
  double my = 0.0, mz = 0.0, syy = 0.0, szz = 0.0, syz = 0.0;
  for (std::size_t j = 0; j < n_obs; ++j) {
    stream.normals(static_cast<std::uint64_t>(j * d), eps);
    double y = f(std::span<const double>(eps));
    if (!std::isfinite(y)) {
      detail::throw_non_finite(j, eps, y);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      z += eps[k] * eps[k];
    }
    if (cfg.antithetic) {
      for (std::size_t k = 0; k < d; ++k) {
        neg[k] = -eps[k];
      }
      const double mirrored = f(std::span<const double>(neg));
      if (!std::isfinite(mirrored)) {
        detail::throw_non_finite(j, neg, mirrored);
      }
      y = 0.5 * (y + mirrored);
    }
    const double n = static_cast<double>(j + 1);
    const double dy = y - my;
    const double dz = z - mz;
    my += dy / n;
    mz += dz / n;
    syy += dy * (y - my);
    szz += dz * (z - mz);
    syz += dy * (z - mz);
  }
  const double n = static_cast<double>(n_obs);
  if (!(szz > 0.0) || n_obs < 3) {
    const double se = n_obs > 1 ? std::sqrt(syy / (n - 1.0) / n) : 0.0;
    return McEstimate{my, se, cfg.n_samples};
  }
  const double c = syz / szz;
  const double resid = std::max(0.0, syy - c * syz);
  return McEstimate{my - c * (mz - static_cast<double>(d)), std::sqrt(resid / (n - 2.0) / n), cfg.n_samples};
}

/// Vector-valued variant: f(eps, out) writes k values per draw; all k
/// estimates share the same draws (common random numbers).
template <class F>
std::vector<McEstimate> gaussian_expectations(F&& f, std::size_t d, std::size_t k, const McConfig& cfg) {
  cfg.validate();
  const CounterStream stream(cfg.seed, cfg.stream_id);
  const std::size_t n_obs = cfg.antithetic ? cfg.n_samples / 2 : cfg.n_samples;
  std::vector<double> eps(d);
  std::vector<double> neg(d);
  std::vector<double> values(k);
  std::vector<double> mirrored(k);
  std::vector<RunningStats> stats(k);
  for (std::size_t j = 0; j < n_obs; ++j) {
    stream.normals(static_cast<std::uint64_t>(j * d), eps);
    f(std::span<const double>(eps), std::span<double>(values));
    if (cfg.antithetic) {
      for (std::size_t i = 0; i < d; ++i) {
        neg[i] = -eps[i];
      }
      f(std::span<const double>(neg), std::span<double>(mirrored));
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (!std::isfinite(values[i])) {
        detail::throw_non_finite(j, eps, values[i]);
      }
      double v = values[i];
      if (cfg.antithetic) {
        if (!std::isfinite(mirrored[i])) {
          detail::throw_non_finite(j, neg, mirrored[i]);
        }
        v = 0.5 * (v + mirrored[i]);
      }
      stats[i].push(v);
    }
  }
  std::vector<McEstimate> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = McEstimate{stats[i].mean(), stats[i].std_error(), cfg.n_samples};
  }
  return out;
}

}  // namespace scoredens
