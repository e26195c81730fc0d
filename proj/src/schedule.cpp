#include "scoredens/schedule.hpp"

#include <cmath>
#include <string>

#include "scoredens/errors.hpp"

namespace scoredens {

namespace {

void validate_betas(std::span<const double> betas) {
  if (betas.empty()) {
    throw ParameterError("schedule: beta list is empty");
  }
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const double b = betas[i];
    if (!(b > 0.0 && b < 1.0)) {
      throw ParameterError("schedule: beta_" + std::to_string(i + 1) + " = " + std::to_string(b) +
                           " is outside (0, 1)");
    }
  }
}

}  // namespace

Schedule::Schedule(std::vector<double> betas, std::optional<double> c0, std::optional<double> c1)
    : beta_(std::move(betas)), c0_(c0), c1_(c1) {
  validate_betas(beta_);
  const std::size_t T = beta_.size();
  log_alpha_bar_.resize(T);
  alpha_bar_.resize(T);
  time_.resize(T + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    acc += std::log1p(-beta_[i]);
    log_alpha_bar_[i] = acc;
    alpha_bar_[i] = std::exp(acc);
    time_[i] = -std::expm1(acc);
  }
  time_[T] = 1.0;
}

Schedule Schedule::build(std::size_t T, double c0, double c1) {
  if (T < 2) {
    throw ParameterError("schedule: T must be at least 2");
  }
  if (!(c0 > 0.0) || !(c1 > 0.0)) {
    throw ParameterError("schedule: c0 and c1 must be positive");
  }
  const double Td = static_cast<double>(T);
  const double rate = c1 * std::log(Td) / Td;
  std::vector<double> betas(T);
  betas[0] = std::pow(Td, -c0);
  const double log_growth = std::log1p(rate);
  const double log_beta1 = std::log(betas[0]);
  for (std::size_t t = 1; t < T; ++t) {
    // beta_1 (1 + rate)^t evaluated in log space; capped at 1.
    const double log_ramp = log_beta1 + static_cast<double>(t) * log_growth;
    const double ramp = log_ramp >= 0.0 ? 1.0 : std::exp(log_ramp);
    betas[t] = rate * ramp;
  }
  for (std::size_t i = 0; i < T; ++i) {
    if (!(betas[i] < 1.0)) {
      throw ParameterError("schedule: beta_" + std::to_string(i + 1) + " >= 1 (c1 = " + std::to_string(c1) +
                           " is too large for T = " + std::to_string(T) + ")");
    }
  }
  return Schedule(std::move(betas), c0, c1);
}

Schedule Schedule::from_betas(std::vector<double> betas) {
  return Schedule(std::move(betas), std::nullopt, std::nullopt);
}

void Schedule::check_step(std::size_t t) const {
  if (t < 1 || t > steps()) {
    throw RangeError("schedule: step index " + std::to_string(t) + " outside [1, " + std::to_string(steps()) +
                     "]");
  }
}

double Schedule::beta(std::size_t t) const {
  check_step(t);
  return beta_[t - 1];
}

double Schedule::alpha(std::size_t t) const {
  if (t == steps() + 1) {
    return 0.0;
  }
  check_step(t);
  return 1.0 - beta_[t - 1];
}

double Schedule::alpha_bar(std::size_t t) const {
  check_step(t);
  return alpha_bar_[t - 1];
}

double Schedule::log_alpha_bar(std::size_t t) const {
  check_step(t);
  return log_alpha_bar_[t - 1];
}

double Schedule::time(std::size_t t) const {
  if (t == steps() + 1) {
    return 1.0;
  }
  check_step(t);
  return time_[t - 1];
}

double Schedule::elbo_coefficient(std::size_t t) const {
  check_step(t);
  const double next_beta = (t == steps()) ? 1.0 : beta_[t];
  return next_beta / (2.0 * time_[t - 1]);
}

double Schedule::vlb_coefficient(std::size_t t) const {
  if (t < 2 || t > steps()) {
    throw RangeError("schedule: vlb coefficient needs 2 <= t <= T, got " + std::to_string(t));
  }
  // alpha_t - alpha_bar_t = alpha_t (1 - alpha_bar_{t-1})
  return beta_[t - 1] / (2.0 * alpha(t) * time_[t - 2]);
}

double Schedule::sigma2(std::size_t t) const {
  check_step(t);
  if (t == 1) {
    return beta_[0];
  }
  return beta_[t - 1] * alpha(t) * time_[t - 2] / time_[t - 1];
}

CoefficientGap coefficient_gap(const Schedule& s, std::size_t t) {
  if (t < 2 || t > s.steps()) {
    throw ParameterError("coefficient_gap: t = " + std::to_string(t) + " outside [2, T]");
  }
  if (!s.c1()) {
    throw ParameterError("coefficient_gap: schedule has no c1 (built from raw betas)");
  }
  CoefficientGap out;
  out.elbo_coeff = s.elbo_coefficient(t);
  out.vlb_coeff = s.vlb_coefficient(t);
  out.gap = std::abs(out.elbo_coeff - out.vlb_coeff);
  const double Td = static_cast<double>(s.steps());
  out.bound = 16.0 * (*s.c1()) * std::log(Td) / Td * out.elbo_coeff;
  out.within_bound = out.gap <= out.bound;
  return out;
}

}  // namespace scoredens
