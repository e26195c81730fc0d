#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace scoredens {

inline constexpr std::size_t kDefaultSteps = 1000;
inline constexpr double kDefaultC0 = 0.75;
inline constexpr double kDefaultC1 = 1.75;

/// Forward-process learning rates and every quantity derived from them.
///
/// Indices are 1-based to match the step numbering of the forward chain:
/// beta(t) for 1 <= t <= T, alpha(t) for 1 <= t <= T+1 (alpha(T+1) == 0),
/// alpha_bar(t) and time(t) for 1 <= t <= T, time(T+1) == 1.
/// Immutable once constructed.
class Schedule {
 public:
  /// beta_1 = T^-c0, beta_{t+1} = (c1 log T / T) min{beta_1 (1 + c1 log T / T)^t, 1}.
  /// Throws ParameterError if T < 2, c0 or c1 is not positive, or any beta
  /// leaves (0, 1).
  static Schedule build(std::size_t T, double c0, double c1);

  /// Arbitrary learning rates; c0/c1 are absent. Throws ParameterError on an
  /// empty list or any beta outside (0, 1).
  static Schedule from_betas(std::vector<double> betas);

  std::size_t steps() const { return beta_.size(); }
  std::optional<double> c0() const { return c0_; }
  std::optional<double> c1() const { return c1_; }

  double beta(std::size_t t) const;
  double alpha(std::size_t t) const;
  double alpha_bar(std::size_t t) const;
  double log_alpha_bar(std::size_t t) const;
  /// t_i = 1 - alpha_bar_i, computed as -expm1(log alpha_bar_i).
  double time(std::size_t t) const;

  std::span<const double> betas() const { return beta_; }

  /// (1 - alpha_{t+1}) / (2 (1 - alpha_bar_t)), 1 <= t <= T.
  double elbo_coefficient(std::size_t t) const;
  /// (1 - alpha_t) / (2 (alpha_t - alpha_bar_t)), 2 <= t <= T.
  double vlb_coefficient(std::size_t t) const;
  /// Reverse-step drift weight eta_t = 1 - alpha_t.
  double eta(std::size_t t) const { return beta(t); }
  /// Reverse-step noise variance: (1-a_t)(a_t - abar_t)/(1 - abar_t) for
  /// t >= 2 and 1 - alpha_1 at t = 1.
  double sigma2(std::size_t t) const;

 private:
  Schedule(std::vector<double> betas, std::optional<double> c0, std::optional<double> c1);

  void check_step(std::size_t t) const;

  std::vector<double> beta_;
  std::vector<double> log_alpha_bar_;
  std::vector<double> alpha_bar_;
  std::vector<double> time_;
  std::optional<double> c0_;
  std::optional<double> c1_;
};

inline Schedule build_schedule(std::size_t T, double c0, double c1) { return Schedule::build(T, c0, c1); }
inline Schedule custom_schedule(std::vector<double> betas) { return Schedule::from_betas(std::move(betas)); }
inline Schedule default_schedule() { return Schedule::build(kDefaultSteps, kDefaultC0, kDefaultC1); }

struct CoefficientGap {
  double elbo_coeff = 0.0;
  double vlb_coeff = 0.0;
  double gap = 0.0;
  double bound = 0.0;
  bool within_bound = false;
};

/// Compares the density-formula weight with the variational-bound weight at
/// step t (2 <= t <= T). The bound (16 c1 log T / T) * elbo_coeff needs c1, so
/// schedules built from raw betas are rejected with ParameterError.
CoefficientGap coefficient_gap(const Schedule& s, std::size_t t);

}  // namespace scoredens
