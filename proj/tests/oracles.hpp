#pragma once

// Independent reference computations used by the tests.

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr double kLog2Pi = 1.8378770664093454836;

/// Gauss-Hermite rule for int exp(-x^2) f(x) dx, roots by Newton iteration on
/// the orthonormal recurrence.
inline std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n) {
  std::vector<double> x(n), w(n);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  double z = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  return {x, w};
}

/// E f(Z), Z ~ N(0, 1), by an n-point Gauss-Hermite rule.
inline double normal_expectation(const std::function<double(double)>& f, int n = 120) {
  const auto [x, w] = gauss_hermite(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += w[i] * f(std::sqrt(2.0) * x[i]);
  }
  return acc / std::sqrt(std::numbers::pi);
}

/// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  }
  return acc * h / 3.0;
}

/// Direct 1D mixture density sum_k w_k N(x; mu_k, v_k), no log-space tricks.
struct Mix1 {
  std::vector<double> w, mu, var;
  double pdf(double x) const {
    double p = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      p += w[k] * std::exp(-(x - mu[k]) * (x - mu[k]) / (2 * var[k])) / std::sqrt(2 * std::numbers::pi * var[k]);
    }
    return p;
  }
  /// Law of sqrt(1-t) X + sqrt(t) Z.
  Mix1 at(double t) const {
    Mix1 m = *this;
    for (std::size_t k = 0; k < w.size(); ++k) {
      m.mu[k] *= std::sqrt(1 - t);
      m.var[k] = (1 - t) * var[k] + t;
    }
    return m;
  }
  double log_pdf(double x) const { return std::log(pdf(x)); }
  double score(double x) const {
    const double h = 1e-5 * std::max(1.0, std::abs(x));
    return (log_pdf(x + h) - log_pdf(x - h)) / (2 * h);
  }
};

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace oracle
