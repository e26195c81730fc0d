#include "scoredens/predictor.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "scoredens/errors.hpp"

namespace scoredens {

namespace {

void check_index(const Schedule& s, std::size_t t) {
  if (t < 1 || t > s.steps()) {
    throw RangeError("predictor: step index " + std::to_string(t) + " outside [1, " + std::to_string(s.steps()) +
                     "]");
  }
}

struct StepMixtures {
  std::vector<GaussianMixture> at_step;
  std::vector<double> noise_scale;  // sqrt(1 - alpha_bar_t)
};

std::shared_ptr<const StepMixtures> precompute(const GaussianMixture& m, const Schedule& s) {
  auto out = std::make_shared<StepMixtures>();
  out->at_step.reserve(s.steps());
  out->noise_scale.reserve(s.steps());
  for (std::size_t t = 1; t <= s.steps(); ++t) {
    out->at_step.push_back(mixture_at(m, s.time(t)));
    out->noise_scale.push_back(std::sqrt(s.time(t)));
  }
  return out;
}

}  // namespace

std::vector<double> epsilon_star(const GaussianMixture& m, const Schedule& s, std::size_t t_index,
                                 std::span<const double> x) {
  check_index(s, t_index);
  auto out = mixture_at(m, s.time(t_index)).score(x);
  const double scale = -std::sqrt(s.time(t_index));
  for (auto& v : out) {
    v *= scale;
  }
  return out;
}

EpsilonFn exact_epsilon(const GaussianMixture& m, const Schedule& s) {
  auto steps = precompute(m, s);
  return [steps](std::size_t t, std::span<const double> x, std::span<double> out) {
    if (t < 1 || t > steps->at_step.size()) {
      throw RangeError("exact_epsilon: step index out of range");
    }
    steps->at_step[t - 1].evaluate(x, out);
    const double scale = -steps->noise_scale[t - 1];
    for (auto& v : out) {
      v *= scale;
    }
  };
}

ScoreFn exact_score(const GaussianMixture& m, const Schedule& s) {
  auto steps = precompute(m, s);
  return [steps](std::size_t t, std::span<const double> x, std::span<double> out) {
    if (t < 1 || t > steps->at_step.size()) {
      throw RangeError("exact_score: step index out of range");
    }
    steps->at_step[t - 1].evaluate(x, out);
  };
}

EpsilonFn zero_field() {
  return [](std::size_t, std::span<const double>, std::span<double> out) {
    for (auto& v : out) {
      v = 0.0;
    }
  };
}

VectorField with_bias(VectorField f, std::vector<double> bias) {
  return [f = std::move(f), bias = std::move(bias)](std::size_t t, std::span<const double> x, std::span<double> out) {
    if (bias.size() != out.size()) {
      throw DimensionError("with_bias: bias dimension does not match the point");
    }
    f(t, x, out);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += bias[i];
    }
  };
}

VectorField with_scale(VectorField f, double factor) {
  return [f = std::move(f), factor](std::size_t t, std::span<const double> x, std::span<double> out) {
    f(t, x, out);
    for (auto& v : out) {
      v *= factor;
    }
  };
}

ScoreFn score_from_epsilon(EpsilonFn eps, const Schedule& s) {
  std::vector<double> inv_scale;
  inv_scale.reserve(s.steps());
  for (std::size_t t = 1; t <= s.steps(); ++t) {
    inv_scale.push_back(-1.0 / std::sqrt(s.time(t)));
  }
  return [eps = std::move(eps), inv_scale = std::move(inv_scale)](std::size_t t, std::span<const double> x,
                                                                   std::span<double> out) {
    eps(t, x, out);
    for (auto& v : out) {
      v *= inv_scale[t - 1];
    }
  };
}

EpsilonFn parse_predictor(const std::string& spec, const GaussianMixture& m, const Schedule& s) {
  if (spec == "exact") {
    return exact_epsilon(m, s);
  }
  if (spec == "zero") {
    return zero_field();
  }
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string kind = spec.substr(0, colon);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(spec.substr(colon + 1), &used);
      if (used != spec.size() - colon - 1) {
        throw std::invalid_argument("trailing characters");
      }
    } catch (const std::exception&) {
      throw ParameterError("predictor: cannot parse number in '" + spec + "'");
    }
    if (kind == "bias") {
      return with_bias(exact_epsilon(m, s), std::vector<double>(m.dim(), value));
    }
    if (kind == "scale") {
      return with_scale(exact_epsilon(m, s), value);
    }
  }
  throw ParameterError("predictor: expected exact, zero, bias:<b> or scale:<g>, got '" + spec + "'");
}

McEstimate epsilon_residual(const EpsilonFn& f, const Schedule& s, std::size_t t_index, std::span<const double> x0,
                            const McConfig& cfg) {
  check_index(s, t_index);
  const std::size_t d = x0.size();
  const double signal = std::sqrt(s.alpha_bar(t_index));
  const double noise = std::sqrt(s.time(t_index));
  std::vector<double> xt(d);
  std::vector<double> pred(d);
  return gaussian_expectation_cv(
      [&](std::span<const double> eps) {
        for (std::size_t i = 0; i < d; ++i) {
          xt[i] = signal * x0[i] + noise * eps[i];
        }
        f(t_index, xt, pred);
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double r = eps[i] - pred[i];
          acc += r * r;
        }
        return acc;
      },
      d, cfg);
}

}  // namespace scoredens
