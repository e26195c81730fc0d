#include "scoredens/mc.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace scoredens {

void McConfig::validate() const {
  if (n_samples < 2) {
    throw ParameterError("McConfig: n_samples must be at least 2");
  }
  if (antithetic && (n_samples % 2) != 0) {
    throw ParameterError("McConfig: antithetic sampling needs an even n_samples");
  }
}

McEstimate weighted_sum(std::span<const double> weights, std::span<const McEstimate> terms) {
  if (weights.size() != terms.size()) {
    throw DimensionError("weighted_sum: weights and terms differ in length");
  }
  McEstimate out;
  double var = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    out.mean += weights[i] * terms[i].mean;
    const double se = weights[i] * terms[i].std_error;
    var += se * se;
    out.n_used += terms[i].n_used;
  }
  out.std_error = std::sqrt(var);
  return out;
}

namespace detail {

void throw_non_finite(std::size_t draw, std::span<const double> eps, double value) {
  std::ostringstream msg;
  msg << std::setprecision(17) << "Monte Carlo integrand returned " << value << " at draw " << draw << ", eps = [";
  for (std::size_t i = 0; i < eps.size(); ++i) {
    msg << (i ? ", " : "") << eps[i];
  }
  msg << "]";
  throw NumericError(msg.str());
}

}  // namespace detail
}  // namespace scoredens
