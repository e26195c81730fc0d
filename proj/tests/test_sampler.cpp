#include <doctest.h>

#include <cmath>
#include <vector>

#include "scoredens/errors.hpp"
#include "scoredens/parallel.hpp"
#include "scoredens/sampler.hpp"

using namespace scoredens;

TEST_CASE("sampler: a Gaussian target follows the linear moment recursion") {
  const double mu = 1.5, v = 0.5;
  const auto g = GaussianMixture::gaussian({mu}, v);
  const Schedule s = build_schedule(200, 0.75, 1.75);
  const std::size_t n = 20000;
  const auto run = reverse_sample(g, s, n, 3);
  REQUIRE(run.trace.size() == s.steps() + 1);

  double M = 0.0, V = 1.0;
  for (std::size_t t = s.steps(); t >= 1; --t) {
    const double ab = s.alpha_bar(t), beta = s.beta(t), a = s.alpha(t);
    const double mt = std::sqrt(ab) * mu, vt = ab * v + (1 - ab);
    const double gain = 1 - beta / vt;
    M = (gain * M + beta * mt / vt) / std::sqrt(a);
    V = (gain * gain * V + s.sigma2(t)) / a;
    const auto& row = run.trace[s.steps() - t + 1];
    CHECK(row.t == t - 1);
    if (t % 50 == 1) {
      CHECK(std::abs(row.mean[0] - M) <= 4 * std::sqrt(V / n));
      CHECK(std::abs((*row.variance)[0] - V) <= 4 * V * std::sqrt(2.0 / n));
    }
  }
  // The recursion itself lands near the target.
  CHECK(std::abs(M - mu) < 0.05);
  CHECK(std::abs(V - v) < 0.05);
}

TEST_CASE("sampler: output does not depend on the thread count") {
  const auto m = GaussianMixture({Component{0.7, {2.0}, 0.5}, Component{0.3, {-2.0}, 0.5}});
  const Schedule s = build_schedule(100, 0.75, 1.75);
  set_max_threads(1);
  const auto a = reverse_sample(m, s, 1500, 9);
  set_max_threads(4);
  const auto b = reverse_sample(m, s, 1500, 9);
  set_max_threads(0);
  for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points.row(i)[0] == b.points.row(i)[0]);
  for (std::size_t r = 0; r < a.trace.size(); ++r) {
    CHECK(a.trace[r].mean[0] == b.trace[r].mean[0]);
    CHECK((*a.trace[r].variance)[0] == (*b.trace[r].variance)[0]);
  }
}

TEST_CASE("sampler: particles are independent of the ensemble size") {
  const auto g = GaussianMixture::standard_normal(2);
  const Schedule s = build_schedule(50, 0.75, 1.75);
  const auto few = reverse_sample(g, s, 10, 5);
  const auto many = reverse_sample(g, s, 700, 5);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(few.points.row(i)[0] == many.points.row(i)[0]);
    CHECK(few.points.row(i)[1] == many.points.row(i)[1]);
  }
}

TEST_CASE("sampler: trace layout and single particle") {
  const auto g = GaussianMixture::standard_normal(1);
  const Schedule s = build_schedule(20, 0.75, 1.75);
  const auto run = reverse_sample(g, s, 1, 2);
  CHECK(run.trace.front().t == 20);
  CHECK(run.trace.back().t == 0);
  CHECK_FALSE(run.trace.back().variance.has_value());
  CHECK(run.trace.back().mean[0] == run.points.row(0)[0]);
  CHECK(run.source == "exact");
  CHECK_THROWS_AS(reverse_sample(g, s, 0, 2), ParameterError);
}

TEST_CASE("sampler: a divergent score raises a numeric error") {
  const auto g = GaussianMixture::standard_normal(1);
  const Schedule s = build_schedule(200, 0.75, 1.75);
  const ScoreFn blowup = with_scale(exact_score(g, s), -1e4);
  CHECK_THROWS_AS(reverse_sample(g, s, 4, 1, &blowup, "scale"), NumericError);
}
