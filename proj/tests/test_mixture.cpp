#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scoredens/errors.hpp"
#include "scoredens/mixture.hpp"
#include "scoredens/predictor.hpp"
#include "scoredens/schedule.hpp"

using namespace scoredens;

namespace {

GaussianMixture mixture_2d() {
  return GaussianMixture(
      {Component{0.2, {-1.0, 2.0}, 0.3}, Component{0.5, {1.5, -0.5}, 1.7}, Component{0.3, {0.0, 0.0}, 0.8}});
}

GaussianMixture mixture_1d() { return GaussianMixture({Component{0.6, {-2.0}, 1.0}, Component{0.4, {2.0}, 0.25}}); }

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("targets: log density closed forms") {
  const auto sn = GaussianMixture::standard_normal(2);
  const std::vector<double> zero{0.0, 0.0};
  CHECK(log_density0(sn, zero) == doctest::Approx(-std::log(2 * std::numbers::pi)).epsilon(1e-14));

  const GaussianMixture bumps({Component{0.5, {-2.0}, 1.0}, Component{0.5, {2.0}, 1.0}});
  const std::vector<double> x{0.0};
  CHECK(bumps.log_density(x) == doctest::Approx(std::log(std::exp(-2.0) / std::sqrt(2 * std::numbers::pi))));

  const oracle::Mix1 ref{{0.6, 0.4}, {-2.0, 2.0}, {1.0, 0.25}};
  for (double v : {-4.0, -1.0, 0.3, 2.2, 5.0}) {
    const std::vector<double> p{v};
    CHECK(mixture_1d().log_density(p) == doctest::Approx(ref.log_pdf(v)).epsilon(1e-13));
  }
}

TEST_CASE("targets: far tails stay finite and decrease") {
  const auto m = mixture_1d();
  double prev = 0.0;
  for (double v = 3.0; v < 2000.0; v *= 1.5) {
    const std::vector<double> p{v};
    const double l = m.log_density(p);
    CHECK(std::isfinite(l));
    if (v > 3.0) CHECK(l < prev);
    prev = l;
    const auto s = m.score(p);
    CHECK(std::isfinite(s[0]));
  }
  const std::vector<double> far{1e6};
  CHECK(m.log_density(far) < -1e11);
}

TEST_CASE("targets: validation") {
  CHECK_THROWS_AS(GaussianMixture({}), ParameterError);
  CHECK_THROWS_AS(GaussianMixture({Component{0.5, {0.0}, 1.0}}), ParameterError);
  CHECK_THROWS_AS(GaussianMixture({Component{1.0, {0.0}, 0.0}}), ParameterError);
  CHECK_THROWS_AS(GaussianMixture({Component{0.5, {0.0}, 1.0}, Component{0.5, {0.0, 1.0}, 1.0}}), ParameterError);
  CHECK_THROWS_AS(GaussianMixture({Component{-0.5, {0.0}, 1.0}, Component{1.5, {0.0}, 1.0}}), ParameterError);
  const std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(mixture_1d().log_density(wrong), DimensionError);
  CHECK_THROWS_AS(marginal(mixture_1d(), 0.0), RangeError);
  CHECK_THROWS_AS(marginal(mixture_1d(), 1.0), RangeError);
  CHECK_THROWS_AS(score_t(mixture_1d(), 0.5, wrong), DimensionError);
}

TEST_CASE("targets: time marginals") {
  const auto sn = GaussianMixture::standard_normal(3);
  for (double t : {0.01, 0.5, 0.99}) {
    const TimeMarginal mt = marginal(sn, t);
    const auto& c = mt.mixture().components()[0];
    CHECK(c.variance == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(norm2(c.mean) == 0.0);
  }
  const auto g = GaussianMixture::gaussian({2.0, -1.0}, 3.0);
  const TimeMarginal half = marginal(g, 0.5);
  const auto& c = half.mixture().components()[0];
  CHECK(c.mean[0] == doctest::Approx(2.0 / std::sqrt(2.0)));
  CHECK(c.mean[1] == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(c.variance == doctest::Approx(2.0));
  const TimeMarginal late = marginal(mixture_2d(), 1.0 - 1e-12);
  for (const auto& k : late.mixture().components()) {
    CHECK(std::abs(k.mean[0]) < 1e-5);
    CHECK(k.variance == doctest::Approx(1.0).epsilon(1e-10));
  }
  const auto m1 = mixture_at(mixture_1d(), 1.0);
  CHECK(m1.components()[1].variance == 1.0);
}

TEST_CASE("targets: time marginal integrates to one") {
  const auto m = mixture_1d();
  for (double t : {0.05, 0.3, 0.8}) {
    const TimeMarginal mt = marginal(m, t);
    const double mass = oracle::simpson(
        [&](double x) {
          const std::vector<double> p{x};
          return std::exp(mt.log_density(p));
        },
        -15.0, 15.0, 6000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("targets: stationary score") {
  const auto sn = GaussianMixture::standard_normal(2);
  const std::vector<double> x{0.7, -1.3};
  for (double t : {0.1, 0.6}) {
    const auto s = score_t(sn, t, x);
    CHECK(s[0] == doctest::Approx(-0.7));
    CHECK(s[1] == doctest::Approx(1.3));
    CHECK(hessian_trace_t(sn, t, x) == doctest::Approx(-2.0));
  }
}

TEST_CASE("targets: single Gaussian score") {
  const auto g = GaussianMixture::gaussian({1.0}, 2.0);
  for (double t : {0.2, 0.7}) {
    for (double v : {-1.0, 0.5, 3.0}) {
      const std::vector<double> x{v};
      const double expect = -(v - std::sqrt(1 - t)) / ((1 - t) * 2.0 + t);
      CHECK(score_t(g, t, x)[0] == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("targets: score and Hessian trace against finite differences") {
  const auto m = mixture_2d();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ut(0.02, 0.98);
  std::normal_distribution<double> nx(0.0, 1.5);
  for (int k = 0; k < 200; ++k) {
    const double t = ut(rng);
    std::vector<double> x{nx(rng), nx(rng)};
    const TimeMarginal mt = marginal(m, t);
    const auto s = mt.score(x);
    const double h = 1e-5 * std::max(1.0, std::sqrt(norm2(x)));
    double fd_trace = 0.0;
    for (int i = 0; i < 2; ++i) {
      auto f = [&](double v) {
        auto y = x;
        y[i] = v;
        return mt.log_density(y);
      };
      const double fd = oracle::central_diff(f, x[i], h);
      CHECK(std::abs(fd - s[i]) <= 1e-5 * std::max(1.0, std::abs(s[i])));
      auto g = [&](double v) {
        auto y = x;
        y[i] = v;
        return mt.score(y)[i];
      };
      fd_trace += oracle::central_diff(g, x[i], h);
    }
    const double tr = mt.hessian_trace(x);
    CHECK(std::abs(fd_trace - tr) <= 1e-4 * std::max(1.0, std::abs(tr)));
  }
}

TEST_CASE("targets: Hessian trace lower bound and exact identity") {
  const auto m = mixture_2d();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ut(1e-4, 1.0 - 1e-4);
  std::normal_distribution<double> nx(0.0, 3.0);
  for (int k = 0; k < 1000; ++k) {
    const double t = ut(rng);
    std::vector<double> x{nx(rng), nx(rng)};
    const TimeMarginal mt = marginal(m, t);
    const double tr = mt.hessian_trace(x);
    CHECK(tr >= -2.0 / t);
    const double rhs = -2.0 / t - norm2(mt.score(x)) + mt.posterior_second_moment(x) / (t * t);
    CHECK(std::abs(tr - rhs) <= 1e-8 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("targets: Tweedie identity") {
  const auto m = mixture_2d();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ut(0.01, 0.99);
  std::normal_distribution<double> nx(0.0, 2.0);
  for (int k = 0; k < 500; ++k) {
    const double t = ut(rng);
    std::vector<double> x{nx(rng), nx(rng)};
    const TimeMarginal mt = marginal(m, t);
    const auto s = mt.score(x);
    const auto mean0 = mt.posterior_mean_x0(x);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(s[i] + (x[i] - std::sqrt(1 - t) * mean0[i]) / t) <= 1e-10);
    }
  }
}

TEST_CASE("targets: posterior moments") {
  const auto g = GaussianMixture::gaussian({1.0, 2.0}, 0.5);
  const std::vector<double> x{0.3, 0.1};
  CHECK(posterior_component_weights(g, 0.4, x) == std::vector<double>{1.0});

  const auto sn = GaussianMixture::standard_normal(2);
  const double t = 0.3;
  const auto mean0 = posterior_mean_x0(sn, t, x);
  CHECK(mean0[0] == doctest::Approx(std::sqrt(1 - t) * 0.3));
  CHECK(mean0[1] == doctest::Approx(std::sqrt(1 - t) * 0.1));
  // x - sqrt(1-t) X0 | x ~ N(t x, t(1-t) I)
  CHECK(posterior_second_moment(sn, t, x) == doctest::Approx(t * t * norm2(x) + 2 * t * (1 - t)));

  const GaussianMixture bumps({Component{0.5, {-2.0}, 1.0}, Component{0.5, {2.0}, 1.0}});
  const std::vector<double> origin{0.0};
  const auto r = posterior_component_weights(bumps, 0.5, origin);
  CHECK(r[0] == doctest::Approx(0.5));
  CHECK(r[1] == doctest::Approx(0.5));
}

TEST_CASE("targets: sampling") {
  const auto sn = GaussianMixture::standard_normal(2);
  const std::size_t n = 100000;
  const PointSet a = sample0(sn, n, 42);
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m0 += a.row(i)[0];
    m1 += a.row(i)[1];
  }
  const double bound = 3.0 * std::sqrt(2.0 / n);
  CHECK(std::hypot(m0 / n, m1 / n) <= bound);

  const PointSet b = sample0(sn, n, 42);
  CHECK(std::equal(a.flat().begin(), a.flat().end(), b.flat().begin()));

  const GaussianMixture far({Component{0.3, {-20.0}, 1.0}, Component{0.7, {20.0}, 1.0}});
  const PointSet c = sample0(far, n, 7);
  std::size_t right = 0;
  for (std::size_t i = 0; i < n; ++i) right += c.row(i)[0] > 0.0 ? 1 : 0;
  const double freq = double(right) / n;
  CHECK(std::abs(freq - 0.7) <= 3.0 * std::sqrt(0.7 * 0.3 / n));
}

TEST_CASE("targets: epsilon predictors") {
  const Schedule s = build_schedule(100, 1.0, 1.5);
  const auto sn = GaussianMixture::standard_normal(2);
  const std::vector<double> x{0.4, -2.0};
  for (std::size_t t : {1u, 50u, 100u}) {
    const auto e = epsilon_star(sn, s, t, x);
    CHECK(e[0] == doctest::Approx(std::sqrt(1 - s.alpha_bar(t)) * 0.4));
    CHECK(e[1] == doctest::Approx(std::sqrt(1 - s.alpha_bar(t)) * -2.0));
  }
  const auto m = mixture_2d();
  const auto fn = exact_epsilon(m, s);
  std::vector<double> out(2);
  for (std::size_t t : {3u, 40u, 99u}) {
    const auto e = epsilon_star(m, s, t, x);
    const auto sc = score_t(m, s.time(t), x);
    fn(t, x, out);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(e[i] + std::sqrt(1 - s.alpha_bar(t)) * sc[i]) <= 1e-14);
      CHECK(out[i] == e[i]);
    }
  }
  const auto g = GaussianMixture::gaussian({0.5}, 2.0);
  const std::vector<double> y{1.1};
  const std::size_t t = 30;
  const TimeMarginal mt = marginal(g, s.time(t));
  const double fd = oracle::central_diff([&](double v) { std::vector<double> p{v}; return mt.log_density(p); }, 1.1, 1e-5);
  CHECK(epsilon_star(g, s, t, y)[0] == doctest::Approx(-std::sqrt(s.time(t)) * fd).epsilon(1e-8));
  CHECK_THROWS_AS(epsilon_star(m, s, 0, x), RangeError);
  CHECK_THROWS_AS(epsilon_star(m, s, 101, x), RangeError);
}

TEST_CASE("targets: predictor wrappers") {
  const Schedule s = build_schedule(50, 1.0, 1.0);
  const auto m = mixture_1d();
  const std::vector<double> x{0.2};
  std::vector<double> base(1), out(1);
  exact_epsilon(m, s)(10, x, base);
  parse_predictor("bias:0.5", m, s)(10, x, out);
  CHECK(out[0] == doctest::Approx(base[0] + 0.5));
  parse_predictor("scale:1.2", m, s)(10, x, out);
  CHECK(out[0] == doctest::Approx(1.2 * base[0]));
  parse_predictor("zero", m, s)(10, x, out);
  CHECK(out[0] == 0.0);
  score_from_epsilon(exact_epsilon(m, s), s)(10, x, out);
  CHECK(out[0] == doctest::Approx(score_t(m, s.time(10), x)[0]));
  CHECK_THROWS_AS(parse_predictor("bias:abc", m, s), ParameterError);
  CHECK_THROWS_AS(parse_predictor("magic", m, s), ParameterError);
}

TEST_CASE("targets: labeled family") {
  const LabeledFamily f({"a", "b"}, {GaussianMixture::gaussian({-1.0}, 1.0), GaussianMixture::gaussian({1.0}, 1.0)});
  CHECK(f.uniform_prior());
  CHECK(f.index_of("b") == 1);
  CHECK_THROWS_AS(f.index_of("c"), ParameterError);
  const LabeledFamily g({"a", "b"}, {GaussianMixture::gaussian({-1.0}, 1.0), GaussianMixture::gaussian({1.0}, 1.0)},
                        {0.25, 0.75});
  CHECK_FALSE(g.uniform_prior());
  CHECK_THROWS_AS(LabeledFamily({"a", "a"}, {GaussianMixture::standard_normal(1), GaussianMixture::standard_normal(1)}),
                  ParameterError);
  CHECK_THROWS_AS(LabeledFamily({"a", "b"}, {GaussianMixture::standard_normal(1), GaussianMixture::standard_normal(2)}),
                  DimensionError);
  CHECK_THROWS_AS(LabeledFamily({"a", "b"}, {GaussianMixture::standard_normal(1), GaussianMixture::standard_normal(1)},
                                {0.5, 0.6}),
                  ParameterError);
}
