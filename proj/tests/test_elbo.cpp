#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "scoredens/elbo.hpp"
#include "scoredens/errors.hpp"

using namespace scoredens;

namespace {

GaussianMixture target() { return GaussianMixture({Component{0.6, {-2.0}, 1.0}, Component{0.4, {2.0}, 0.25}}); }
const oracle::Mix1 kTarget{{0.6, 0.4}, {-2.0, 2.0}, {1.0, 0.25}};

McConfig small(std::size_t n = 4000, std::uint64_t seed = 1) {
  McConfig c;
  c.n_samples = n;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("elbo: Gaussian KL") {
  const std::vector<double> a{0.0, 0.0}, b{1.0, -1.0};
  CHECK(kl_gaussian(a, 1.0, a, 1.0) == 0.0);
  CHECK(kl_gaussian(a, 1.0, b, 1.0) == doctest::Approx(1.0));
  // d/2 (r - 1 - log r) with r = 2
  CHECK(kl_gaussian(a, 2.0, a, 1.0) == doctest::Approx(1.0 - std::log(2.0)));
  CHECK(kl_gaussian(a, 1.0, b, 2.0) == doctest::Approx(0.5 * (2 * (0.5 - 1 - std::log(0.5)) + 1.0)));
  CHECK(kl_gaussian(a, 1.0 + 1e-13, a, 1.0) >= 0.0);
  CHECK_THROWS_AS(kl_gaussian(a, 0.0, a, 1.0), ParameterError);
  CHECK_THROWS_AS(kl_gaussian(a, 1.0, std::vector<double>{1.0}, 1.0), DimensionError);
}

TEST_CASE("elbo: a VLB step matches the expected KL between reverse transitions") {
  const Schedule s = build_schedule(100, 0.75, 1.75);
  const std::vector<double> x0{0.5};
  const EpsilonFn eps = exact_epsilon(target(), s);
  for (std::size_t t : {2u, 10u, 50u, 100u}) {
    const double ab = s.alpha_bar(t), abp = s.alpha_bar(t - 1), beta = s.beta(t), a = 1 - beta;
    const double post_var = beta * (1 - abp) / (1 - ab);
    const double referee = oracle::normal_expectation([&](double e) {
      const double xt = std::sqrt(ab) * x0[0] + std::sqrt(1 - ab) * e;
      const double mu_q = std::sqrt(abp) * beta / (1 - ab) * x0[0] + std::sqrt(a) * (1 - abp) / (1 - ab) * xt;
      double pred = 0.0;
      eps(t, std::span<const double>(&xt, 1), std::span<double>(&pred, 1));
      const double mu_p = (xt - beta / std::sqrt(1 - ab) * pred) / std::sqrt(a);
      return (mu_q - mu_p) * (mu_q - mu_p) / (2 * post_var);
    });
    const auto est = vlb_term(target(), s, t, x0, small(20000));
    CHECK(std::abs(est.mean - referee) <= 3 * est.std_error + 1e-9);
  }
  CHECK_THROWS_AS(vlb_term(target(), s, 1, x0, small()), RangeError);
  CHECK_THROWS_AS(vlb_term(target(), s, 101, x0, small()), RangeError);
}

TEST_CASE("elbo: C0 term and the L_T term") {
  const auto sn = GaussianMixture::standard_normal(1);
  const Schedule s = build_schedule(200, 0.75, 1.75);
  const double b = s.beta(1), a = s.alpha(1);
  const std::vector<double> x0{1.2};
  // Residual is (1 - b) eps - sqrt(a b) x0.
  const double expect = -0.5 * (oracle::kLog2Pi + std::log(b / a)) - 0.5 * ((1 - b) * (1 - b) + a * b * 1.44);
  const auto c0 = c0_term(sn, s, x0, small(20000));
  CHECK(std::abs(c0.mean - expect) <= 3 * c0.std_error + 1e-9);

  for (double v : {0.0, 1.0, -3.0}) {
    const std::vector<double> p{v, 2 * v};
    const double ab = s.alpha_bar(s.steps());
    const std::vector<double> mean{std::sqrt(ab) * p[0], std::sqrt(ab) * p[1]};
    const std::vector<double> zero{0.0, 0.0};
    CHECK(lt_term(s, p) == doctest::Approx(kl_gaussian(zero, 1.0, mean, 1 - ab)).epsilon(1e-10));
    CHECK(lt_term(s, p) >= 0.0);
  }
  const Schedule tiny = build_schedule(1000, 0.75, 1.75);
  const double abT = tiny.alpha_bar(tiny.steps());
  CHECK(lt_term(tiny, std::vector<double>{0.0}) == doctest::Approx(0.25 * abT * abT).epsilon(1e-3));
}

TEST_CASE("elbo: total L is the negated discrete density offset by C0*") {
  const Schedule s = build_schedule(300, 0.75, 1.75);
  const McConfig cfg = small(500, 3);
  for (double v : {-2.0, 0.0, 1.5}) {
    const std::vector<double> x0{v};
    const auto e = elbo_total(target(), s, x0, cfg);
    const auto r = log_density_discrete(target(), s, x0, cfg);
    CHECK(e.total_L == doctest::Approx(c0_star(s, 1) - r.total).epsilon(1e-12));
    CHECK(e.total_se == doctest::Approx(r.total_std_error).epsilon(1e-12));
    CHECK(e.steps.size() == s.steps());
    CHECK(e.total_L >= 0.0);
  }
}

TEST_CASE("elbo: simple loss in the stationary case") {
  const auto sn = GaussianMixture::standard_normal(1);
  const Schedule s = build_schedule(100, 1.0, 1.5);
  const std::vector<double> x0{0.7};
  double expect = 0.0;
  for (std::size_t t = 1; t <= s.steps(); ++t) {
    const double ab = s.alpha_bar(t);
    expect += (ab * ab + ab * (1 - ab) * 0.49) / s.steps();
  }
  const auto e = elbo_simple(sn, s, x0, small(20000));
  CHECK(std::abs(e.mean - expect) <= 3 * e.std_error + 1e-9);
}

TEST_CASE("elbo: KL gap is nonnegative up to noise and reproducible") {
  const Schedule s = build_schedule(100, 0.75, 1.75);
  const auto a = kl_gap(target(), s, small(200), 64, 11);
  const auto b = kl_gap(target(), s, small(200), 64, 11);
  CHECK(a.mean == b.mean);
  CHECK(a.mean > -3 * a.std_error);
  CHECK_THROWS_AS(kl_gap(target(), s, small(200), 1, 11), ParameterError);

  // A worse predictor widens the gap.
  const EpsilonFn biased = with_bias(exact_epsilon(target(), s), {0.5});
  const auto c = kl_gap(target(), s, small(200), 64, 11, &biased);
  CHECK(c.mean > a.mean);
}

TEST_CASE("elbo: the exact predictor minimizes the joint risk") {
  const Schedule s = build_schedule(200, 0.75, 1.75);
  for (std::size_t t : {1u, 50u, 200u}) {
    const std::vector<double> b{0.2};
    const auto r = optimal_predictor_check(target(), s, t, b, small(20000, 2));
    CHECK(std::abs(r.excess.mean - 0.04) <= 4 * r.excess.std_error);
    CHECK(r.perturbed.mean > r.base.mean);
  }
  const auto sn2 = GaussianMixture::standard_normal(2);
  const std::vector<double> b2{0.1, -0.2};
  const auto r2 = optimal_predictor_check(sn2, s, 20, b2, small(20000, 3));
  CHECK(std::abs(r2.excess.mean - 0.05) <= 4 * r2.excess.std_error);
  CHECK_THROWS_AS(optimal_predictor_check(target(), s, 0, std::vector<double>{0.0}, small()), RangeError);
  CHECK_THROWS_AS(optimal_predictor_check(target(), s, 1, b2, small()), DimensionError);
}

TEST_CASE("elbo: expected ELBO shift is b^2 times the coefficient sum") {
  const Schedule s = build_schedule(50, 0.75, 1.75);
  const std::vector<double> b{0.3};
  double coeff = 0.0;
  for (double w : elbo_weights(s)) coeff += w;
  const auto shift = expected_elbo_shift(target(), s, b, small(4000));
  CHECK(std::abs(shift.mean - 0.09 * coeff) <= 4 * shift.std_error);
}

TEST_CASE("elbo: diffusion loss") {
  const Schedule s = build_schedule(100, 0.75, 1.75);
  const std::vector<double> x{0.4};
  const McConfig cfg = small(400, 6);
  const auto w = elbo_weights(s);
  const auto loss = diffusion_loss(target(), s, x, w, cfg);
  CHECK(loss.mean == doctest::Approx(elbo_total(target(), s, x, cfg).total_L).epsilon(1e-12));

  const std::vector<double> zero_w(s.steps(), 0.0);
  CHECK(diffusion_loss(target(), s, x, zero_w, cfg).mean == 0.0);
  CHECK_THROWS_AS(diffusion_loss(target(), s, x, std::vector<double>(3, 1.0), cfg), ParameterError);

  const LabeledFamily fam({"a", "b"}, {target(), GaussianMixture::standard_normal(1)});
  CHECK(diffusion_loss(fam, s, "a", x, w, cfg).mean == loss.mean);
  CHECK_THROWS_AS(diffusion_loss(fam, s, "c", x, w, cfg), ParameterError);
}

TEST_CASE("elbo: empirical risk argmin sits at the grid point nearest the sample mean") {
  const Schedule s = build_schedule(100, 0.75, 1.75);
  const auto data_set = sample0(GaussianMixture::gaussian({0.3}, 1.0), 40, 9);
  std::vector<double> data;
  for (std::size_t i = 0; i < data_set.size(); ++i) data.push_back(data_set.row(i)[0]);
  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back(0.1 * i);
  const auto r = empirical_risk(s, data, grid, small(200));
  CHECK(r.argmin_theta == doctest::Approx(r.mle_nearest_theta));
  CHECK(r.risk.size() == grid.size());
  // Risk is convex in theta on the grid.
  for (std::size_t g = 1; g + 1 < grid.size(); ++g) {
    CHECK(r.risk[g - 1].mean + r.risk[g + 1].mean - 2 * r.risk[g].mean >= -1e-9);
  }
  CHECK_THROWS_AS(empirical_risk(s, std::vector<double>{}, grid, small()), ParameterError);
  CHECK_THROWS_AS(empirical_risk(s, data, std::vector<double>{}, small()), ParameterError);
}
