#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include "scoredens/errors.hpp"
#include "scoredens/mc.hpp"
#include "scoredens/parallel.hpp"

using namespace scoredens;

TEST_CASE("mc: constant integrand has zero error") {
  McConfig cfg;
  cfg.n_samples = 1000;
  const auto e = gaussian_expectation([](std::span<const double>) { return 1.0; }, 3, cfg);
  CHECK(e.mean == 1.0);
  CHECK(e.std_error == 0.0);
  CHECK(e.n_used == 1000);
}

TEST_CASE("mc: second moment of a standard normal") {
  for (bool anti : {true, false}) {
    McConfig cfg;
    cfg.n_samples = 100000;
    cfg.antithetic = anti;
    const auto e = gaussian_expectation(
        [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }, 3, cfg);
    CHECK(std::abs(e.mean - 3.0) <= 3.0 * e.std_error);
    CHECK(e.std_error > 0.0);
  }
}

TEST_CASE("mc: antithetic pairing cancels odd integrands exactly") {
  McConfig cfg;
  cfg.n_samples = 5000;
  const auto e = gaussian_expectation([](std::span<const double> x) { return x[0]; }, 2, cfg);
  CHECK(e.mean == 0.0);
  CHECK(e.std_error == 0.0);
}

TEST_CASE("mc: determinism") {
  McConfig cfg;
  cfg.n_samples = 2000;
  cfg.seed = 99;
  cfg.stream_id = 4;
  auto f = [](std::span<const double> x) { return std::exp(0.3 * x[0]) * std::cos(x[1]); };
  const auto a = gaussian_expectation(f, 2, cfg);
  const auto b = gaussian_expectation(f, 2, cfg);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  const auto c = gaussian_expectation(f, 2, cfg.with_stream(5));
  CHECK(c.mean != a.mean);
}

TEST_CASE("mc: substreams are uncorrelated") {
  const std::size_t n = 20000;
  for (std::uint64_t id : {1u, 2u, 1000u}) {
    const CounterStream a(7, 0);
    const CounterStream b(7, id);
    double sab = 0.0, sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = a.normal(i), y = b.normal(i);
      sab += x * y;
      sa += x;
      sb += y;
      saa += x * x;
      sbb += y * y;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
    CHECK(std::abs(corr) < 5.0 / std::sqrt(double(n)));
  }
  // Different seeds with the same stream id are unrelated too.
  CHECK(CounterStream(1, 3).bits(0) != CounterStream(2, 3).bits(0));
}

TEST_CASE("mc: uniforms are in the open unit interval and normals look normal") {
  const CounterStream s(123, 0);
  double m = 0.0, m2 = 0.0, m4 = 0.0;
  const std::size_t n = 200000;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = s.uniform(i);
    CHECK_UNARY(u > 0.0 && u < 1.0);
    const double z = s.normal(i);
    m += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  CHECK(std::abs(m / n) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(m2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("mc: antithetic and plain estimators agree") {
  auto f = [](std::span<const double> x) { return std::exp(0.5 * x[0] - 0.2 * x[1] * x[1]) + x[0] * x[1]; };
  McConfig a;
  a.n_samples = 40000;
  McConfig p = a;
  p.antithetic = false;
  p.seed = 17;
  const auto ea = gaussian_expectation(f, 2, a);
  const auto ep = gaussian_expectation(f, 2, p);
  CHECK(std::abs(ea.mean - ep.mean) <= 3.0 * std::hypot(ea.std_error, ep.std_error));
  // E exp(0.5 x - 0.2 y^2) = e^{1/8} / sqrt(1.4)
  const double exact = std::exp(0.125) / std::sqrt(1.4);
  CHECK(std::abs(ep.mean - exact) <= 3.0 * ep.std_error);
}

TEST_CASE("mc: vector estimates share draws with scalar estimates") {
  McConfig cfg;
  cfg.n_samples = 1000;
  cfg.seed = 3;
  auto f0 = [](std::span<const double> x) { return x[0] * x[0]; };
  auto f1 = [](std::span<const double> x) { return std::sin(x[0]) + x[0] * x[0] * x[0] * x[0]; };
  const auto v = gaussian_expectations(
      [&](std::span<const double> x, std::span<double> out) {
        out[0] = f0(x);
        out[1] = f1(x);
      },
      1, 2, cfg);
  CHECK(v[0].mean == gaussian_expectation(f0, 1, cfg).mean);
  CHECK(v[1].mean == gaussian_expectation(f1, 1, cfg).mean);
}

TEST_CASE("mc: configuration and numeric errors") {
  McConfig cfg;
  cfg.n_samples = 1;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.n_samples = 11;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.antithetic = false;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_samples = 100;
  CHECK_THROWS_AS(gaussian_expectation(
                      [](std::span<const double> x) {
                        return x[0] > 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
                      },
                      1, cfg),
                  NumericError);
}

TEST_CASE("mc: weighted sums add errors in quadrature") {
  const std::vector<McEstimate> terms{{1.0, 0.3, 10}, {2.0, 0.4, 10}};
  const std::vector<double> w{2.0, -1.0};
  const auto e = weighted_sum(w, terms);
  CHECK(e.mean == doctest::Approx(0.0));
  CHECK(e.std_error == doctest::Approx(std::hypot(0.6, 0.4)));
  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(weighted_sum(bad, terms), DimensionError);
}

TEST_CASE("parallel: results do not depend on the thread count") {
  std::vector<double> one(1000), many(1000);
  set_max_threads(1);
  parallel_for(1000, [&](std::size_t i) { one[i] = std::sin(double(i)); });
  set_max_threads(8);
  parallel_for(1000, [&](std::size_t i) { many[i] = std::sin(double(i)); });
  set_max_threads(0);
  CHECK(one == many);
}

TEST_CASE("parallel: nested loops and exceptions") {
  std::atomic<int> count{0};
  parallel_for(8, [&](std::size_t) { parallel_for(8, [&](std::size_t) { ++count; }); });
  CHECK(count.load() == 64);
  set_max_threads(4);
  CHECK_THROWS_WITH(parallel_for(100,
                                 [](std::size_t i) {
                                   if (i == 37 || i == 80) throw std::runtime_error("bad " + std::to_string(i));
                                 }),
                    "bad 37");
  set_max_threads(0);
}
