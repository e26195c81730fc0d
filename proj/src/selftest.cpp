#include "scoredens/selftest.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "scoredens/classifier.hpp"
#include "scoredens/density.hpp"
#include "scoredens/elbo.hpp"
#include "scoredens/gan.hpp"
#include "scoredens/mc.hpp"
#include "scoredens/mixture.hpp"
#include "scoredens/predictor.hpp"
#include "scoredens/sampler.hpp"
#include "scoredens/schedule.hpp"

namespace scoredens {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct CheckFailed {
  std::string what;
};

void expect_near(double got, double want, double tol, const std::string& what) {
  if (!(std::abs(got - want) <= tol)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << what << ": got " << got << ", expected " << want << " (tol " << tol << ")";
    throw CheckFailed{msg.str()};
  }
}

void expect(bool cond, const std::string& what) {
  if (!cond) {
    throw CheckFailed{what};
  }
}

class Runner {
 public:
  void run(const std::string& name, const std::function<void()>& body) {
    CheckResult r{name, CheckStatus::pass, ""};
    try {
      body();
    } catch (const CheckFailed& f) {
      r.status = CheckStatus::fail;
      r.detail = f.what;
    } catch (const std::exception& e) {
      r.status = CheckStatus::fail;
      r.detail = std::string("exception: ") + e.what();
    }
    report.checks.push_back(r);
  }
  void skip(const std::string& name, const std::string& why) {
    report.checks.push_back(CheckResult{name, CheckStatus::skip, why});
  }
  SelftestReport report;
};

GaussianMixture two_bumps() {
  return GaussianMixture({Component{0.5, {-2.0}, 1.0}, Component{0.5, {2.0}, 1.0}});
}

}  // namespace

std::size_t SelftestReport::count(CheckStatus s) const {
  std::size_t n = 0;
  for (const auto& c : checks) {
    n += c.status == s ? 1 : 0;
  }
  return n;
}

SelftestReport run_selftest(const SelftestOptions& options) {
  Runner r;

  std::optional<Schedule> sched;
  r.run("schedule: construction and grid identities", [&] {
    Schedule base = build_schedule(100, 2.0, 2.0);
    std::vector<double> betas(base.betas().begin(), base.betas().end());
    if (options.inject_beta) {
      betas[1] = *options.inject_beta;
    }
    const Schedule s = custom_schedule(betas);
    expect_near(s.beta(1), 1e-4, 1e-18, "beta_1");
    expect(s.alpha(s.steps() + 1) == 0.0, "alpha_{T+1} must be 0");
    for (std::size_t i = 1; i < s.steps(); ++i) {
      const double step = s.time(i + 1) - s.time(i);
      expect_near(step, s.alpha_bar(i) * s.beta(i + 1), 1e-15, "t_{i+1} - t_i");
      expect(s.alpha_bar(i + 1) < s.alpha_bar(i), "alpha_bar must decrease");
    }
    expect_near(s.time(1), s.beta(1), 1e-18, "t_1 = beta_1");
    sched = base;
  });

  r.run("schedule: custom betas", [] {
    const Schedule s = custom_schedule({0.1, 0.2});
    expect_near(s.alpha_bar(2), 0.72, 1e-15, "alpha_bar_2");
    expect_near(s.time(2), 0.28, 1e-15, "t_2");
    bool threw = false;
    try {
      custom_schedule({});
    } catch (const ParameterError&) {
      threw = true;
    }
    expect(threw, "empty beta list must be rejected");
  });

  if (sched) {
    r.run("schedule: coefficient gap closed forms", [&] {
      const auto g = coefficient_gap(*sched, 50);
      const double elbo = sched->beta(51) / (2.0 * (1.0 - sched->alpha_bar(50)));
      const double vlb = sched->beta(50) / (2.0 * (sched->alpha(50) - sched->alpha_bar(50)));
      expect_near(g.elbo_coeff, elbo, 1e-12 * elbo, "elbo coefficient");
      expect_near(g.vlb_coeff, vlb, 1e-12 * vlb, "vlb coefficient");
    });
  } else {
    r.skip("schedule: coefficient gap closed forms", "schedule check failed");
  }

  r.run("targets: log densities", [] {
    const auto sn = GaussianMixture::standard_normal(2);
    const std::vector<double> zero{0.0, 0.0};
    expect_near(sn.log_density(zero), -kLog2Pi, 1e-14, "standard normal at 0");
    const std::vector<double> x{0.0};
    expect_near(two_bumps().log_density(x), -2.0 - 0.5 * kLog2Pi, 1e-14, "two-bump mixture at 0");
  });

  r.run("targets: time marginal", [] {
    const auto g = GaussianMixture::gaussian({1.0, -2.0}, 3.0);
    const auto mt = marginal(g, 0.5).mixture();
    expect_near(mt.components()[0].mean[0], 1.0 / std::sqrt(2.0), 1e-15, "mean");
    expect_near(mt.components()[0].variance, 2.0, 1e-15, "variance");
  });

  r.run("targets: score, Hessian trace and Tweedie identities", [] {
    const GaussianMixture m({Component{0.3, {-1.0, 0.5}, 0.5}, Component{0.7, {1.5, -0.5}, 2.0}});
    const std::vector<double> x{0.3, -0.7};
    for (double t : {0.05, 0.4, 0.9}) {
      const TimeMarginal mt = marginal(m, t);
      const auto s = mt.score(x);
      const double tr = mt.hessian_trace(x);
      const double m2 = mt.posterior_second_moment(x);
      double s2 = s[0] * s[0] + s[1] * s[1];
      const double identity = -2.0 / t - s2 + m2 / (t * t);
      expect_near(tr, identity, 1e-8 * std::abs(identity), "trace identity");
      expect(tr >= -2.0 / t, "trace lower bound");
      const auto mean0 = mt.posterior_mean_x0(x);
      for (int i = 0; i < 2; ++i) {
        expect_near(s[i], -(x[i] - std::sqrt(1.0 - t) * mean0[i]) / t, 1e-10, "Tweedie");
      }
    }
  });

  r.run("targets: epsilon predictor, stationary case", [] {
    const auto sn = GaussianMixture::standard_normal(1);
    const Schedule s = build_schedule(50, 1.0, 1.0);
    const std::vector<double> x{1.3};
    const auto e = epsilon_star(sn, s, 20, x);
    expect_near(e[0], std::sqrt(1.0 - s.alpha_bar(20)) * 1.3, 1e-14, "eps*");
  });

  r.run("mc: constant, odd and deterministic integrands", [] {
    McConfig cfg;
    cfg.n_samples = 1000;
    const auto one = gaussian_expectation([](std::span<const double>) { return 1.0; }, 2, cfg);
    expect(one.mean == 1.0 && one.std_error == 0.0, "constant integrand");
    const auto odd = gaussian_expectation([](std::span<const double> e) { return e[0]; }, 2, cfg);
    expect(odd.mean == 0.0, "antithetic odd integrand");
    auto sq = [](std::span<const double> e) { return e[0] * e[0]; };
    const auto a = gaussian_expectation(sq, 1, cfg);
    const auto b = gaussian_expectation(sq, 1, cfg);
    expect(a.mean == b.mean && a.std_error == b.std_error, "determinism");
  });

  r.run("density: stationary integrand", [] {
    const auto sn = GaussianMixture::standard_normal(1);
    McConfig cfg;
    cfg.n_samples = 200;
    const std::vector<double> x0{2.0};
    for (double t : {0.1, 0.5, 0.9}) {
      expect_near(integrand_D(sn, t, x0, cfg).mean, 1.5, 1e-10, "D(t, 2)");
    }
  });

  r.run("density: probability-flow ODE, stationary case", [] {
    const auto sn = GaussianMixture::standard_normal(2);
    const std::vector<double> x0{0.5, -1.0};
    const auto o = ode_log_density(sn, x0, 100, 1e-3);
    expect_near(o.total, -kLog2Pi - 0.625, 1e-10, "ODE log density");
  });

  r.run("density: rescaled-path derivative, stationary case", [] {
    const auto sn = GaussianMixture::standard_normal(1);
    const std::vector<double> y{1.2};
    const auto c = claim1_check(sn, 0.3, y, 1e-5);
    expect_near(c.analytic, 0.72, 1e-12, "analytic derivative");
    expect_near(c.fd, 0.72, 1e-6, "finite difference");
  });

  r.run("elbo: Gaussian KL and L_T", [] {
    const std::vector<double> a{1.0}, z{0.0};
    expect_near(kl_gaussian(a, 1.0, a, 1.0), 0.0, 0.0, "identical");
    expect_near(kl_gaussian(a, 1.0, z, 1.0), 0.5, 1e-15, "mean shift");
    expect_near(kl_gaussian(z, 2.0, z, 1.0), 0.5 * (1.0 + std::log(0.5)), 1e-15, "variance ratio");
    expect_near(lt_term(custom_schedule({0.5}), z), 0.5 + 0.5 * std::log(0.5), 1e-15, "L_T");
  });

  r.run("classifier: softmax shift invariance", [] {
    const std::vector<double> a{-3.0, 1.0, 2.5};
    const std::vector<double> b{-3.0 + 100.0, 1.0 + 100.0, 2.5 + 100.0};
    const auto pa = softmax(a);
    const auto pb = softmax(b);
    for (std::size_t i = 0; i < a.size(); ++i) {
      expect_near(pa[i], pb[i], 1e-15, "shifted softmax");
    }
  });

  r.run("gan: lambda = 0 equilibrium", [] {
    const auto p = GaussianMixture::standard_normal(1);
    const auto sol = solve_equilibrium(p, 0.0, GridSpec{20001, 10.0});
    expect_near(sol.z, 2.0, 1e-6, "z");
    for (std::size_t i = 0; i < sol.grid.size(); i += 97) {
      expect_near(sol.p_g[i], sol.p_data[i], 1e-8, "p_G");
      expect_near(sol.d[i], 0.5, 1e-8, "D");
    }
  });

  r.run("sampler: determinism", [] {
    const auto sn = GaussianMixture::standard_normal(1);
    const Schedule s = build_schedule(50, 1.0, 1.0);
    const auto a = reverse_sample(sn, s, 64, 11);
    const auto b = reverse_sample(sn, s, 64, 11);
    for (std::size_t i = 0; i < 64; ++i) {
      expect(a.points.row(i)[0] == b.points.row(i)[0], "identical samples");
    }
    expect(a.trace.size() == 51, "trace length T + 1");
  });

  return r.report;
}

}  // namespace scoredens
