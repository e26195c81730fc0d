// scoredens command-line interface.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "scoredens/classifier.hpp"
#include "scoredens/density.hpp"
#include "scoredens/elbo.hpp"
#include "scoredens/errors.hpp"
#include "scoredens/gan.hpp"
#include "scoredens/io.hpp"
#include "scoredens/mixture.hpp"
#include "scoredens/parallel.hpp"
#include "scoredens/predictor.hpp"
#include "scoredens/sampler.hpp"
#include "scoredens/schedule.hpp"
#include "scoredens/selftest.hpp"
#include "scoredens/version.hpp"

using namespace scoredens;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSelftest = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string model;
  std::string family;
  std::size_t T = kDefaultSteps;
  double c0 = kDefaultC0;
  double c1 = kDefaultC1;
  std::string schedule;
  std::string point;
  std::string points;
  std::uint64_t seed = 0;
  std::size_t samples = 10000;
  bool no_antithetic = false;
  double lambda = 1.0;
  double delta = 1e-3;
  std::string out;
  std::string format = "json";
  std::size_t threads = 0;
  std::string predictor = "exact";
  std::string config;

  // subcommand-specific
  std::string method = "discrete";
  std::size_t grid = 0;
  std::size_t ode_steps = 1000;
  double t1 = 0.2;
  double t2 = 0.6;
  std::size_t quad = kDefaultQuadratureNodes;
  bool shared_noise = false;
  std::vector<double> t_one{0.9, 0.99, 0.999, 0.9999};
  std::vector<double> t_zero{1e-2, 1e-3, 1e-4};
  std::size_t outer = 0;
  double tol = 1e-3;
  std::size_t particles = 10000;
  std::string trace_out;
  std::size_t n_points = 1000;
  std::optional<double> inject_beta;
};

McConfig mc_config(const Options& o) {
  McConfig c;
  c.n_samples = o.samples;
  c.seed = o.seed;
  c.antithetic = !o.no_antithetic;
  c.validate();
  return c;
}

Schedule resolve_schedule(const Options& o) {
  if (!o.schedule.empty()) {
    return schedule_from_json(read_json_file(o.schedule));
  }
  return build_schedule(o.T, o.c0, o.c1);
}

std::vector<double> resolve_point(const Options& o, std::size_t d) {
  if (o.point.empty()) {
    throw ParameterError("--point is required");
  }
  auto x = parse_point(o.point);
  if (x.size() != d) {
    throw DimensionError("--point has " + std::to_string(x.size()) + " coordinates, model dimension is " +
                         std::to_string(d));
  }
  return x;
}

GaussianMixture resolve_model(const Options& o) {
  if (!o.model.empty()) {
    return mixture_from_json(read_json_file(o.model));
  }
  const std::size_t d = o.point.empty() ? 1 : parse_point(o.point).size();
  return GaussianMixture::standard_normal(d);
}

/// Resolved option values of the parsed command line, for the output header.
Json collect_config(const CLI::App& app, const CLI::App& sub) {
  Json opts = Json::object();
  auto add = [&](const CLI::App& a) {
    for (const CLI::Option* opt : a.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config" || name == "out" || name == "trace-out" ||
          name == "format" || name == "threads") {
        continue;
      }
      if (opt->get_type_size() == 0) {
        if (opt->count() > 0) {
          opts[name] = true;
        }
        continue;
      }
      std::vector<std::string> vals;
      if (opt->count() > 0) {
        vals = opt->results();
      } else if (!opt->get_default_str().empty()) {
        vals.push_back(opt->get_default_str());
      }
      if (vals.empty()) {
        continue;
      }
      if (vals.size() == 1 && opt->get_expected_max() <= 1) {
        opts[name] = vals.front();
      } else {
        opts[name] = vals;
      }
    }
  };
  add(app);
  add(sub);
  return Json{{"command", sub.get_name()}, {"options", opts}};
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) {
        throw ParameterError("cannot write '" + path + "'");
      }
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

Json header(const Json& config, const Options& o, const Json& resolved) {
  return Json{{"tool", "scoredens"},
              {"version", kVersion},
              {"seed", o.seed},
              {"config", config},
              {"resolved", resolved}};
}

Json mc_json(const Options& o) {
  return Json{{"n_samples", o.samples},
              {"seed", o.seed},
              {"antithetic", !o.no_antithetic},
              {"streams", "per-step substream id = step index; counter-based SplitMix64, Box-Muller normals"}};
}

void emit_json(Output& out, const Json& head, const Json& result) {
  out.stream() << Json{{"header", head}, {"result", result}}.dump(2) << '\n';
}

void emit_csv_header(Output& out, const Json& head) { out.stream() << "# " << head.dump() << '\n'; }

int run_schedule(const Options& o, const Json& cfg) {
  const Schedule s = resolve_schedule(o);
  Output out(o.out);
  const Json head = header(cfg, o, to_json(s, false));
  if (o.format == "csv") {
    emit_csv_header(out, head);
    auto& os = out.stream();
    os.precision(17);
    os << "t,beta,alpha_bar,t_grid,elbo_coeff,vlb_coeff,gap,bound\n";
    for (std::size_t t = 1; t <= s.steps(); ++t) {
      os << t << ',' << s.beta(t) << ',' << s.alpha_bar(t) << ',' << s.time(t) << ',' << s.elbo_coefficient(t);
      if (t >= 2 && s.c1()) {
        const auto g = coefficient_gap(s, t);
        os << ',' << g.vlb_coeff << ',' << g.gap << ',' << g.bound;
      } else if (t >= 2) {
        os << ',' << s.vlb_coefficient(t) << ",,";
      } else {
        os << ",,,";
      }
      os << '\n';
    }
    return kExitOk;
  }
  Json result = to_json(s, true);
  if (s.c1() && s.steps() >= 2) {
    std::size_t violations = 0;
    std::vector<std::size_t> where;
    double worst = 0.0;
    for (std::size_t t = 2; t <= s.steps(); ++t) {
      const auto g = coefficient_gap(s, t);
      worst = std::max(worst, g.gap / g.bound);
      if (!g.within_bound) {
        ++violations;
        if (where.size() < 20) where.push_back(t);
      }
    }
    result["coefficient_gap"] = Json{{"violations", violations}, {"first_violations", where}, {"max_gap_over_bound", worst}};
  }
  emit_json(out, head, result);
  return kExitOk;
}

int run_density(const Options& o, const Json& cfg) {
  const GaussianMixture m = resolve_model(o);
  const auto x0 = resolve_point(o, m.dim());
  const McConfig mc = mc_config(o);
  Json resolved{{"model", to_json(m)}, {"mc", mc_json(o)}, {"method", o.method}};
  Json result;
  std::vector<StepRecord> steps;
  if (o.method == "discrete") {
    const Schedule s = resolve_schedule(o);
    resolved["schedule"] = to_json(s, false);
    resolved["predictor"] = o.predictor;
    const EpsilonFn eps = parse_predictor(o.predictor, m, s);
    const DensityReport r = log_density_discrete(m, s, x0, mc, &eps);
    result = to_json(r, false);
    steps = r.steps;
  } else if (o.method == "smoothed") {
    const std::size_t cells = o.grid == 0 ? kDefaultQuadratureNodes : o.grid;
    resolved["delta"] = o.delta;
    resolved["grid_cells"] = cells;
    const DensityReport r = log_density_smoothed(m, x0, o.delta, mc, cells);
    result = to_json(r, false);
    result["note"] = "smoothed value is E[log rho_delta(X_delta) | X_0 = x0], not log rho_0(x0)";
    steps = r.steps;
  } else if (o.method == "ode") {
    resolved["delta"] = o.delta;
    resolved["ode_steps"] = o.ode_steps;
    const OdeResult r = ode_log_density(m, x0, o.ode_steps, o.delta);
    result = Json{{"method", "ode"}, {"x0", x0}, {"total", r.total}, {"x_end", r.x_end},
                  {"log_density_end", r.log_density_end}, {"trace_integral", r.trace_integral}};
  } else {
    throw ParameterError("--method must be discrete, smoothed or ode");
  }
  result["reference_log_density"] = m.log_density(x0);
  Output out(o.out);
  const Json head = header(cfg, o, resolved);
  if (o.format == "csv") {
    emit_csv_header(out, head);
    write_steps_csv(out.stream(), steps);
  } else {
    emit_json(out, head, result);
  }
  return kExitOk;
}

int run_theorem1(const Options& o, const Json& cfg) {
  const GaussianMixture m = resolve_model(o);
  const auto x0 = resolve_point(o, m.dim());
  const McConfig mc = mc_config(o);
  const auto r = theorem1_check(m, x0, o.t1, o.t2, mc, o.quad, o.shared_noise);
  Output out(o.out);
  emit_json(out, header(cfg, o, Json{{"model", to_json(m)}, {"mc", mc_json(o)}}),
            Json{{"t1", o.t1}, {"t2", o.t2}, {"lhs", to_json(r.lhs)}, {"rhs", r.rhs},
                 {"rhs_std_error", r.rhs_std_error}, {"gap", r.gap}});
  return kExitOk;
}

int run_limits(const Options& o, const Json& cfg) {
  const GaussianMixture m = resolve_model(o);
  const auto x0 = resolve_point(o, m.dim());
  const McConfig mc = mc_config(o);
  const double at_one = gaussian_limit_constant(m.dim());
  const double at_zero = m.log_density(x0);
  Json one = Json::array();
  for (double t : o.t_one) {
    const auto e = limit_at_one(m, x0, t, mc);
    one.push_back(Json{{"t", t}, {"estimate", to_json(e)}, {"error", std::abs(e.mean - at_one)}});
  }
  Json zero = Json::array();
  for (double t : o.t_zero) {
    const auto e = limit_at_zero(m, x0, t, mc);
    zero.push_back(Json{{"t", t}, {"estimate", to_json(e)}, {"error", std::abs(e.mean - at_zero)}});
  }
  Output out(o.out);
  emit_json(out, header(cfg, o, Json{{"model", to_json(m)}, {"mc", mc_json(o)}}),
            Json{{"limit_at_one", Json{{"target", at_one}, {"sweep", one}}},
                 {"limit_at_zero", Json{{"target", at_zero}, {"sweep", zero}}}});
  return kExitOk;
}

int run_elbo(const Options& o, const Json& cfg) {
  const GaussianMixture m = resolve_model(o);
  const auto x0 = resolve_point(o, m.dim());
  const Schedule s = resolve_schedule(o);
  const McConfig mc = mc_config(o);
  const EpsilonFn eps = parse_predictor(o.predictor, m, s);
  const ElboBreakdown e = elbo_total(m, s, x0, mc, &eps);
  const double c0s = c0_star(s, m.dim());
  const double logq = m.log_density(x0);
  Json result = to_json(e, false);
  result["C0_star"] = c0s;
  result["log_q0"] = logq;
  result["elbo_plus_log_q0_minus_C0_star"] = e.total_L + logq - c0s;
  result["elbo_simple"] = to_json(elbo_simple(m, s, x0, mc, &eps));
  if (o.outer > 0) {
    result["kl_gap"] = to_json(kl_gap(m, s, mc, o.outer, o.seed, &eps));
  }
  Output out(o.out);
  const Json head = header(cfg, o, Json{{"model", to_json(m)}, {"schedule", to_json(s, false)}, {"mc", mc_json(o)}});
  if (o.format == "csv") {
    emit_csv_header(out, head);
    write_steps_csv(out.stream(), e.steps);
  } else {
    emit_json(out, head, result);
  }
  return kExitOk;
}

int run_classify(const Options& o, const Json& cfg) {
  if (o.family.empty()) {
    throw ParameterError("--family is required");
  }
  const LabeledFamily f = family_from_json(read_json_file(o.family));
  const Schedule s = resolve_schedule(o);
  const McConfig mc = mc_config(o);
  std::vector<std::vector<double>> pts;
  if (!o.points.empty()) {
    pts = read_points_file(o.points);
  } else {
    pts.push_back(parse_point(o.point.empty() ? throw ParameterError("--point or --points is required") : o.point));
  }
  Output out(o.out);
  out.stream() << header(cfg, o, Json{{"schedule", to_json(s, false)}, {"mc", mc_json(o)}}).dump() << '\n';
  for (const auto& x : pts) {
    Json line = to_json(posterior(f, s, x, mc));
    line["x"] = x;
    out.stream() << line.dump() << '\n';
  }
  return kExitOk;
}

int run_gan(const Options& o, const Json& cfg) {
  const GaussianMixture m = resolve_model(o);
  GridSpec spec;
  if (o.grid != 0) spec.points = o.grid;
  const EquilibriumSolution sol = solve_equilibrium(m, o.lambda, spec);
  const Schedule s = resolve_schedule(o);
  const NashCheck check = verify_nash(sol, c0_star(s, 1), o.tol);
  Output out(o.out);
  Json head = header(cfg, o, Json{{"model", to_json(m)}, {"grid_points", spec.points}});
  head["equilibrium"] = equilibrium_header(sol, check);
  if (o.format == "json") {
    emit_json(out, head, equilibrium_header(sol, check));
  } else {
    emit_csv_header(out, head);
    write_equilibrium_csv(out.stream(), sol);
  }
  return kExitOk;
}

ScoreFn sample_score(const std::string& spec, const GaussianMixture& m, const Schedule& s) {
  if (spec == "exact") return exact_score(m, s);
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string kind = spec.substr(0, colon);
    const double v = parse_point(spec.substr(colon + 1)).at(0);
    if (kind == "bias") return with_bias(exact_score(m, s), std::vector<double>(m.dim(), v));
    if (kind == "scale") return with_scale(exact_score(m, s), v);
  }
  throw ParameterError("--predictor for sample must be exact, bias:<b> or scale:<g>");
}

int run_sample(const Options& o, const Json& cfg) {
  const GaussianMixture m = resolve_model(o);
  const Schedule s = resolve_schedule(o);
  const ScoreFn score = sample_score(o.predictor, m, s);
  const std::string tag = o.predictor.substr(0, o.predictor.find(':'));
  const SamplerRun run = reverse_sample(m, s, o.particles, o.seed, &score, tag);
  const Json head = header(cfg, o, Json{{"model", to_json(m)}, {"schedule", to_json(s, false)}, {"source", tag}});
  Output out(o.out);
  emit_csv_header(out, head);
  write_points_csv(out.stream(), run.points);
  std::string trace_path = o.trace_out;
  if (trace_path.empty() && !o.out.empty()) {
    trace_path = o.out + ".trace.csv";
  }
  if (!trace_path.empty()) {
    Output trace(trace_path);
    emit_csv_header(trace, head);
    write_trace_csv(trace.stream(), run.trace);
  }
  return kExitOk;
}

int run_identities(const Options& o, const Json& cfg) {
  const GaussianMixture m = resolve_model(o);
  const std::size_t d = m.dim();
  const McConfig mc = mc_config(o);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> ut(0.01, 0.99);
  std::normal_distribution<double> nx(0.0, 2.0);
  double trace_rel = 0.0, tweedie = 0.0, path_rel = 0.0, min_slack = INFINITY;
  for (std::size_t k = 0; k < o.n_points; ++k) {
    const double t = ut(rng);
    std::vector<double> x(d);
    for (auto& v : x) v = nx(rng);
    const TimeMarginal mt = marginal(m, t);
    const auto sc = mt.score(x);
    double s2 = 0.0;
    for (double v : sc) s2 += v * v;
    const double tr = mt.hessian_trace(x);
    const double rhs = -static_cast<double>(d) / t - s2 + mt.posterior_second_moment(x) / (t * t);
    trace_rel = std::max(trace_rel, std::abs(tr - rhs) / std::max(1.0, std::abs(rhs)));
    min_slack = std::min(min_slack, tr + static_cast<double>(d) / t);
    const auto mean0 = mt.posterior_mean_x0(x);
    for (std::size_t i = 0; i < d; ++i) {
      tweedie = std::max(tweedie, std::abs(sc[i] + (x[i] - std::sqrt(1.0 - t) * mean0[i]) / t));
    }
    if (k < 50 && t > 0.05 && t < 0.95) {
      const auto c1 = claim1_check(m, t, x, 1e-5);
      path_rel = std::max(path_rel, std::abs(c1.analytic - c1.fd) / std::max(1.0, std::abs(c1.analytic)));
    }
  }
  std::vector<double> x0(d, 0.5);
  const auto st = stein_diagnostic(m, 0.5, x0, mc);
  Output out(o.out);
  emit_json(out, header(cfg, o, Json{{"model", to_json(m)}, {"mc", mc_json(o)}}),
            Json{{"random_points", o.n_points},
                 {"trace_identity_max_rel_error", trace_rel},
                 {"trace_lower_bound_min_slack", min_slack},
                 {"tweedie_max_abs_error", tweedie},
                 {"path_derivative_max_rel_error", path_rel},
                 {"stein", Json{{"t", 0.5}, {"x0", x0}, {"lhs", to_json(st.lhs)}, {"rhs", to_json(st.rhs)},
                                {"difference", to_json(st.difference)}, {"companion", to_json(st.companion)}}}});
  return kExitOk;
}

int run_selftest_cmd(const Options& o) {
  SelftestOptions so;
  so.inject_beta = o.inject_beta;
  const SelftestReport r = run_selftest(so);
  Output out(o.out);
  auto& os = out.stream();
  for (const auto& c : r.checks) {
    const char* tag = c.status == CheckStatus::pass ? "PASS" : c.status == CheckStatus::fail ? "FAIL" : "SKIP";
    os << tag << "  " << c.name;
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << '\n';
  }
  os << "passed " << r.count(CheckStatus::pass) << ", failed " << r.count(CheckStatus::fail) << ", skipped "
     << r.count(CheckStatus::skip) << '\n';
  if (!r.ok()) {
    std::cerr << "selftest failed:";
    for (const auto& c : r.checks) {
      if (c.status == CheckStatus::fail) std::cerr << "\n  " << c.name;
    }
    std::cerr << '\n';
    return kExitSelftest;
  }
  return kExitOk;
}

/// Expands --config FILE (a header "config" object or a flat option map)
/// into command-line tokens placed before the explicit arguments.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const std::vector<std::string>& commands) {
  std::vector<std::string> rest;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) {
    return rest;
  }
  Json j = read_json_file(config_path);
  if (j.contains("header")) j = j.at("header");
  if (j.contains("config")) j = j.at("config");
  std::string command;
  Json opts = j;
  if (j.contains("options")) {
    opts = j.at("options");
    command = j.value("command", "");
  }
  bool explicit_command = false;
  for (const auto& a : rest) {
    for (const auto& c : commands) explicit_command |= (a == c);
  }
  std::vector<std::string> out;
  if (!command.empty() && !explicit_command) out.push_back(command);
  for (const auto& [key, value] : opts.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back("--" + key);
      continue;
    }
    out.push_back("--" + key);
    if (value.is_array()) {
      for (const auto& v : value) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    } else {
      out.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  if (explicit_command) {
    // Subcommand options must follow the subcommand name.
    std::vector<std::string> merged;
    bool placed = false;
    for (const auto& a : rest) {
      merged.push_back(a);
      if (!placed) {
        for (const auto& c : commands) {
          if (a == c) {
            merged.insert(merged.end(), out.begin(), out.end());
            placed = true;
            break;
          }
        }
      }
    }
    return merged;
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Score-based density formulas on Gaussian-mixture targets", "scoredens"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  app.add_option("--model", o.model, "Mixture JSON file (default: standard normal)");
  app.add_option("--family", o.family, "Labeled family JSON file");
  app.add_option("--T", o.T, "Number of steps")->capture_default_str();
  app.add_option("--c0", o.c0, "Schedule constant c0")->capture_default_str();
  app.add_option("--c1", o.c1, "Schedule constant c1")->capture_default_str();
  app.add_option("--schedule", o.schedule, "Schedule JSON: {T,c0,c1}, {betas} or a beta array");
  app.add_option("--point", o.point, "Evaluation point, comma separated");
  app.add_option("--points", o.points, "File with one point per line");
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--samples", o.samples, "Monte Carlo samples per expectation")->capture_default_str();
  app.add_flag("--no-antithetic", o.no_antithetic, "Disable antithetic pairing");
  app.add_option("--lambda", o.lambda, "GAN regularization weight")->capture_default_str();
  app.add_option("--delta", o.delta, "Endpoint offset for smoothed/ODE methods")->capture_default_str();
  app.add_option("--out", o.out, "Output path (default: stdout)");
  app.add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--threads", o.threads, "Worker thread cap (0: all cores)");
  app.add_option("--predictor", o.predictor, "exact, zero, bias:<b> or scale:<g>")->capture_default_str();
  app.add_option("--config", o.config, "JSON config (an output header works)");

  auto* sched = app.add_subcommand("schedule", "Print a schedule and its coefficient-gap check");
  auto* dens = app.add_subcommand("density", "Estimate log rho_0 at a point");
  dens->add_option("--method", o.method, "discrete, smoothed or ode")
      ->check(CLI::IsMember({"discrete", "smoothed", "ode"}))
      ->capture_default_str();
  dens->add_option("--grid", o.grid, "Quadrature cells for the smoothed method");
  dens->add_option("--ode-steps", o.ode_steps, "RK4 steps for the ODE method")->capture_default_str();
  auto* thm = app.add_subcommand("theorem1", "Check the time-derivative identity over [t1, t2]");
  thm->add_option("--t1", o.t1)->capture_default_str();
  thm->add_option("--t2", o.t2)->capture_default_str();
  thm->add_option("--quad", o.quad, "Quadrature cells")->capture_default_str();
  thm->add_flag("--shared-noise", o.shared_noise, "Use one draw for both times");
  auto* lim = app.add_subcommand("limits", "Boundary behavior of E log rho_t(X_t) as t -> 1 and t -> 0");
  lim->add_option("--t-one", o.t_one)->capture_default_str();
  lim->add_option("--t-zero", o.t_zero)->capture_default_str();
  auto* elb = app.add_subcommand("elbo", "ELBO breakdown at a point");
  elb->add_option("--outer", o.outer, "Also estimate the KL gap with this many outer samples");
  auto* cls = app.add_subcommand("classify", "Diffusion-classifier posterior");
  auto* gan = app.add_subcommand("gan", "Regularized GAN equilibrium in 1D");
  gan->add_option("--grid", o.grid, "Grid points (odd)");
  gan->add_option("--tol", o.tol, "Nash constancy tolerance")->capture_default_str();
  auto* smp = app.add_subcommand("sample", "Run the reverse chain");
  smp->add_option("--n", o.particles, "Number of particles")->capture_default_str();
  smp->add_option("--trace-out", o.trace_out, "Moment trace CSV path");
  auto* idn = app.add_subcommand("identities", "Closed-form identity checks at random points");
  idn->add_option("--n-points", o.n_points)->capture_default_str();
  auto* slf = app.add_subcommand("selftest", "Run the closed-form self checks");
  slf->add_option("--inject-beta", o.inject_beta, "Corrupt the second learning rate of the tested schedule");
  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
  }

  std::vector<std::string> commands;
  for (auto* sub : app.get_subcommands({})) commands.push_back(sub->get_name());

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(args, commands);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    set_max_threads(o.threads);
    CLI::App* sub = app.get_subcommands().front();
    const Json cfg = collect_config(app, *sub);
    if (sub == sched) return run_schedule(o, cfg);
    if (sub == dens) return run_density(o, cfg);
    if (sub == thm) return run_theorem1(o, cfg);
    if (sub == lim) return run_limits(o, cfg);
    if (sub == elb) return run_elbo(o, cfg);
    if (sub == cls) return run_classify(o, cfg);
    if (sub == gan) return run_gan(o, cfg);
    if (sub == smp) return run_sample(o, cfg);
    if (sub == idn) return run_identities(o, cfg);
    if (sub == slf) return run_selftest_cmd(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitValidation;
}
