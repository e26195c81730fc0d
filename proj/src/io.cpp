#include "scoredens/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "scoredens/errors.hpp"

namespace scoredens {

namespace {

std::vector<double> real_array(const Json& j, const char* what) {
  if (j.is_number()) {
    return {j.get<double>()};
  }
  if (!j.is_array()) {
    throw ParameterError(std::string(what) + " must be a number or an array of numbers");
  }
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) {
      throw ParameterError(std::string(what) + " must contain only numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

double real_field(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ParameterError(std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

void set_precision(std::ostream& out) { out << std::setprecision(std::numeric_limits<double>::max_digits10); }

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParameterError("cannot open '" + path + "'");
  }
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError("cannot parse '" + path + "': " + e.what());
  }
}

Schedule schedule_from_json(const Json& j) {
  if (j.is_array()) {
    return custom_schedule(real_array(j, "betas"));
  }
  if (!j.is_object()) {
    throw ParameterError("schedule must be an object or an array of betas");
  }
  if (j.contains("T")) {
    const Json& t = j.at("T");
    if (!t.is_number_integer() || t.get<long long>() < 2) {
      throw ParameterError("schedule field 'T' must be an integer >= 2");
    }
    return build_schedule(t.get<std::size_t>(), real_field(j, "c0"), real_field(j, "c1"));
  }
  if (j.contains("betas")) {
    return custom_schedule(real_array(j.at("betas"), "betas"));
  }
  throw ParameterError("schedule needs either {T, c0, c1} or betas");
}

Json to_json(const Schedule& s, bool with_betas) {
  Json j;
  j["T"] = s.steps();
  j["c0"] = s.c0() ? Json(*s.c0()) : Json(nullptr);
  j["c1"] = s.c1() ? Json(*s.c1()) : Json(nullptr);
  j["beta_1"] = s.beta(1);
  j["alpha_bar_T"] = s.alpha_bar(s.steps());
  if (with_betas) {
    j["betas"] = std::vector<double>(s.betas().begin(), s.betas().end());
  }
  return j;
}

GaussianMixture mixture_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("components") || !j.at("components").is_array()) {
    throw ParameterError("mixture needs a 'components' array");
  }
  std::vector<Component> comps;
  for (const auto& c : j.at("components")) {
    if (!c.is_object()) {
      throw ParameterError("mixture component must be an object");
    }
    Component k;
    k.weight = real_field(c, "w");
    if (!c.contains("mean")) {
      throw ParameterError("mixture component is missing 'mean'");
    }
    k.mean = real_array(c.at("mean"), "mean");
    k.variance = real_field(c, "var");
    comps.push_back(std::move(k));
  }
  GaussianMixture m(std::move(comps));
  if (j.contains("d")) {
    const Json& d = j.at("d");
    if (!d.is_number_integer() || d.get<long long>() != static_cast<long long>(m.dim())) {
      throw DimensionError("mixture field 'd' disagrees with the component means");
    }
  }
  return m;
}

Json to_json(const GaussianMixture& m) {
  Json j;
  j["d"] = m.dim();
  Json comps = Json::array();
  for (const auto& c : m.components()) {
    comps.push_back(Json{{"w", c.weight}, {"mean", c.mean}, {"var", c.variance}});
  }
  j["components"] = comps;
  return j;
}

LabeledFamily family_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("classes") || !j.at("classes").is_object() || j.at("classes").empty()) {
    throw ParameterError("family needs a non-empty 'classes' object");
  }
  std::vector<std::string> labels;
  std::vector<GaussianMixture> models;
  std::vector<double> prior;
  std::size_t with_prior = 0;
  for (const auto& [name, spec] : j.at("classes").items()) {
    labels.push_back(name);
    models.push_back(mixture_from_json(spec));
    if (spec.contains("prior")) {
      prior.push_back(real_field(spec, "prior"));
      ++with_prior;
    }
  }
  if (with_prior != 0 && with_prior != labels.size()) {
    throw ParameterError("family: give a prior for every class or for none");
  }
  return LabeledFamily(std::move(labels), std::move(models), std::move(prior));
}

std::vector<double> parse_point(const std::string& text) {
  std::string cleaned = text;
  for (auto& ch : cleaned) {
    if (ch == ',' || ch == ';') {
      ch = ' ';
    }
  }
  std::istringstream in(cleaned);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) {
        throw std::invalid_argument("trailing");
      }
    } catch (const std::exception&) {
      throw ParameterError("cannot parse '" + tok + "' as a number");
    }
  }
  if (out.empty()) {
    throw ParameterError("empty point");
  }
  return out;
}

std::vector<std::vector<double>> read_points_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParameterError("cannot open '" + path + "'");
  }
  std::vector<std::vector<double>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    out.push_back(parse_point(line));
  }
  if (out.empty()) {
    throw ParameterError("'" + path + "' contains no points");
  }
  return out;
}

Json to_json(const McEstimate& e) { return Json{{"mean", e.mean}, {"std_error", e.std_error}, {"n_used", e.n_used}}; }

Json to_json(const DensityReport& r, bool with_steps) {
  Json j;
  j["method"] = std::string(to_string(r.method));
  j["x0"] = r.x0;
  j["constant"] = r.constant;
  j["total"] = r.total;
  j["total_std_error"] = r.total_std_error;
  j["n_steps"] = r.steps.size();
  if (with_steps) {
    Json steps = Json::array();
    for (const auto& s : r.steps) {
      steps.push_back(Json{{"index", s.index}, {"t", s.time}, {"coefficient", s.coefficient},
                           {"term_mean", s.term.mean}, {"term_se", s.term.std_error}});
    }
    j["steps"] = steps;
  }
  return j;
}

Json to_json(const ElboBreakdown& e, bool with_steps) {
  Json j;
  j["total_L"] = e.total_L;
  j["total_se"] = e.total_se;
  j["C0_term"] = to_json(e.c0);
  j["LT_term"] = e.lt;
  if (with_steps) {
    Json steps = Json::array();
    for (const auto& s : e.steps) {
      steps.push_back(Json{{"index", s.index}, {"t", s.time}, {"coefficient", s.coefficient},
                           {"term_mean", s.term.mean}, {"term_se", s.term.std_error}});
    }
    j["steps"] = steps;
  }
  return j;
}

Json to_json(const PosteriorReport& r) {
  Json j;
  Json classes = Json::array();
  for (std::size_t c = 0; c < r.scores.size(); ++c) {
    classes.push_back(Json{{"label", r.scores[c].label},
                           {"neg_elbo", to_json(r.scores[c].neg_elbo)},
                           {"posterior", r.posterior[c]},
                           {"bayes", r.bayes[c]}});
  }
  j["classes"] = classes;
  j["tv_distance"] = r.tv_distance;
  j["uniform_prior"] = r.uniform_prior;
  if (!r.uniform_prior) {
    j["note"] = "posterior is the softmax of class scores and ignores the prior; only the Bayes column uses it";
  }
  return j;
}

Json to_json(const NashCheck& n) {
  return Json{{"constant", n.constant},
              {"c", n.c},
              {"on_support_range", n.on_support_range},
              {"off_support_min_slack", n.off_support_min_slack},
              {"passed", n.passed}};
}

Json equilibrium_header(const EquilibriumSolution& sol, const NashCheck& check) {
  std::size_t on = 0;
  for (bool b : sol.support) {
    on += b ? 1 : 0;
  }
  return Json{{"lambda", sol.lambda},
              {"z", sol.z},
              {"c", check.c},
              {"p_g_mass", sol.p_g_mass},
              {"grid_points", sol.grid.size()},
              {"support_points", on},
              {"nash", to_json(check)}};
}

void write_steps_csv(std::ostream& out, const std::vector<StepRecord>& steps) {
  set_precision(out);
  out << "t_index,t,coefficient,term_mean,term_se\n";
  for (const auto& s : steps) {
    out << s.index << ',' << s.time << ',' << s.coefficient << ',' << s.term.mean << ',' << s.term.std_error << '\n';
  }
}

void write_equilibrium_csv(std::ostream& out, const EquilibriumSolution& sol) {
  set_precision(out);
  const auto ratio = amplification_profile(sol);
  out << "x,p_data,p_G,D,ratio\n";
  for (std::size_t i = 0; i < sol.grid.size(); ++i) {
    out << sol.grid[i] << ',' << sol.p_data[i] << ',' << sol.p_g[i] << ',' << sol.d[i] << ',' << ratio[i].second
        << '\n';
  }
}

void write_points_csv(std::ostream& out, const PointSet& points) {
  set_precision(out);
  for (std::size_t i = 0; i < points.dim(); ++i) {
    out << (i ? "," : "") << "x_" << (i + 1);
  }
  out << '\n';
  for (std::size_t r = 0; r < points.size(); ++r) {
    const auto row = points.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << row[i];
    }
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, const std::vector<MomentRow>& trace) {
  set_precision(out);
  const std::size_t d = trace.empty() ? 0 : trace.front().mean.size();
  out << 't';
  for (std::size_t i = 0; i < d; ++i) out << ",mean_" << (i + 1);
  for (std::size_t i = 0; i < d; ++i) out << ",var_" << (i + 1);
  out << '\n';
  for (const auto& row : trace) {
    out << row.t;
    for (double v : row.mean) out << ',' << v;
    for (std::size_t i = 0; i < d; ++i) {
      out << ',';
      if (row.variance) out << (*row.variance)[i];
    }
    out << '\n';
  }
}

}  // namespace scoredens
