#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "scoredens/classifier.hpp"
#include "scoredens/density.hpp"
#include "scoredens/elbo.hpp"
#include "scoredens/gan.hpp"
#include "scoredens/mixture.hpp"
#include "scoredens/sampler.hpp"
#include "scoredens/schedule.hpp"

namespace scoredens {

using Json = nlohmann::ordered_json;

/// Reads a JSON file; ParameterError if it cannot be opened or parsed.
Json read_json_file(const std::string& path);

/// Accepts {T, c0, c1}, {betas: [...]}, or a bare array of betas.
Schedule schedule_from_json(const Json& j);
Json to_json(const Schedule& s, bool with_betas = true);

/// {d, components: [{w, mean: [...], var}]}; d is optional but checked
/// when present.
GaussianMixture mixture_from_json(const Json& j);
Json to_json(const GaussianMixture& m);

/// {classes: {name: {d, components, prior?}}}. Either every class gives a
/// prior or none does (uniform).
LabeledFamily family_from_json(const Json& j);

/// Comma- or whitespace-separated reals.
std::vector<double> parse_point(const std::string& text);
/// One point per non-empty line; '#' starts a comment.
std::vector<std::vector<double>> read_points_file(const std::string& path);

Json to_json(const McEstimate& e);
Json to_json(const DensityReport& r, bool with_steps = true);
Json to_json(const ElboBreakdown& e, bool with_steps = true);
Json to_json(const PosteriorReport& r);
Json to_json(const NashCheck& n);
Json equilibrium_header(const EquilibriumSolution& sol, const NashCheck& check);

/// t_index,t,coefficient,term_mean,term_se
void write_steps_csv(std::ostream& out, const std::vector<StepRecord>& steps);
/// x,p_data,p_G,D,ratio
void write_equilibrium_csv(std::ostream& out, const EquilibriumSolution& sol);
/// x_1..x_d
void write_points_csv(std::ostream& out, const PointSet& points);
/// t,mean_1..mean_d,var_1..var_d (variance cells empty when absent)
void write_trace_csv(std::ostream& out, const std::vector<MomentRow>& trace);

}  // namespace scoredens
