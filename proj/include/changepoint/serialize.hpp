#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "changepoint/detect.hpp"
#include "changepoint/estimators.hpp"
#include "changepoint/exactdist.hpp"
#include "changepoint/model.hpp"
#include "changepoint/montecarlo.hpp"

namespace changepoint::io {

using nlohmann::json;

/// Decimal rendering with 17 significant digits; parses back to the same double.
std::string format_double(double value);

/// `k,prob` rows with k ascending.
void write_pmf_csv(std::ostream& out, const exactdist::Pmf& pmf);
std::vector<std::pair<long, double>> read_pmf_csv(std::istream& in);

/// {eta, K, tail_mass_bound, probs:[...]} with probs for k = -K..K.
json to_json(const exactdist::Pmf& pmf);
exactdist::Pmf pmf_from_json(const json& j);

json to_json(const model::ChangeModel& model);
json to_json(const estimators::MleResult& result);
json to_json(const estimators::ConditionalPmf& conditional);
json to_json(const estimators::ConfidenceInterval& ci);
json to_json(const detect::DetectionReport& report);
json to_json(const detect::ResidualDiagnostics& diagnostics);
json to_json(const montecarlo::SimulationReport& report);

/// `t,statistic` rows.
void write_trace_csv(std::ostream& out, const detect::DetectionReport& report);
/// `mode,offset,count` rows; counts are probability-weighted for Cobb.
void write_report_csv(std::ostream& out, const montecarlo::SimulationReport& report);

} // namespace changepoint::io
