#include "changepoint/serialize.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "changepoint/errors.hpp"

namespace changepoint::io {

namespace {

json vector_json(const Eigen::VectorXd& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json matrix_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Eigen::VectorXd row = m.row(i).transpose();
        rows.push_back(vector_json(row));
    }
    return rows;
}

// NaN is not representable in JSON.
json trace_json(const std::vector<double>& trace)
{
    json out = json::array();
    for (double v : trace) out.push_back(std::isnan(v) ? json(nullptr) : json(v));
    return out;
}

json optional_json(const std::optional<long>& v) { return v ? json(*v) : json(nullptr); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json estimated_json(const estimators::EstimatedParams& p)
{
    return {{"split", p.split},
            {"mu1", vector_json(p.mu1)},
            {"mu2", vector_json(p.mu2)},
            {"sigma", matrix_json(p.sigma)}};
}

} // namespace

std::string format_double(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_pmf_csv(std::ostream& out, const exactdist::Pmf& pmf)
{
    out << "k,prob\n";
    for (long k = -pmf.halfwidth(); k <= pmf.halfwidth(); ++k) {
        out << k << ',' << format_double(pmf(k)) << '\n';
    }
}

std::vector<std::pair<long, double>> read_pmf_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("k,prob", 0) != 0) {
        throw ParseError("PMF CSV must start with the header 'k,prob'", 1, 1);
    }
    std::vector<std::pair<long, double>> rows;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("missing ',' in PMF row", row, 1);
        long k = 0;
        double p = 0.0;
        const auto r1 = std::from_chars(line.data(), line.data() + comma, k);
        const auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), p);
        if (r1.ec != std::errc() || r1.ptr != line.data() + comma) throw ParseError("bad offset", row, 1);
        if (r2.ec != std::errc() || r2.ptr != line.data() + line.size()) throw ParseError("bad probability", row, 2);
        rows.emplace_back(k, p);
    }
    return rows;
}

json to_json(const exactdist::Pmf& pmf)
{
    return {{"eta", pmf.eta()},
            {"K", pmf.halfwidth()},
            {"tail_mass_bound", pmf.tail_mass_bound()},
            {"no_ladder", pmf.no_ladder()},
            {"probs", pmf.values()}};
}

exactdist::Pmf pmf_from_json(const json& j)
{
    try {
        return exactdist::Pmf(j.at("eta").get<double>(), j.at("K").get<long>(),
                              j.at("probs").get<std::vector<double>>(),
                              j.at("tail_mass_bound").get<double>(),
                              j.value("no_ladder", 0.0));
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed PMF JSON: ") + e.what());
    }
}

json to_json(const model::ChangeModel& cm)
{
    json out = {{"eta", cm.eta}};
    if (const auto* u = std::get_if<model::UnivariateChange>(&cm.origin)) {
        out["origin"] = "univariate";
        out["mu1"] = u->mu1;
        out["mu2"] = u->mu2;
        out["sigma"] = u->sigma;
    } else {
        const auto& m = std::get<model::MultivariateChange>(cm.origin);
        out["origin"] = "multivariate";
        out["mu1"] = vector_json(m.mu1);
        out["mu2"] = vector_json(m.mu2);
        out["sigma"] = matrix_json(m.sigma);
    }
    return out;
}

json to_json(const estimators::MleResult& r)
{
    json params;
    if (const auto* cm = std::get_if<model::ChangeModel>(&r.params)) {
        params = to_json(*cm);
    } else {
        params = estimated_json(std::get<estimators::EstimatedParams>(r.params));
    }
    return {{"tau_hat", r.tau_hat},
            {"mode", r.mode == estimators::MleMode::known ? "known" : "profile"},
            {"first_index", r.first_index},
            {"criterion", trace_json(r.trace)},
            {"params", params}};
}

json to_json(const estimators::ConditionalPmf& c)
{
    return {{"delta", c.delta},
            {"tau_hat", c.tau_hat},
            {"error_rate_target", c.error_rate_target},
            {"probs", c.probs}};
}

json to_json(const estimators::ConfidenceInterval& ci)
{
    return {{"lower", ci.lower},
            {"upper", ci.upper},
            {"coverage", ci.coverage},
            {"clipped", ci.clipped},
            {"contiguous", ci.contiguous},
            {"members", ci.members},
            {"calendar_lower", optional_json(ci.calendar_lower)},
            {"calendar_upper", optional_json(ci.calendar_upper)}};
}

json to_json(const detect::DetectionReport& r)
{
    return {{"kind", r.kind == detect::StatisticKind::mean_change ? "mean_change" : "covariance_change"},
            {"U", r.U},
            {"W", optional_json(r.W)},
            {"p_value", optional_json(r.p_value)},
            {"p", r.p},
            {"tau_hat", r.tau_hat},
            {"first_index", r.first_index},
            {"trace", trace_json(r.trace)}};
}

json to_json(const detect::ResidualDiagnostics& d)
{
    return {{"tau_hat", d.tau_hat},
            {"mu1", vector_json(d.mu1)},
            {"mu2", vector_json(d.mu2)},
            {"sigma", matrix_json(d.sigma)},
            {"deviations", matrix_json(d.deviations)},
            {"mahalanobis_sq", vector_json(d.mahalanobis_sq)}};
}

json to_json(const montecarlo::SimulationReport& r)
{
    const auto& c = r.config;
    json modes = json::array();
    for (const auto& m : r.modes) {
        json empirical = json::array();
        for (const auto& [k, p] : m.empirical) empirical.push_back({k, p});
        modes.push_back({{"mode", m.mode},
                         {"tv", m.tv},
                         {"tv_noise", m.tv_noise},
                         {"bias", m.bias},
                         {"mse", m.mse},
                         {"failures", m.failures},
                         {"weight", m.weight},
                         {"mean_mass_at_zero", m.mean_mass_at_zero},
                         {"empirical", empirical}});
    }
    return {{"config",
             {{"n", c.n},
              {"tau", c.tau},
              {"eta", c.eta},
              {"d", c.dims},
              {"family", montecarlo::to_string(c.family)},
              {"nu", c.nu},
              {"known", c.known},
              {"profile", c.profile},
              {"cobb", c.cobb},
              {"delta", c.cobb_delta},
              {"replications", c.replications},
              {"seed", c.master_seed}}},
            {"seed_scheme", r.seed_scheme},
            {"standardization", r.standardization},
            {"modes", modes}};
}

void write_trace_csv(std::ostream& out, const detect::DetectionReport& r)
{
    out << "t,statistic\n";
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        out << r.first_index + static_cast<long>(i) << ',';
        if (!std::isnan(r.trace[i])) out << format_double(r.trace[i]);
        out << '\n';
    }
}

void write_report_csv(std::ostream& out, const montecarlo::SimulationReport& r)
{
    out << "mode,offset,count\n";
    for (const auto& m : r.modes) {
        for (const auto& [k, count] : m.counts) {
            out << m.mode << ',' << k << ',' << format_double(count) << '\n';
        }
    }
}

} // namespace changepoint::io
