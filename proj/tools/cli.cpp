#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "changepoint/detect.hpp"
#include "changepoint/errors.hpp"
#include "changepoint/estimators.hpp"
#include "changepoint/exactdist.hpp"
#include "changepoint/model.hpp"
#include "changepoint/serialize.hpp"

namespace changepoint::cli {

namespace {

using io::json;

struct Options {
    double eta = 0.0;
    double tol = exactdist::kDefaultPmfTol;
    double level = 0.95;
    double alpha = 0.05;
    long delta = 0;
    std::optional<std::uint64_t> seed;
    long reps = 0;
    long n = 0;
    long tau = 0;
    std::string family = "gaussian";
    double nu = 0.0;
    std::string modes;
    std::string kind = "mean";
    std::vector<std::string> columns;
    bool log_transform = false;
    bool verify = false;
    std::optional<long> origin;
    std::string out;
    std::string in;
};

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::filesystem::path sibling(const std::string& path, const std::string& extension)
{
    std::filesystem::path p(path);
    p.replace_extension(extension);
    return p;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write '" + path.string() + "'");
    return f;
}

void emit_json(const json& j, const std::string& path, std::ostream& out)
{
    if (path.empty()) {
        out << j.dump(2) << '\n';
        return;
    }
    auto f = open_output(path);
    f << j.dump(2) << '\n';
}

model::Dataset load_dataset(const Options& o)
{
    auto data = model::read_csv_file(o.in);
    data = model::select_columns(data, o.columns);
    if (o.log_transform) data = model::log_transform(data);
    if (o.origin) data.time_origin = o.origin;
    model::validate(data);
    return data;
}

void apply_modes(montecarlo::SimConfig& c, const std::string& list)
{
    c.known = c.profile = c.cobb = false;
    std::stringstream ss(list);
    std::string mode;
    while (std::getline(ss, mode, ',')) {
        mode = trim(mode);
        if (mode == "known") c.known = true;
        else if (mode == "profile" || mode == "estimated") c.profile = true;
        else if (mode == "cobb") c.cobb = true;
        else throw ConfigError("unknown estimator mode '" + mode + "'");
    }
}

template <class T>
T parse_value(const std::string& key, const std::string& value, long line)
{
    std::istringstream ss(value);
    T v{};
    ss >> v;
    if (!ss || !(ss >> std::ws).eof()) {
        throw ParseError("config line " + std::to_string(line) + ": bad value for '" + key + "'", line, 0);
    }
    return v;
}

void apply_key(montecarlo::SimConfig& c, const std::string& key, const std::string& value, long line)
{
    if (key == "n") c.n = parse_value<long>(key, value, line);
    else if (key == "tau") c.tau = parse_value<long>(key, value, line);
    else if (key == "eta") c.eta = parse_value<double>(key, value, line);
    else if (key == "d") c.dims = parse_value<long>(key, value, line);
    else if (key == "family") c.family = montecarlo::parse_family(value);
    else if (key == "nu") c.nu = parse_value<double>(key, value, line);
    else if (key == "modes") apply_modes(c, value);
    else if (key == "delta") c.cobb_delta = parse_value<long>(key, value, line);
    else if (key == "reps") c.replications = parse_value<long>(key, value, line);
    else if (key == "seed") c.master_seed = parse_value<std::uint64_t>(key, value, line);
    else throw ParseError("config line " + std::to_string(line) + ": unknown key '" + key + "'", line, 0);
}

int cmd_dist(const Options& o, std::ostream& out)
{
    const auto pmf = exactdist::build_pmf(o.eta, o.tol);
    const auto tables =
        exactdist::build_ladder_tables(o.eta, exactdist::kmax_for_moments(o.eta, o.tol), o.tol);
    const double variance = exactdist::variance_closed_form(tables);

    if (!o.out.empty()) {
        {
            auto csv = open_output(o.out);
            io::write_pmf_csv(csv, pmf);
        }
        auto js = open_output(sibling(o.out, ".json"));
        js << io::to_json(pmf).dump(2) << '\n';
    }

    json summary = {{"eta", o.eta},
                    {"K", pmf.halfwidth()},
                    {"prob_zero", pmf(0)},
                    {"variance", variance},
                    {"mass", pmf.mass()},
                    {"tail_mass_bound", pmf.tail_mass_bound()},
                    {"no_ladder", pmf.no_ladder()}};

    if (o.verify) {
        if (o.out.empty()) throw ConfigError("--verify needs --out");
        std::ifstream in(o.out);
        const auto rows = io::read_pmf_csv(in);
        bool same = rows.size() == pmf.values().size();
        for (std::size_t i = 0; same && i < rows.size(); ++i) {
            same = rows[i].first == static_cast<long>(i) - pmf.halfwidth() &&
                   rows[i].second == pmf.values()[i];
        }
        summary["verified"] = same;
        out << summary.dump(2) << '\n';
        if (!same) throw ParseError("re-read PMF differs from the computed one");
        return kExitOk;
    }
    out << summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_detect(const Options& o, std::ostream& out)
{
    const auto data = load_dataset(o);
    detect::DetectionReport report;
    if (o.kind == "mean") report = detect::mean_change_statistic(data);
    else if (o.kind == "covariance") report = detect::covariance_change_statistic(data);
    else throw ConfigError("--kind must be 'mean' or 'covariance'");
    emit_json(io::to_json(report), o.out, out);
    if (!o.out.empty()) {
        auto csv = open_output(sibling(o.out, ".csv"));
        io::write_trace_csv(csv, report);
    }
    return kExitOk;
}

int cmd_estimate(const Options& o, std::ostream& out)
{
    const auto data = load_dataset(o);
    const auto mle = estimators::mle_profile(data);
    json j = io::to_json(mle);
    j["eta_hat"] = estimators::to_change_model(std::get<estimators::EstimatedParams>(mle.params)).eta;
    if (data.time_origin) j["calendar_tau_hat"] = *data.time_origin + mle.tau_hat - 1;
    emit_json(j, o.out, out);
    return kExitOk;
}

int cmd_ci(const Options& o, std::ostream& out)
{
    if (o.n < 2) throw ConfigError("--n is required");
    if (o.tau < 1) throw ConfigError("--tau (the estimated change point) is required");
    const auto pmf = exactdist::build_pmf(o.eta, o.tol);
    const auto ci = estimators::confidence_interval(pmf, o.level, o.tau, o.n, o.origin);
    json j = io::to_json(ci);
    j["eta"] = o.eta;
    j["level"] = o.level;
    j["halfwidth"] = exactdist::symmetric_interval(pmf, o.level);
    emit_json(j, o.out, out);
    return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out)
{
    if (!o.seed) throw ConfigError("--seed is required for simulate");
    montecarlo::SimConfig base;
    if (o.n > 0) base.n = o.n;
    if (o.tau > 0) base.tau = o.tau;
    if (o.eta > 0.0) base.eta = o.eta;
    if (o.reps > 0) base.replications = o.reps;
    base.family = montecarlo::parse_family(o.family);
    base.nu = o.nu;
    if (o.delta > 0) base.cobb_delta = o.delta;
    if (!o.modes.empty()) apply_modes(base, o.modes);

    std::vector<montecarlo::SimConfig> cells;
    if (!o.in.empty()) {
        std::ifstream in(o.in);
        if (!in) throw ParseError("cannot open '" + o.in + "'");
        cells = parse_study_config(in, base);
    } else {
        cells.push_back(base);
    }

    json studies = json::array();
    std::vector<montecarlo::SimulationReport> reports;
    for (auto& cell : cells) {
        cell.master_seed = *o.seed;
        montecarlo::validate(cell);
        const auto pmf = exactdist::build_pmf(cell.eta);
        reports.push_back(montecarlo::run_study(cell, pmf));
        json r = io::to_json(reports.back());
        r["tv_bound"] = exactdist::tv_bound(cell.eta, cell.n, cell.tau);
        studies.push_back(std::move(r));
    }
    emit_json({{"studies", studies}}, o.out.empty() ? "" : sibling(o.out, ".json").string(), out);
    if (!o.out.empty()) {
        for (std::size_t i = 0; i < reports.size(); ++i) {
            std::string path = o.out;
            if (reports.size() > 1) path = sibling(o.out, "").string() + "_" + std::to_string(i);
            auto csv = open_output(sibling(path, ".csv"));
            io::write_report_csv(csv, reports[i]);
        }
    }
    return kExitOk;
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream& err)
{
    const auto data = load_dataset(o);
    const long n = data.rows();

    const auto detection = detect::mean_change_statistic(data);
    const bool significant = detection.p_value && *detection.p_value < o.alpha;

    const auto mle = estimators::mle_profile(data);
    const auto& est = std::get<estimators::EstimatedParams>(mle.params);
    const auto change = estimators::to_change_model(est);
    const auto pmf = exactdist::build_pmf(change.eta, o.tol);
    const auto unconditional =
        estimators::confidence_interval(pmf, o.level, mle.tau_hat, n, data.time_origin);

    json report = {{"n", n},
                   {"d", data.dims()},
                   {"columns", data.labels},
                   {"log_transform", o.log_transform},
                   {"alpha", o.alpha},
                   {"significant", significant},
                   {"detection", io::to_json(detection)},
                   {"estimate", io::to_json(mle)},
                   {"eta_hat", change.eta},
                   {"level", o.level},
                   {"unconditional_interval", io::to_json(unconditional)}};

    const long delta = o.delta > 0 ? o.delta : estimators::default_delta(mle.tau_hat, n);
    std::optional<estimators::ConfidenceInterval> conditional_ci;
    if (delta >= 1 && mle.tau_hat - delta >= 1 && mle.tau_hat + delta <= n - 1) {
        const auto cond = estimators::cobb_conditional(data, mle.tau_hat, delta, change);
        conditional_ci = estimators::confidence_interval(cond, o.level, data.time_origin);
        report["conditional"] = io::to_json(cond);
        report["conditional_interval"] = io::to_json(*conditional_ci);
    } else {
        report["conditional"] = nullptr;
        report["conditional_note"] = "window tau_hat +- delta leaves the sample";
    }

    const auto residuals = detect::residual_diagnostics(data, mle.tau_hat);
    report["residuals"] = io::to_json(residuals);
    model::Dataset deviations;
    deviations.series = residuals.deviations;
    deviations.labels = data.labels;
    try {
        report["covariance_detection"] = io::to_json(detect::covariance_change_statistic(deviations));
    } catch (const Error& e) {
        report["covariance_detection"] = {{"error", e.what()}};
    }

    std::ostream& summary = o.out.empty() ? err : out;
    emit_json(report, o.out, out);

    auto where = [&](long lo, long hi, const std::optional<long>& clo, const std::optional<long>& chi) {
        std::ostringstream s;
        s << "[" << lo << ", " << hi << "]";
        if (clo && chi) s << " (" << *clo << "-" << *chi << ")";
        return s.str();
    };
    summary << "n = " << n << ", d = " << data.dims() << "\n";
    summary << "mean-change U = " << detection.U;
    if (detection.W) summary << ", W = " << *detection.W << ", p = " << *detection.p_value;
    summary << (significant ? "  (significant" : "  (not significant") << " at " << o.alpha << ")\n";
    summary << "tau_hat = " << mle.tau_hat;
    if (data.time_origin) summary << " (" << *data.time_origin + mle.tau_hat - 1 << ")";
    summary << ", eta_hat = " << change.eta << "\n";
    summary << "unconditional " << o.level << " interval: "
            << where(unconditional.lower, unconditional.upper, unconditional.calendar_lower,
                     unconditional.calendar_upper)
            << ", coverage " << unconditional.coverage << (unconditional.clipped ? " (clipped)" : "")
            << "\n";
    if (conditional_ci) {
        summary << "conditional " << o.level << " set (delta " << delta << "): "
                << where(conditional_ci->lower, conditional_ci->upper, conditional_ci->calendar_lower,
                         conditional_ci->calendar_upper)
                << (conditional_ci->contiguous ? "" : " (not contiguous)") << "\n";
    }
    return kExitOk;
}

} // namespace

std::vector<montecarlo::SimConfig> parse_study_config(std::istream& in,
                                                      const montecarlo::SimConfig& defaults)
{
    montecarlo::SimConfig shared = defaults;
    std::vector<montecarlo::SimConfig> cells;
    bool in_section = false;
    std::string raw;
    long line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no, 1);
            cells.push_back(shared);
            in_section = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(line_no) + ": expected key = value", line_no, 1);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        apply_key(in_section ? cells.back() : shared, key, value, line_no);
    }
    if (cells.empty()) cells.push_back(shared);
    return cells;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Change-point estimation with the exact limiting law of the MLE"};
    app.require_subcommand(1);
    Options o;

    auto* dist = app.add_subcommand("dist", "Limiting distribution of the centred change-point MLE");
    dist->add_option("--eta", o.eta, "standardized change")->required();
    dist->add_option("--tol", o.tol, "truncation tolerance");
    dist->add_option("--out", o.out, "PMF CSV path; JSON goes next to it");
    dist->add_flag("--verify", o.verify, "re-read the CSV and compare bit for bit");

    auto* detect_cmd = app.add_subcommand("detect", "Likelihood-ratio change detection");
    auto* estimate = app.add_subcommand("estimate", "Profile MLE of the change point");
    auto* analyze = app.add_subcommand("analyze", "Detection, estimation and intervals in one report");
    for (auto* sub : {detect_cmd, estimate, analyze}) {
        sub->add_option("--in", o.in, "input CSV")->required();
        sub->add_option("--columns", o.columns, "columns to use")->delimiter(',');
        sub->add_flag("--log-transform", o.log_transform, "take natural logs first");
        sub->add_option("--origin", o.origin, "calendar label of row 1");
        sub->add_option("--out", o.out, "output path");
    }
    detect_cmd->add_option("--kind", o.kind, "mean or covariance");
    analyze->add_option("--level", o.level, "confidence level");
    analyze->add_option("--delta", o.delta, "Cobb window half-width");
    analyze->add_option("--alpha", o.alpha, "detection significance threshold");
    analyze->add_option("--tol", o.tol, "PMF truncation tolerance");

    auto* ci = app.add_subcommand("ci", "Confidence interval around an estimated change point");
    ci->add_option("--eta", o.eta, "standardized change")->required();
    ci->add_option("--level", o.level, "confidence level");
    ci->add_option("--tau", o.tau, "estimated change point (1-based index)")->required();
    ci->add_option("--n", o.n, "sample size")->required();
    ci->add_option("--origin", o.origin, "calendar label of row 1");
    ci->add_option("--tol", o.tol, "PMF truncation tolerance");
    ci->add_option("--out", o.out, "output JSON path");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study against the limiting law");
    simulate->add_option("--in", o.in, "study config file");
    simulate->add_option("--seed", o.seed, "master seed");
    simulate->add_option("--reps", o.reps, "replications");
    simulate->add_option("--n", o.n, "sample size");
    simulate->add_option("--tau", o.tau, "true change point");
    simulate->add_option("--eta", o.eta, "standardized change");
    simulate->add_option("--family", o.family, "gaussian, student_t or chi_square");
    simulate->add_option("--nu", o.nu, "degrees of freedom");
    simulate->add_option("--delta", o.delta, "Cobb window half-width");
    simulate->add_option("--modes", o.modes, "comma list of known, profile, cobb");
    simulate->add_option("--out", o.out, "output prefix (.json and .csv)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (dist->parsed()) return cmd_dist(o, out);
        if (detect_cmd->parsed()) return cmd_detect(o, out);
        if (estimate->parsed()) return cmd_estimate(o, out);
        if (ci->parsed()) return cmd_ci(o, out);
        if (simulate->parsed()) return cmd_simulate(o, out);
        if (analyze->parsed()) return cmd_analyze(o, out, err);
    } catch (const DegenerateDataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace changepoint::cli
