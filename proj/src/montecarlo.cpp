#include "changepoint/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "changepoint/errors.hpp"
#include "changepoint/estimators.hpp"

namespace changepoint::montecarlo {

namespace {

constexpr long kBlockSize = 1024;
constexpr double kMaxFailureFraction = 1e-3;
constexpr double kOracleHorizonBound = 1e-6;

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Evaluates fn(begin, end) over fixed blocks of [0, total) on worker threads
// and returns the block results in block order.
template <class Fn>
auto run_blocks(long total, Fn fn) -> std::vector<decltype(fn(0L, 0L))>
{
    using Block = decltype(fn(0L, 0L));
    const long blocks = (total + kBlockSize - 1) / kBlockSize;
    std::vector<Block> results(static_cast<std::size_t>(blocks));
    std::atomic<long> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        for (;;) {
            const long b = next.fetch_add(1);
            if (b >= blocks) return;
            try {
                const long begin = b * kBlockSize;
                results[static_cast<std::size_t>(b)] = fn(begin, std::min(total, begin + kBlockSize));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(blocks);
            }
        }
    };

    const auto workers = static_cast<long>(std::min<unsigned long>(
        worker_count(), static_cast<unsigned long>(std::max(blocks, 1L))));
    std::vector<std::thread> threads;
    for (long i = 1; i < workers; ++i) threads.emplace_back(work);
    work();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

class NoiseSource {
public:
    NoiseSource(ErrorFamily family, double nu) : family_(family), nu_(nu)
    {
        if (family_ == ErrorFamily::student_t) scale_ = std::sqrt((nu - 2.0) / nu);
        if (family_ == ErrorFamily::chi_square) scale_ = 1.0 / std::sqrt(2.0 * nu);
    }

    double operator()(Engine& engine)
    {
        switch (family_) {
        case ErrorFamily::gaussian:
            return normal_(engine);
        case ErrorFamily::student_t:
            return scale_ * student_(engine, std::student_t_distribution<double>::param_type(nu_));
        case ErrorFamily::chi_square:
            return scale_ *
                   (chi_(engine, std::chi_squared_distribution<double>::param_type(nu_)) - nu_);
        }
        return 0.0;
    }

private:
    ErrorFamily family_;
    double nu_;
    double scale_ = 1.0;
    std::normal_distribution<double> normal_;
    std::student_t_distribution<double> student_;
    std::chi_squared_distribution<double> chi_;
};

struct ModeBlock {
    std::vector<double> weights;  // index offset + tau - 1
    double sum_offset = 0.0;
    double sum_sq_offset = 0.0;
    double mass_at_zero = 0.0;
    long failures = 0;
};

struct StudyBlock {
    ModeBlock known;
    ModeBlock profile;
    ModeBlock cobb;
};

model::ChangeModel true_model(const SimConfig& config)
{
    if (config.dims == 1) return model::standardized_change_univariate(0.0, config.eta, 1.0);
    Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(config.dims);
    Eigen::VectorXd mu2 = mu1;
    mu2[0] = config.eta;
    return model::standardized_change_multivariate(
        mu1, mu2, Eigen::MatrixXd::Identity(config.dims, config.dims));
}

void add_offset(ModeBlock& block, long offset, long tau, double weight)
{
    block.weights[static_cast<std::size_t>(offset + tau - 1)] += weight;
    block.sum_offset += weight * static_cast<double>(offset);
    block.sum_sq_offset += weight * static_cast<double>(offset) * static_cast<double>(offset);
}

ModeSummary summarize(const std::string& name, const std::vector<StudyBlock>& blocks,
                      ModeBlock StudyBlock::*member, const SimConfig& config,
                      const Distribution& theoretical)
{
    ModeBlock total;
    total.weights.assign(static_cast<std::size_t>(config.n - 1), 0.0);
    for (const auto& block : blocks) {
        const ModeBlock& b = block.*member;
        for (std::size_t i = 0; i < total.weights.size(); ++i) total.weights[i] += b.weights[i];
        total.sum_offset += b.sum_offset;
        total.sum_sq_offset += b.sum_sq_offset;
        total.mass_at_zero += b.mass_at_zero;
        total.failures += b.failures;
    }
    if (static_cast<double>(total.failures) >
        kMaxFailureFraction * static_cast<double>(config.replications)) {
        throw DegenerateDataError(name + " estimator failed in " + std::to_string(total.failures) +
                                  " of " + std::to_string(config.replications) + " replications");
    }

    ModeSummary s;
    s.mode = name;
    s.failures = total.failures;
    s.weight = static_cast<double>(config.replications - total.failures);
    for (std::size_t i = 0; i < total.weights.size(); ++i) {
        if (total.weights[i] > 0.0) {
            const long offset = static_cast<long>(i) - config.tau + 1;
            s.counts[offset] = total.weights[i];
            s.empirical[offset] = total.weights[i] / s.weight;
        }
    }
    s.bias = total.sum_offset / s.weight;
    s.mse = total.sum_sq_offset / s.weight;
    s.mean_mass_at_zero = total.mass_at_zero / s.weight;
    s.tv = tv_distance(s.empirical, theoretical);

    Distribution reachable;
    for (const auto& [k, p] : theoretical) {
        if (k >= -config.tau + 1 && k <= config.n - config.tau - 1) reachable[k] = p;
    }
    s.tv_noise = expected_sampling_tv(reachable, s.weight);
    return s;
}

} // namespace

std::string to_string(ErrorFamily family)
{
    switch (family) {
    case ErrorFamily::gaussian: return "gaussian";
    case ErrorFamily::student_t: return "student_t";
    case ErrorFamily::chi_square: return "chi_square";
    }
    return "unknown";
}

ErrorFamily parse_family(const std::string& name)
{
    if (name == "gaussian" || name == "normal") return ErrorFamily::gaussian;
    if (name == "student_t" || name == "t") return ErrorFamily::student_t;
    if (name == "chi_square" || name == "chisq") return ErrorFamily::chi_square;
    throw ConfigError("unknown error family '" + name + "'");
}

unsigned worker_count()
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CHANGEPOINT_THREADS")) {
        char* end = nullptr;
        const long requested = std::strtol(env, &end, 10);
        if (end != env && requested > 0) return static_cast<unsigned>(requested);
    }
    return hw;
}

void validate(const SimConfig& c)
{
    if (c.n < 2) throw ConfigError("n must be >= 2");
    if (c.tau < 1 || c.tau > c.n - 1) throw ConfigError("tau must lie in [1, n-1]");
    if (!(c.eta > 0.0) || !std::isfinite(c.eta)) throw ConfigError("eta must be positive");
    if (c.dims < 1) throw ConfigError("dimension must be >= 1");
    if (c.replications < 1) throw ConfigError("replications must be >= 1");
    if (c.family == ErrorFamily::student_t && !(c.nu > 2.0)) {
        throw ConfigError("student_t noise needs nu > 2 for a finite variance");
    }
    if (c.family == ErrorFamily::chi_square && !(c.nu > 0.0)) {
        throw ConfigError("chi_square noise needs nu > 0");
    }
    if (!c.known && !c.profile && !c.cobb) throw ConfigError("no estimator mode selected");
    if (c.cobb && c.cobb_delta < 1) throw ConfigError("Cobb delta must be >= 1");
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t rep_index)
{
    return splitmix64(splitmix64(master_seed) + rep_index);
}

model::Dataset generate_sequence(const SimConfig& config, long rep_index)
{
    validate(config);
    Engine engine(replication_seed(config.master_seed, static_cast<std::uint64_t>(rep_index)));
    NoiseSource noise(config.family, config.nu);

    model::Dataset data;
    data.series.resize(config.n, config.dims);
    for (long i = 0; i < config.n; ++i) {
        for (long j = 0; j < config.dims; ++j) data.series(i, j) = noise(engine);
        if (i >= config.tau) data.series(i, 0) += config.eta;
    }
    for (long j = 0; j < config.dims; ++j) data.labels.push_back("y" + std::to_string(j + 1));
    return data;
}

SimulationReport run_study(const SimConfig& config, const exactdist::Pmf& theoretical)
{
    validate(config);
    if (std::fabs(theoretical.eta() - config.eta) > 1e-12 * config.eta) {
        throw ConfigError("theoretical distribution was built for a different eta");
    }
    const auto cm = true_model(config);
    const auto tau = config.tau;
    const auto width = static_cast<std::size_t>(config.n - 1);

    auto blocks = run_blocks(config.replications, [&](long begin, long end) {
        StudyBlock block;
        for (ModeBlock* m : {&block.known, &block.profile, &block.cobb}) m->weights.assign(width, 0.0);
        for (long rep = begin; rep < end; ++rep) {
            const auto data = generate_sequence(config, rep);
            long tau_known = 0;
            if (config.known || config.cobb) {
                try {
                    tau_known = estimators::mle_known(data, cm).tau_hat;
                    if (config.known) add_offset(block.known, tau_known - tau, tau, 1.0);
                } catch (const Error&) {
                    ++block.known.failures;
                    tau_known = 0;
                }
            }
            if (config.profile) {
                try {
                    add_offset(block.profile, estimators::mle_profile(data).tau_hat - tau, tau, 1.0);
                } catch (const Error&) {
                    ++block.profile.failures;
                }
            }
            if (config.cobb) {
                try {
                    if (tau_known == 0) throw DomainError("no point estimate");
                    const long delta = std::min({config.cobb_delta, tau_known - 1,
                                                 config.n - 1 - tau_known});
                    if (delta < 1) {
                        // Edge estimate: the window is the single point tau_known.
                        add_offset(block.cobb, tau_known - tau, tau, 1.0);
                        if (tau_known == tau) block.cobb.mass_at_zero += 1.0;
                    } else {
                        const auto cond = estimators::cobb_conditional(data, tau_known, delta, cm);
                        for (long l = -delta; l <= delta; ++l) {
                            add_offset(block.cobb, tau_known + l - tau, tau, cond(l));
                        }
                        const long at_truth = tau - tau_known;
                        if (at_truth >= -delta && at_truth <= delta) {
                            block.cobb.mass_at_zero += cond(at_truth);
                        }
                    }
                } catch (const Error&) {
                    ++block.cobb.failures;
                }
            }
        }
        return block;
    });

    const auto theory = to_distribution(theoretical);
    SimulationReport report;
    report.config = config;
    report.seed_scheme = "mt19937_64 seeded per replication with splitmix64(splitmix64(master_seed) + rep_index)";
    report.standardization = "student_t: t_nu * sqrt((nu-2)/nu); chi_square: (chi2_nu - nu) / sqrt(2 nu)";
    if (config.known) report.modes.push_back(summarize("known", blocks, &StudyBlock::known, config, theory));
    if (config.profile) report.modes.push_back(summarize("profile", blocks, &StudyBlock::profile, config, theory));
    if (config.cobb) report.modes.push_back(summarize("cobb", blocks, &StudyBlock::cobb, config, theory));
    return report;
}

double tv_distance(const Distribution& p, const Distribution& q)
{
    double total = 0.0;
    auto pi = p.begin();
    auto qi = q.begin();
    while (pi != p.end() || qi != q.end()) {
        if (qi == q.end() || (pi != p.end() && pi->first < qi->first)) {
            total += std::fabs(pi->second);
            ++pi;
        } else if (pi == p.end() || qi->first < pi->first) {
            total += std::fabs(qi->second);
            ++qi;
        } else {
            total += std::fabs(pi->second - qi->second);
            ++pi;
            ++qi;
        }
    }
    return std::min(1.0, 0.5 * total);
}

Distribution to_distribution(const exactdist::Pmf& pmf)
{
    Distribution out;
    for (long k = -pmf.halfwidth(); k <= pmf.halfwidth(); ++k) out[k] = pmf(k);
    return out;
}

double expected_sampling_tv(const Distribution& p, double replications)
{
    double total = 0.0;
    for (const auto& [k, prob] : p) {
        const double clipped = std::clamp(prob, 0.0, 1.0);
        total += std::sqrt(2.0 * clipped * (1.0 - clipped) / (std::numbers::pi * replications));
    }
    return 0.5 * total;
}

long default_oracle_horizon(double eta)
{
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    return static_cast<long>(std::floor(8.0 * std::log(4.0 / kOracleHorizonBound) / (eta * eta))) + 1;
}

EmpiricalPmf oracle_xi_infinity(double eta, long horizon, long replications, std::uint64_t seed)
{
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (!(4.0 * std::exp(-eta * eta * static_cast<double>(horizon) / 8.0) < kOracleHorizonBound)) {
        throw ConfigError("horizon " + std::to_string(horizon) +
                          " leaves a post-horizon argmax probability above 1e-6; use at least " +
                          std::to_string(default_oracle_horizon(eta)));
    }
    const double drift = -0.5 * eta * eta;

    auto blocks = run_blocks(replications, [&](long begin, long end) {
        std::vector<long> counts(static_cast<std::size_t>(2 * horizon + 1), 0);
        for (long rep = begin; rep < end; ++rep) {
            Engine engine(replication_seed(seed, static_cast<std::uint64_t>(rep)));
            std::normal_distribution<double> normal;
            auto arm = [&] {
                double walk = 0.0, best = 0.0;
                long at = 0;
                for (long j = 1; j <= horizon; ++j) {
                    walk += drift + eta * normal(engine);
                    if (walk > best) {
                        best = walk;
                        at = j;
                    }
                }
                return std::pair{best, at};
            };
            const auto [left_max, left_at] = arm();
            const auto [right_max, right_at] = arm();
            long k = 0;
            if (left_max > right_max) {
                k = -left_at;
            } else if (right_max > left_max) {
                k = right_at;
            } else {
                k = left_at <= right_at ? -left_at : right_at;
            }
            ++counts[static_cast<std::size_t>(k + horizon)];
        }
        return counts;
    });

    std::vector<long> counts(static_cast<std::size_t>(2 * horizon + 1), 0);
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += b[i];
    }
    EmpiricalPmf out;
    out.replications = replications;
    out.horizon = horizon;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > 0) {
            out.probs[static_cast<long>(i) - horizon] =
                static_cast<double>(counts[i]) / static_cast<double>(replications);
        }
    }
    return out;
}

LadderEstimates ladder_oracle(double eta, long nmax, long replications, std::uint64_t seed)
{
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    if (nmax < 1) throw ConfigError("nmax must be >= 1");
    if (replications < 2) throw ConfigError("replications must be >= 2");
    const double drift = -0.5 * eta * eta;
    const auto len = static_cast<std::size_t>(nmax) + 1;

    struct Sums {
        std::vector<double> alive, tilted, tilted_sq;
    };
    auto blocks = run_blocks(replications, [&](long begin, long end) {
        Sums s{std::vector<double>(len, 0.0), std::vector<double>(len, 0.0),
               std::vector<double>(len, 0.0)};
        for (long rep = begin; rep < end; ++rep) {
            Engine engine(replication_seed(seed, static_cast<std::uint64_t>(rep)));
            std::normal_distribution<double> normal;
            double walk = 0.0;
            for (long k = 1; k <= nmax; ++k) {
                walk += drift + eta * normal(engine);
                if (walk <= 0.0) break;
                const double w = std::exp(-walk);
                s.alive[k] += 1.0;
                s.tilted[k] += w;
                s.tilted_sq[k] += w * w;
            }
        }
        return s;
    });

    Sums total{std::vector<double>(len, 0.0), std::vector<double>(len, 0.0),
               std::vector<double>(len, 0.0)};
    for (const auto& b : blocks) {
        for (std::size_t k = 0; k < len; ++k) {
            total.alive[k] += b.alive[k];
            total.tilted[k] += b.tilted[k];
            total.tilted_sq[k] += b.tilted_sq[k];
        }
    }

    const double reps = static_cast<double>(replications);
    LadderEstimates out;
    out.replications = replications;
    out.q.assign(len, 1.0);
    out.q_tilde.assign(len, 1.0);
    out.q_se.assign(len, 0.0);
    out.q_tilde_se.assign(len, 0.0);
    for (std::size_t k = 1; k < len; ++k) {
        const double q = total.alive[k] / reps;
        const double qt = total.tilted[k] / reps;
        out.q[k] = q;
        out.q_se[k] = std::sqrt(q * (1.0 - q) / (reps - 1.0));
        out.q_tilde[k] = qt;
        out.q_tilde_se[k] = std::sqrt(std::max(0.0, total.tilted_sq[k] / reps - qt * qt) / (reps - 1.0));
    }
    return out;
}

} // namespace changepoint::montecarlo
