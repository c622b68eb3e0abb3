#include "changepoint/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "changepoint/errors.hpp"

namespace changepoint::estimators {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Smallest index of the maximum, skipping NaN entries. Returns -1 when all are NaN.
long first_argmax(const std::vector<double>& values)
{
    long best = -1;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) continue;
        if (best < 0 || values[i] > values[static_cast<std::size_t>(best)]) {
            best = static_cast<long>(i);
        }
    }
    return best;
}

std::optional<long> calendar(std::optional<long> origin, long index)
{
    if (!origin) return std::nullopt;
    return *origin + index - 1;
}

} // namespace

Eigen::VectorXd log_likelihood_ratios(const model::Dataset& data, const model::ChangeModel& cm)
{
    const long n = data.rows();
    Eigen::VectorXd out(n);
    if (const auto* uni = std::get_if<model::UnivariateChange>(&cm.origin)) {
        if (data.dims() != 1) throw DomainError("univariate model applied to multivariate data");
        const double slope = (uni->mu1 - uni->mu2) / (uni->sigma * uni->sigma);
        const double mid = 0.5 * (uni->mu1 + uni->mu2);
        out = slope * (data.series.col(0).array() - mid);
        return out;
    }
    const auto& multi = std::get<model::MultivariateChange>(cm.origin);
    if (data.dims() != multi.mu1.size()) {
        throw DomainError("model dimension " + std::to_string(multi.mu1.size()) +
                          " does not match data dimension " + std::to_string(data.dims()));
    }
    // log f1/f2 = w'(y - (mu1 + mu2)/2) with w = Sigma^{-1}(mu1 - mu2).
    const auto llt = model::factor_covariance(multi.sigma);
    const Eigen::VectorXd w = llt.solve(multi.mu1 - multi.mu2);
    const Eigen::RowVectorXd mid = 0.5 * (multi.mu1 + multi.mu2).transpose();
    out = (data.series.rowwise() - mid) * w;
    return out;
}

MleResult mle_known(const model::Dataset& data, const model::ChangeModel& cm)
{
    const long n = data.rows();
    if (n < 2) throw DomainError("mle_known needs at least 2 observations");
    const Eigen::VectorXd terms = log_likelihood_ratios(data, cm);

    MleResult result;
    result.mode = MleMode::known;
    result.first_index = 1;
    result.trace.resize(static_cast<std::size_t>(n - 1));
    double walk = 0.0;
    for (long j = 0; j < n - 1; ++j) {
        walk += terms[j];
        result.trace[static_cast<std::size_t>(j)] = walk;
    }
    result.tau_hat = first_argmax(result.trace) + 1;
    result.params = cm;
    return result;
}

std::vector<double> mean_change_criterion(const model::Dataset& data, long first, long last)
{
    const long n = data.rows();
    if (first < 1 || last > n - 1 || first > last) {
        throw DomainError("no admissible split in [" + std::to_string(first) + ", " +
                          std::to_string(last) + "]");
    }
    const Eigen::RowVectorXd mean = data.series.colwise().mean();
    const Eigen::MatrixXd centred = data.series.rowwise() - mean;
    const Eigen::MatrixXd total = centred.transpose() * centred;

    Eigen::LLT<Eigen::MatrixXd> llt(total);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
        throw DegenerateDataError("pooled covariance of the whole sample is singular");
    }

    // With centred rows, S_t = T - n/(t(n-t)) s s' where s is the running sum,
    // so |S_n|/|S_t| = 1/(1 - n/(t(n-t)) s'T^{-1}s).
    const double dn = static_cast<double>(n);
    std::vector<double> crit;
    crit.reserve(static_cast<std::size_t>(last - first + 1));
    Eigen::VectorXd running = Eigen::VectorXd::Zero(data.dims());
    for (long i = 0; i < first - 1; ++i) running += centred.row(i).transpose();
    for (long t = first; t <= last; ++t) {
        running += centred.row(t - 1).transpose();
        const double dt = static_cast<double>(t);
        const Eigen::VectorXd whitened = llt.matrixL().solve(running);
        const double explained = dn / (dt * (dn - dt)) * whitened.squaredNorm();
        crit.push_back(explained < 1.0 ? -dn * std::log1p(-explained) : kNaN);
    }
    return crit;
}

MleResult mle_profile(const model::Dataset& data)
{
    const long n = data.rows();
    const long d = data.dims();
    if (n < 4) throw DomainError("mle_profile needs at least 4 observations");
    const long first = d == 1 ? 1 : d + 1;
    const long last = d == 1 ? n - 1 : n - d - 1;
    if (first > last) {
        throw DomainError("need at least " + std::to_string(2 * (d + 1)) +
                          " observations for " + std::to_string(d) + " variables");
    }

    MleResult result;
    result.mode = MleMode::profile;
    result.first_index = first;
    result.trace = mean_change_criterion(data, first, last);
    const long best = first_argmax(result.trace);
    if (best < 0) throw DegenerateDataError("pooled covariance is singular at every split");
    result.tau_hat = first + best;
    result.params = segment_estimates(data, result.tau_hat);
    return result;
}

EstimatedParams segment_estimates(const model::Dataset& data, long split)
{
    const long n = data.rows();
    if (split < 1 || split > n - 1) throw DomainError("split must lie in [1, n-1]");
    EstimatedParams p;
    p.split = split;
    const auto before = data.series.topRows(split);
    const auto after = data.series.bottomRows(n - split);
    p.mu1 = before.colwise().mean().transpose();
    p.mu2 = after.colwise().mean().transpose();
    const Eigen::MatrixXd dev1 = before.rowwise() - p.mu1.transpose();
    const Eigen::MatrixXd dev2 = after.rowwise() - p.mu2.transpose();
    p.sigma = (dev1.transpose() * dev1 + dev2.transpose() * dev2) / static_cast<double>(n);
    return p;
}

model::ChangeModel to_change_model(const EstimatedParams& params)
{
    if (params.mu1.size() == 1) {
        return model::standardized_change_univariate(params.mu1[0], params.mu2[0],
                                                     std::sqrt(params.sigma(0, 0)));
    }
    return model::standardized_change_multivariate(params.mu1, params.mu2, params.sigma);
}

double ConditionalPmf::operator()(long l) const
{
    if (l < -delta || l > delta) return 0.0;
    return probs[static_cast<std::size_t>(l + delta)];
}

long default_delta(long tau_hat, long n)
{
    return std::min({tau_hat - 1, n - tau_hat - 1, 15L});
}

ConditionalPmf cobb_conditional(const model::Dataset& data, long tau_hat, long delta,
                                const model::ChangeModel& params)
{
    const long n = data.rows();
    if (delta < 1) throw DomainError("delta must be >= 1");
    if (tau_hat - delta < 1 || tau_hat + delta > n - 1) {
        throw DomainError("window tau_hat +- delta = [" + std::to_string(tau_hat - delta) + ", " +
                          std::to_string(tau_hat + delta) + "] leaves [1, " +
                          std::to_string(n - 1) + "]");
    }
    const Eigen::VectorXd terms = log_likelihood_ratios(data, params);

    // Up to a constant, the full log-likelihood with split tau is the
    // cumulative log-ratio through tau.
    std::vector<double> loglik(static_cast<std::size_t>(2 * delta + 1));
    double walk = terms.head(tau_hat - delta - 1).sum();
    for (long l = -delta; l <= delta; ++l) {
        walk += terms[tau_hat + l - 1];
        loglik[static_cast<std::size_t>(l + delta)] = walk;
    }
    const double top = *std::ranges::max_element(loglik);
    double total = 0.0;
    for (double& v : loglik) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : loglik) v /= total;

    ConditionalPmf out;
    out.tau_hat = tau_hat;
    out.n = n;
    out.delta = delta;
    out.probs = std::move(loglik);
    return out;
}

ConfidenceInterval confidence_interval(const exactdist::Pmf& pmf, double level, long tau_hat,
                                       long n, std::optional<long> time_origin)
{
    if (tau_hat < 1 || tau_hat > n - 1) throw DomainError("tau_hat must lie in [1, n-1]");
    const long m = exactdist::symmetric_interval(pmf, level);
    ConfidenceInterval ci;
    ci.coverage = pmf(0);
    for (long k = 1; k <= m; ++k) ci.coverage += pmf(k) + pmf(-k);
    ci.lower = tau_hat - m;
    ci.upper = tau_hat + m;
    if (ci.lower < 1 || ci.upper > n - 1) {
        ci.clipped = true;
        ci.lower = std::max(ci.lower, 1L);
        ci.upper = std::min(ci.upper, n - 1);
    }
    ci.calendar_lower = calendar(time_origin, ci.lower);
    ci.calendar_upper = calendar(time_origin, ci.upper);
    return ci;
}

ConfidenceInterval confidence_interval(const ConditionalPmf& conditional, double level,
                                       std::optional<long> time_origin)
{
    if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
    std::vector<long> order(conditional.probs.size());
    std::iota(order.begin(), order.end(), -conditional.delta);
    std::ranges::stable_sort(order, [&](long a, long b) {
        if (conditional(a) != conditional(b)) return conditional(a) > conditional(b);
        if (std::labs(a) != std::labs(b)) return std::labs(a) < std::labs(b);
        return a < b;
    });

    ConfidenceInterval ci;
    std::vector<long> chosen;
    for (long l : order) {
        chosen.push_back(l);
        ci.coverage += conditional(l);
        if (ci.coverage >= level) break;
    }
    if (ci.coverage < level) {
        throw UnreachableLevelError("conditional mass cannot reach level " + std::to_string(level));
    }
    std::ranges::sort(chosen);
    ci.lower = conditional.tau_hat + chosen.front();
    ci.upper = conditional.tau_hat + chosen.back();
    ci.contiguous = static_cast<long>(chosen.size()) == chosen.back() - chosen.front() + 1;
    for (long l : chosen) ci.members.push_back(conditional.tau_hat + l);
    ci.calendar_lower = calendar(time_origin, ci.lower);
    ci.calendar_upper = calendar(time_origin, ci.upper);
    return ci;
}

} // namespace changepoint::estimators
