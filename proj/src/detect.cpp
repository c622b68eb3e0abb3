#include "changepoint/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "changepoint/errors.hpp"
#include "changepoint/estimators.hpp"

namespace changepoint::detect {

namespace {

constexpr long kMinDarlingErdosN = 16;

struct Normalization {
    double scale;  // sqrt(2 log log n)
    double shift;  // 2 log log n + (p/2) log log log n - log Gamma(p/2)
};

Normalization normalization(long n, long p)
{
    if (n < kMinDarlingErdosN) {
        throw DomainError("Darling-Erdos normalization needs n >= 16, got " + std::to_string(n));
    }
    if (p < 1) throw DomainError("parameter count p must be >= 1");
    const double ll = std::log(std::log(static_cast<double>(n)));
    const double half_p = 0.5 * static_cast<double>(p);
    return {std::sqrt(2.0 * ll), 2.0 * ll + half_p * std::log(ll) - std::lgamma(half_p)};
}

void finish(DetectionReport& report, long n)
{
    long best = -1;
    for (std::size_t i = 0; i < report.trace.size(); ++i) {
        if (std::isnan(report.trace[i])) continue;
        if (best < 0 || report.trace[i] > report.trace[static_cast<std::size_t>(best)]) {
            best = static_cast<long>(i);
        }
    }
    if (best < 0) throw DegenerateDataError("statistic is undefined at every admissible split");
    report.tau_hat = report.first_index + best;
    report.U = std::max(0.0, report.trace[static_cast<std::size_t>(best)]);
    if (n >= kMinDarlingErdosN) {
        report.W = darling_erdos_transform(report.U, n, report.p);
        report.p_value = p_value(*report.W);
    }
}

// log|S| for the maximum-likelihood covariance of rows [begin, end), or NaN if singular.
double segment_log_det(const Eigen::MatrixXd& rows, long begin, long end)
{
    const auto block = rows.middleRows(begin, end - begin);
    const Eigen::RowVectorXd mean = block.colwise().mean();
    const Eigen::MatrixXd centred = block.rowwise() - mean;
    const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(end - begin);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return model::log_determinant(llt);
}

} // namespace

DetectionReport mean_change_statistic(const model::Dataset& data)
{
    const long n = data.rows();
    const long d = data.dims();
    if (d < 1) throw DomainError("dataset has no columns");
    if (n < 2 * (d + 1)) {
        throw DomainError("mean-change test needs n >= 2(d+1) = " + std::to_string(2 * (d + 1)));
    }
    DetectionReport report;
    report.kind = StatisticKind::mean_change;
    report.p = d;
    report.first_index = d + 1;
    report.trace = estimators::mean_change_criterion(data, d + 1, n - d - 1);
    finish(report, n);
    return report;
}

double darling_erdos_transform(double U, long n, long p)
{
    if (!(U >= 0.0) || !std::isfinite(U)) throw DomainError("U must be finite and >= 0");
    const auto [scale, shift] = normalization(n, p);
    return scale * std::sqrt(U) - shift;
}

double darling_erdos_inverse(double W, long n, long p)
{
    if (!std::isfinite(W)) throw DomainError("W must be finite");
    const auto [scale, shift] = normalization(n, p);
    const double root = (W + shift) / scale;
    if (root < 0.0) throw DomainError("W lies below the transform's range");
    return root * root;
}

double p_value(double W)
{
    if (std::isnan(W)) throw DomainError("W must not be NaN");
    return std::clamp(-std::expm1(-2.0 * std::exp(-W)), 0.0, 1.0);
}

DetectionReport covariance_change_statistic(const model::Dataset& deviations)
{
    const long n = deviations.rows();
    const long d = deviations.dims();
    if (d < 1) throw DomainError("dataset has no columns");
    if (n < 2 * (d + 1)) {
        throw DomainError("covariance-change test needs n >= 2(d+1) = " +
                          std::to_string(2 * (d + 1)));
    }
    const double whole = segment_log_det(deviations.series, 0, n);
    if (std::isnan(whole)) throw DegenerateDataError("covariance of the whole sample is singular");

    DetectionReport report;
    report.kind = StatisticKind::covariance_change;
    report.p = d * (d + 1) / 2;
    report.first_index = d + 1;
    const double dn = static_cast<double>(n);
    for (long t = d + 1; t <= n - d - 1; ++t) {
        const double left = segment_log_det(deviations.series, 0, t);
        const double right = segment_log_det(deviations.series, t, n);
        const double dt = static_cast<double>(t);
        report.trace.push_back(dn * whole - dt * left - (dn - dt) * right);
    }
    finish(report, n);
    return report;
}

ResidualDiagnostics residual_diagnostics(const model::Dataset& data, long tau_hat)
{
    const long n = data.rows();
    if (tau_hat < 1 || tau_hat > n - 1) throw DomainError("tau_hat must lie in [1, n-1]");
    const auto est = estimators::segment_estimates(data, tau_hat);

    ResidualDiagnostics out;
    out.tau_hat = tau_hat;
    out.mu1 = est.mu1;
    out.mu2 = est.mu2;
    out.sigma = est.sigma;
    out.deviations.resize(n, data.dims());
    out.deviations.topRows(tau_hat) = data.series.topRows(tau_hat).rowwise() - est.mu1.transpose();
    out.deviations.bottomRows(n - tau_hat) =
        data.series.bottomRows(n - tau_hat).rowwise() - est.mu2.transpose();

    Eigen::LLT<Eigen::MatrixXd> llt(est.sigma);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
        throw DegenerateDataError("pooled covariance is singular");
    }
    const Eigen::MatrixXd whitened = llt.matrixL().solve(out.deviations.transpose());
    out.mahalanobis_sq = whitened.colwise().squaredNorm().transpose();
    return out;
}

} // namespace changepoint::detect
