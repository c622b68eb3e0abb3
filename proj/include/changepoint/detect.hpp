#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "changepoint/model.hpp"

namespace changepoint::detect {

enum class StatisticKind { mean_change, covariance_change };

struct DetectionReport {
    StatisticKind kind = StatisticKind::mean_change;
    double U = 0.0;
    /// Normalized statistic and its asymptotic p-value; absent for n < 16,
    /// where the log log log n normalization is undefined.
    std::optional<double> W;
    std::optional<double> p_value;
    long p = 0;
    long tau_hat = 0;
    /// trace[i] belongs to split first_index + i; NaN marks a singular split.
    long first_index = 0;
    std::vector<double> trace;
};

/// Twice the log-likelihood ratio for a single mean change,
/// max over t in [d+1, n-d-1] of n log(|S_n| / |S_t|).
DetectionReport mean_change_statistic(const model::Dataset& data);

/// sqrt(2 loglog n U) - (2 loglog n + (p/2) logloglog n - lgamma(p/2)).
double darling_erdos_transform(double U, long n, long p);

/// Inverse of the transform above on its range.
double darling_erdos_inverse(double W, long n, long p);

/// Upper tail of the double-exponential limit, 1 - exp(-2 exp(-W)).
double p_value(double W);

/// log{|S_{1:n}|^n / (|S_{1:t}|^t |S_{t+1:n}|^(n-t))} maximized over splits
/// where both segments keep at least d+1 rows. Segment covariances are
/// maximum-likelihood estimates about each segment's own mean.
DetectionReport covariance_change_statistic(const model::Dataset& deviations);

struct ResidualDiagnostics {
    long tau_hat = 0;
    Eigen::VectorXd mu1;
    Eigen::VectorXd mu2;
    Eigen::MatrixXd sigma;          ///< pooled scatter about segment means / n
    Eigen::MatrixXd deviations;     ///< D_i, one row per observation
    Eigen::VectorXd mahalanobis_sq; ///< D_i' sigma^{-1} D_i
};

ResidualDiagnostics residual_diagnostics(const model::Dataset& data, long tau_hat);

} // namespace changepoint::detect
