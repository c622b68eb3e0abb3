#pragma once

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "changepoint/exactdist.hpp"
#include "changepoint/model.hpp"

namespace changepoint::estimators {

enum class MleMode { known, profile };

/// Segment means and the pooled covariance (scatter about segment means / n).
struct EstimatedParams {
    long split = 0;
    Eigen::VectorXd mu1;
    Eigen::VectorXd mu2;
    Eigen::MatrixXd sigma;
};

struct MleResult {
    long tau_hat = 0;
    MleMode mode = MleMode::known;
    /// Index of trace[0]; the trace covers first_index .. first_index + size - 1.
    long first_index = 1;
    /// Cumulative log-likelihood ratio (known) or profile criterion. Splits
    /// where the criterion is undefined hold NaN.
    std::vector<double> trace;
    std::variant<model::ChangeModel, EstimatedParams> params;
};

/// Per-observation log{f1(Y_i)/f2(Y_i)} under the Gaussian model.
Eigen::VectorXd log_likelihood_ratios(const model::Dataset& data, const model::ChangeModel& model);

/// Smallest argmax over j in [1, n-1] of the cumulative log-likelihood ratio.
MleResult mle_known(const model::Dataset& data, const model::ChangeModel& model);

/// Smallest argmax of n log(|S_n| / |S_t|) over the admissible splits:
/// [1, n-1] for one variable, [d+1, n-d-1] otherwise.
MleResult mle_profile(const model::Dataset& data);

/// n log(|S_n| / |S_t|) for t in [first, last], where S_t pools the scatter
/// about the two segment means. NaN marks a singular S_t.
/// Throws DegenerateDataError when S_n is singular.
std::vector<double> mean_change_criterion(const model::Dataset& data, long first, long last);

EstimatedParams segment_estimates(const model::Dataset& data, long split);

/// Treats segment estimates as known parameters.
model::ChangeModel to_change_model(const EstimatedParams& params);

/// Conditional distribution of the change point over tau_hat - delta .. tau_hat + delta.
struct ConditionalPmf {
    long tau_hat = 0;
    long n = 0;
    long delta = 0;
    std::vector<double> probs;  ///< index l + delta
    double error_rate_target = 1e-5;

    double operator()(long l) const;
};

long default_delta(long tau_hat, long n);

ConditionalPmf cobb_conditional(const model::Dataset& data, long tau_hat, long delta,
                                const model::ChangeModel& params);

struct ConfidenceInterval {
    long lower = 0;
    long upper = 0;
    /// Probability mass of the reported set.
    double coverage = 0.0;
    bool clipped = false;
    /// False when a highest-mass set has gaps; `members` lists it in that case.
    bool contiguous = true;
    std::vector<long> members;
    std::optional<long> calendar_lower;
    std::optional<long> calendar_upper;
};

/// tau_hat +- m with m from the symmetric interval of the limiting law,
/// clipped to [1, n-1].
ConfidenceInterval confidence_interval(const exactdist::Pmf& pmf, double level, long tau_hat,
                                       long n, std::optional<long> time_origin = std::nullopt);

/// Smallest highest-probability set of the conditional distribution.
ConfidenceInterval confidence_interval(const ConditionalPmf& conditional, double level,
                                       std::optional<long> time_origin = std::nullopt);

} // namespace changepoint::estimators
