#pragma once

#include <vector>

namespace changepoint::exactdist {

/// Smallest admissible standardized change. Below this the ladder series
/// need on the order of 8*ln(1/tol)/eta^2 terms.
inline constexpr double kMinEta = 0.05;
inline constexpr long kMaxSupportHalfwidth = 100000;
inline constexpr double kDefaultSeriesTol = 1e-12;
inline constexpr double kDefaultPmfTol = 1e-10;

/// Ladder quantities of the Gaussian log-likelihood-ratio walk
/// S_n = sum of (-eta^2/2 + eta Z_i).
///
/// Sequences are indexed by n directly; entry 0 of `b` and `b_tilde` is an
/// unused zero, entry 0 of `q` and `q_tilde` is the convention q_0 = 1.
struct LadderTables {
    double eta = 0.0;
    long kmax = 0;
    double tol = 0.0;

    std::vector<double> b;            ///< P(S_n > 0)
    std::vector<double> log_b_tilde;  ///< log E{exp(-S_n) I(S_n > 0)}
    std::vector<double> b_tilde;
    std::vector<double> q;            ///< P(T1- > n)
    std::vector<double> q_tilde;      ///< E{exp(-S_n) I(T1- > n)}

    /// 1 - ||G+||, the probability that the walk never goes above zero.
    double no_ladder = 0.0;
    /// Series lengths J and the certified bound on the discarded terms.
    long series_terms = 0;
    double truncation_error = 0.0;
    /// sum_{j<=J} b_j/j and sum_{j<=J} b~_j/j.
    double b_series = 0.0;
    double b_tilde_series = 0.0;

    double ladder_mass() const { return 1.0 - no_ladder; }
};

/// Builds b, b~, q, q~ for n <= kmax through the convolution recursions
/// n q_n = sum_{j<n} b_{n-j} q_j (and the tilted analogue), and the
/// no-ladder probability exp(-sum_j b_j / j) truncated once the analytic
/// tail bound drops below tol.
LadderTables build_ladder_tables(double eta, long kmax, double tol = kDefaultSeriesTol);

/// Smallest table length whose discarded n*b_n tail is below tol.
long kmax_for_moments(double eta, double tol);

/// Distribution of the centred change-point estimator in the limit of long
/// segments on both sides, over offsets [-K, K].
class Pmf {
public:
    Pmf(double eta, long halfwidth, std::vector<double> probs, double tail_mass_bound,
        double no_ladder);

    double eta() const { return eta_; }
    long halfwidth() const { return halfwidth_; }
    double tail_mass_bound() const { return tail_mass_bound_; }
    double no_ladder() const { return no_ladder_; }

    /// Probability at offset k; zero outside [-K, K].
    double operator()(long k) const;
    /// Probabilities for k = -K..K.
    const std::vector<double>& values() const { return probs_; }
    /// Sum over the stored support.
    double mass() const;

private:
    double eta_;
    long halfwidth_;
    std::vector<double> probs_;
    double tail_mass_bound_;
    double no_ladder_;
};

/// P(xi = 0) = (1 - ||G+||)^2 and P(xi = +-k) = (1 - ||G+||)(q_k - ||G+|| q~_k).
/// K grows until the geometric tail estimate 2 p_K r/(1-r), r = exp(-eta^2/8),
/// falls below tol.
Pmf build_pmf(double eta, double tol = kDefaultPmfTol);

struct CdfValue {
    double probability = 0.0;
    /// Set when k lies below the stored support and the value ignores the tail.
    bool below_support = false;
};

CdfValue cdf(const Pmf& pmf, long k);

/// Smallest m >= 0 with sum_{|k|<=m} p(k) >= level.
long symmetric_interval(const Pmf& pmf, double level);

/// Variance from the generating-function sums B, B', B'' of b_n and b~_n.
/// B'' here is sum n b_n, which makes the expression equal the second moment
/// of the distribution above.
double variance_closed_form(const LadderTables& tables);

/// 4 max{exp(-eta^2 tau/8), exp(-eta^2 (n - tau)/8)}, capped at 1.
double tv_bound(double eta, long n, long tau);

} // namespace changepoint::exactdist
