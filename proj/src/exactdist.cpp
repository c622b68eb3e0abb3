#include "changepoint/exactdist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "changepoint/errors.hpp"
#include "changepoint/numerics.hpp"

namespace changepoint::exactdist {

namespace {

// Per-step geometric rate of b_n: 1 - Phi(x) <= exp(-x^2/2)/2 at x = eta sqrt(n)/2.
double decay_rate(double eta) { return std::exp(-eta * eta / 8.0); }

// Bound on sum_{j>J} (1/j) exp(-eta^2 j/8)/2.
double series_tail_bound(double rate, long terms)
{
    const double next = static_cast<double>(terms + 1);
    return 0.5 * std::pow(rate, next) / (next * (1.0 - rate));
}

// Bound on sum_{n>K} n exp(-eta^2 n/8)/2.
double moment_tail_bound(double rate, long kmax)
{
    const double next = static_cast<double>(kmax + 1);
    const double one_minus = 1.0 - rate;
    return 0.5 * std::pow(rate, next) * (next / one_minus + rate / (one_minus * one_minus));
}

void check_eta(double eta)
{
    if (!std::isfinite(eta) || eta < kMinEta) {
        throw ConfigError("eta must be >= " + std::to_string(kMinEta) +
                          "; smaller changes need impractically long ladder series");
    }
}

void check_tol(double tol)
{
    if (!(tol > 0.0) || tol > 1e-6) throw ConfigError("tol must lie in (0, 1e-6]");
}

// n x_n = sum_{j<n} w_{n-j} x_j with x_0 = 1.
std::vector<double> convolution_recursion(const std::vector<double>& weights, long kmax)
{
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    out[0] = 1.0;
    for (long n = 1; n <= kmax; ++n) {
        double acc = 0.0;
        for (long j = 0; j < n; ++j) acc += weights[n - j] * out[j];
        out[n] = acc / static_cast<double>(n);
    }
    return out;
}

} // namespace

LadderTables build_ladder_tables(double eta, long kmax, double tol)
{
    check_eta(eta);
    check_tol(tol);
    if (kmax < 1) throw ConfigError("kmax must be >= 1");

    LadderTables t;
    t.eta = eta;
    t.kmax = kmax;
    t.tol = tol;

    const double rate = decay_rate(eta);
    long terms = 1;
    while (series_tail_bound(rate, terms) >= tol) ++terms;
    t.series_terms = terms;
    t.truncation_error = series_tail_bound(rate, terms);

    const long table_len = std::max(kmax, terms);
    t.b.assign(static_cast<std::size_t>(table_len) + 1, 0.0);
    t.log_b_tilde.assign(static_cast<std::size_t>(table_len) + 1, 0.0);
    t.b_tilde.assign(static_cast<std::size_t>(table_len) + 1, 0.0);
    for (long n = 1; n <= table_len; ++n) {
        t.b[n] = numerics::std_normal_survival(eta * std::sqrt(static_cast<double>(n)) / 2.0);
        t.log_b_tilde[n] = numerics::log_b_tilde(n, eta).value;
        t.b_tilde[n] = std::exp(t.log_b_tilde[n]);
    }
    for (long j = 1; j <= terms; ++j) {
        t.b_series += t.b[j] / static_cast<double>(j);
        t.b_tilde_series += t.b_tilde[j] / static_cast<double>(j);
    }
    t.no_ladder = std::exp(-t.b_series);

    t.b.resize(static_cast<std::size_t>(kmax) + 1);
    t.log_b_tilde.resize(static_cast<std::size_t>(kmax) + 1);
    t.b_tilde.resize(static_cast<std::size_t>(kmax) + 1);
    t.q = convolution_recursion(t.b, kmax);
    t.q_tilde = convolution_recursion(t.b_tilde, kmax);
    return t;
}

long kmax_for_moments(double eta, double tol)
{
    check_eta(eta);
    check_tol(tol);
    const double rate = decay_rate(eta);
    long kmax = 1;
    while (moment_tail_bound(rate, kmax) >= tol) {
        if (++kmax > kMaxSupportHalfwidth) {
            throw PrecisionError("moment series needs more than " +
                                 std::to_string(kMaxSupportHalfwidth) + " terms");
        }
    }
    return kmax;
}

Pmf::Pmf(double eta, long halfwidth, std::vector<double> probs, double tail_mass_bound,
         double no_ladder)
    : eta_(eta),
      halfwidth_(halfwidth),
      probs_(std::move(probs)),
      tail_mass_bound_(tail_mass_bound),
      no_ladder_(no_ladder)
{
    if (halfwidth_ < 0 || probs_.size() != static_cast<std::size_t>(2 * halfwidth_ + 1)) {
        throw DomainError("Pmf: probability vector must cover [-K, K]");
    }
}

double Pmf::operator()(long k) const
{
    if (k < -halfwidth_ || k > halfwidth_) return 0.0;
    return probs_[static_cast<std::size_t>(k + halfwidth_)];
}

double Pmf::mass() const
{
    double total = (*this)(0);
    for (long k = 1; k <= halfwidth_; ++k) total += (*this)(k) + (*this)(-k);
    return total;
}

Pmf build_pmf(double eta, double tol)
{
    check_eta(eta);
    check_tol(tol);
    const double series_tol = std::min(tol, 1e-14);
    const double rate = decay_rate(eta);
    const double tail_factor = 2.0 * rate / (1.0 - rate);

    long kmax = static_cast<long>(std::ceil(8.0 * std::log(1.0 / tol) / (eta * eta))) + 16;
    kmax = std::min(kmax, kMaxSupportHalfwidth);
    for (;;) {
        const LadderTables t = build_ladder_tables(eta, kmax, series_tol);
        const double no_ladder = t.no_ladder;
        const double ladder = 1.0 - no_ladder;

        std::vector<double> half(static_cast<std::size_t>(kmax) + 1);
        half[0] = no_ladder * no_ladder;
        for (long k = 1; k <= kmax; ++k) {
            half[k] = no_ladder * (t.q[k] - ladder * t.q_tilde[k]);
        }

        double accumulated = half[0];
        for (long k = 1; k <= kmax; ++k) {
            accumulated += 2.0 * half[k];
            const double tail = tail_factor * half[k];
            if (tail <= tol && accumulated >= 1.0 - tol) {
                std::vector<double> probs(static_cast<std::size_t>(2 * k + 1));
                for (long j = 0; j <= k; ++j) {
                    probs[k + j] = half[j];
                    probs[k - j] = half[j];
                }
                return Pmf(eta, k, std::move(probs), tail, no_ladder);
            }
        }
        if (kmax >= kMaxSupportHalfwidth) {
            throw PrecisionError("PMF support would exceed " +
                                 std::to_string(kMaxSupportHalfwidth) + " offsets");
        }
        kmax = std::min(2 * kmax, kMaxSupportHalfwidth);
    }
}

CdfValue cdf(const Pmf& pmf, long k)
{
    const long halfwidth = pmf.halfwidth();
    if (k < -halfwidth) return {0.0, true};
    const long upper = std::min(k, halfwidth);
    double total = 0.0;
    for (long j = -halfwidth; j <= upper; ++j) total += pmf(j);
    return {std::clamp(total, 0.0, 1.0), false};
}

long symmetric_interval(const Pmf& pmf, double level)
{
    if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
    double covered = pmf(0);
    if (covered >= level) return 0;
    for (long m = 1; m <= pmf.halfwidth(); ++m) {
        covered += pmf(m) + pmf(-m);
        if (covered >= level) return m;
    }
    throw UnreachableLevelError("level " + std::to_string(level) +
                                " exceeds the mass of the stored support");
}

double variance_closed_form(const LadderTables& tables)
{
    const double rate = decay_rate(tables.eta);
    if (moment_tail_bound(rate, tables.kmax) >= tables.tol) {
        throw PrecisionError("kmax too small for the n*b_n series at this tolerance");
    }
    double b1 = 0.0, b2 = 0.0, bt1 = 0.0, bt2 = 0.0;
    for (long n = 1; n <= tables.kmax; ++n) {
        const double dn = static_cast<double>(n);
        b1 += tables.b[n];
        b2 += dn * tables.b[n];
        bt1 += tables.b_tilde[n];
        bt2 += dn * tables.b_tilde[n];
    }
    const double b0 = tables.b_series;
    const double bt0 = tables.b_tilde_series;
    const double var = 2.0 * (b2 + b1 * b1) -
                       2.0 * std::exp(-b0 + bt0) * (-std::expm1(-b0)) * (bt2 + bt1 * bt1);
    return std::max(var, 0.0);
}

double tv_bound(double eta, long n, long tau)
{
    if (tau < 1 || tau > n - 1) throw DomainError("tv_bound: tau must lie in [1, n-1]");
    if (!(eta > 0.0)) throw DomainError("tv_bound: eta must be positive");
    const double e2 = eta * eta / 8.0;
    const double worst = std::max(std::exp(-e2 * static_cast<double>(tau)),
                                  std::exp(-e2 * static_cast<double>(n - tau)));
    return std::min(1.0, 4.0 * worst);
}

} // namespace changepoint::exactdist
