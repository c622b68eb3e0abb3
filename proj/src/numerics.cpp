#include "changepoint/numerics.hpp"

#include <cmath>
#include <numbers>

#include "changepoint/errors.hpp"

namespace changepoint::numerics {

namespace {

constexpr double kContinuedFractionCrossover = 8.0;

void require_finite(double x, const char* what)
{
    if (!std::isfinite(x)) {
        throw DomainError(std::string(what) + ": argument must be finite");
    }
}

// Reciprocal Mills ratio phi(x)/(1-Phi(x)) as the continued fraction
// x + 1/(x + 2/(x + 3/(x + ...))), evaluated with the modified Lentz method.
double inverse_mills_ratio(double x)
{
    constexpr double kTiny = 1e-300;
    double f = x;
    double c = f;
    double d = 0.0;
    for (int i = 1; i < 500; ++i) {
        d = x + i * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        d = 1.0 / d;
        c = x + i / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return f;
}

} // namespace

double std_normal_survival(double x)
{
    require_finite(x, "std_normal_survival");
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

LogProb log_std_normal_survival(double x)
{
    require_finite(x, "log_std_normal_survival");
    if (x >= kContinuedFractionCrossover) {
        const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
        return {-0.5 * x * x - log_sqrt_2pi - std::log(inverse_mills_ratio(x))};
    }
    if (x < 0.0) {
        // 1 - Phi(x) = 1 - (1 - Phi(-x)); log1p keeps the small complement exact.
        return {std::log1p(-std_normal_survival(-x))};
    }
    return {std::log(std_normal_survival(x))};
}

LogProb log_b_tilde(long n, double eta)
{
    if (n < 1) throw DomainError("log_b_tilde: n must be >= 1");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("log_b_tilde: eta must be positive");
    const double root_n = std::sqrt(static_cast<double>(n));
    return {static_cast<double>(n) * eta * eta + log_std_normal_survival(1.5 * eta * root_n).value};
}

} // namespace changepoint::numerics
