#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "changepoint/errors.hpp"
#include "changepoint/numerics.hpp"

using namespace changepoint;
using numerics::log_b_tilde;
using numerics::log_std_normal_survival;
using numerics::std_normal_survival;

namespace {

// Maclaurin series of erf in long double; adequate for |x| <= 3.
long double erfc_series(long double x)
{
    long double term = x, sum = x;
    for (int n = 1; n < 200; ++n) {
        term *= -x * x / n;
        sum += term / (2 * n + 1);
    }
    return 1.0L - 2.0L / std::sqrt(std::acos(-1.0L)) * sum;
}

long double survival_oracle(long double x) { return 0.5L * erfc_series(x / std::sqrt(2.0L)); }

// Asymptotic expansion with five correction terms; accurate to ~1e-14 for x >= 30.
double log_survival_asymptotic(double x)
{
    const double r = 1.0 / (x * x);
    const double series = 1.0 - r + 3 * r * r - 15 * r * r * r + 105 * r * r * r * r -
                          945 * r * r * r * r * r;
    return -0.5 * x * x - 0.5 * std::log(2.0 * M_PI) - std::log(x) + std::log(series);
}

// Simpson quadrature of E{exp(-S) I(S > 0)}, S ~ N(-n eta^2 / 2, n eta^2).
double b_tilde_quadrature(long n, double eta)
{
    const double mean = -0.5 * n * eta * eta;
    const double sd = eta * std::sqrt(static_cast<double>(n));
    const double hi = 60.0;
    const int steps = 200000;
    const double h = hi / steps;
    auto f = [&](double s) {
        const double z = (s - mean) / sd;
        return std::exp(-s - 0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
    };
    double acc = f(0.0) + f(hi);
    for (int i = 1; i < steps; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

} // namespace

TEST(StdNormalSurvival, KnownValues)
{
    EXPECT_DOUBLE_EQ(std_normal_survival(0.0), 0.5);
    EXPECT_NEAR(std_normal_survival(1.96), 0.024998, 5e-7);
}

TEST(StdNormalSurvival, AgreesWithSeriesOracle)
{
    for (double x = -3.0; x <= 3.0; x += 0.125) {
        const double oracle = static_cast<double>(survival_oracle(x));
        EXPECT_NEAR(std_normal_survival(x) / oracle, 1.0, 1e-12) << "x=" << x;
    }
}

TEST(StdNormalSurvival, Reflection)
{
    for (double x : {0.1, 0.7, 1.96, 4.0, 7.5}) {
        EXPECT_NEAR(std_normal_survival(x) + std_normal_survival(-x), 1.0, 1e-15);
    }
}

TEST(StdNormalSurvival, RejectsNonFinite)
{
    EXPECT_THROW(std_normal_survival(std::numeric_limits<double>::quiet_NaN()), DomainError);
    EXPECT_THROW(log_std_normal_survival(std::numeric_limits<double>::infinity()), DomainError);
}

TEST(LogStdNormalSurvival, KnownValues)
{
    EXPECT_DOUBLE_EQ(log_std_normal_survival(0.0).value, std::log(0.5));
    // 40-digit reference value; the commonly quoted -707.670 is a loose rounding of it.
    EXPECT_NEAR(log_std_normal_survival(37.5).value, -707.66898931750719, 1e-9);
    EXPECT_NEAR(log_std_normal_survival(37.5).value, -707.670, 2e-3);
}

TEST(LogStdNormalSurvival, MatchesAsymptoticOracleFarOut)
{
    for (double x : {30.0, 37.5, 50.0, 100.0, 1000.0}) {
        const double oracle = log_survival_asymptotic(x);
        EXPECT_NEAR(log_std_normal_survival(x).value / oracle, 1.0, 1e-12) << "x=" << x;
    }
}

TEST(LogStdNormalSurvival, ContinuousAcrossBranchSwitch)
{
    for (double x = 7.0; x <= 9.0; x += 0.05) {
        const double direct = std::log(0.5 * std::erfc(x / std::sqrt(2.0)));
        EXPECT_NEAR(log_std_normal_survival(x).value, direct, 1e-10 * std::abs(direct)) << x;
    }
}

TEST(LogStdNormalSurvival, NegativeArgumentsNearZero)
{
    EXPECT_NEAR(log_std_normal_survival(-10.0).value, std::log1p(-std_normal_survival(10.0)), 1e-20);
    EXPECT_LT(log_std_normal_survival(-1.0).value, 0.0);
}

TEST(LogBTilde, ModerateValueAgainstQuadrature)
{
    const double expected = std::log(std::exp(4.0) * std_normal_survival(3.0));
    EXPECT_NEAR(log_b_tilde(1, 2.0).value, expected, 1e-12);
    EXPECT_NEAR(std::exp(log_b_tilde(1, 2.0).value), 0.073702, 1e-6);
    for (long n : {1L, 2L, 5L}) {
        for (double eta : {0.5, 1.0, 2.0}) {
            const double q = b_tilde_quadrature(n, eta);
            EXPECT_NEAR(std::exp(log_b_tilde(n, eta).value) / q, 1.0, 1e-8)
                << "n=" << n << " eta=" << eta;
        }
    }
}

TEST(LogBTilde, NoOverflowInLogDomain)
{
    const auto v = log_b_tilde(100, 2.5);
    EXPECT_TRUE(std::isfinite(v.value));
    EXPECT_NEAR(v.value, 625.0 + log_survival_asymptotic(37.5), 1e-9);
}
