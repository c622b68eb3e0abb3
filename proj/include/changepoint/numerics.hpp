#pragma once

namespace changepoint::numerics {

/// Logarithm of a probability or of a positive weight.
struct LogProb {
    double value = 0.0;

    friend bool operator==(const LogProb&, const LogProb&) = default;
};

/// Upper tail 1 - Phi(x) of the standard normal.
/// Throws DomainError for non-finite x.
double std_normal_survival(double x);

/// log(1 - Phi(x)), finite for every finite x. For x >= 8 the value comes
/// from the Mills-ratio continued fraction, so it stays accurate far past
/// the point where 1 - Phi(x) underflows.
LogProb log_std_normal_survival(double x);

/// log of the tilted one-sided weight E{exp(-S_n) I(S_n > 0)} for the
/// Gaussian log-likelihood-ratio walk with drift -eta^2/2 and variance eta^2
/// per step: n*eta^2 + log(1 - Phi(3*eta*sqrt(n)/2)).
LogProb log_b_tilde(long n, double eta);

} // namespace changepoint::numerics
