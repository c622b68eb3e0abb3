#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "changepoint/exactdist.hpp"
#include "changepoint/model.hpp"

namespace changepoint::montecarlo {

/// Distribution over integer offsets.
using Distribution = std::map<long, double>;

enum class ErrorFamily { gaussian, student_t, chi_square };

std::string to_string(ErrorFamily family);
ErrorFamily parse_family(const std::string& name);

struct SimConfig {
    long n = 100;
    long tau = 50;
    double eta = 1.0;
    long dims = 1;
    ErrorFamily family = ErrorFamily::gaussian;
    /// Degrees of freedom for student_t and chi_square noise.
    double nu = 0.0;
    bool known = true;
    bool profile = false;
    bool cobb = false;
    long cobb_delta = 15;
    long replications = 1000;
    std::uint64_t master_seed = 0;
};

void validate(const SimConfig& config);

/// Seed of replication `rep_index`, a pure function of (master_seed, rep_index).
std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t rep_index);

/// Rows 1..tau have mean 0, rows tau+1..n mean eta along the first
/// coordinate; noise is iid with unit variance in every coordinate.
model::Dataset generate_sequence(const SimConfig& config, long rep_index);

struct ModeSummary {
    std::string mode;
    /// Relative frequency of tau_hat - tau (probability-weighted for Cobb).
    Distribution empirical;
    /// Raw tallies behind `empirical`.
    Distribution counts;
    /// Sum of weights, i.e. successful replications.
    double weight = 0.0;
    long failures = 0;
    double tv = 0.0;
    /// Expected TV from sampling noise alone if the theoretical law were exact.
    double tv_noise = 0.0;
    double bias = 0.0;
    double mse = 0.0;
    /// Cobb only: mean conditional probability placed on the true change point
    /// (centred offset 0); zero for windows that miss it.
    double mean_mass_at_zero = 0.0;
};

struct SimulationReport {
    SimConfig config;
    std::vector<ModeSummary> modes;
    std::string seed_scheme;
    std::string standardization;
};

/// Runs every requested estimator on `replications` seeded sequences.
/// Replications are aggregated in fixed blocks reduced in index order, so the
/// report does not depend on the number of threads. Throws DegenerateDataError
/// when more than 0.1% of replications fail.
SimulationReport run_study(const SimConfig& config, const exactdist::Pmf& theoretical);

/// Half the L1 distance over the union of supports.
double tv_distance(const Distribution& p, const Distribution& q);

Distribution to_distribution(const exactdist::Pmf& pmf);

/// Expected TV between an N-sample empirical law and `p` when `p` is exact:
/// sum_k sqrt(2 p_k (1 - p_k) / (pi N)) / 2.
double expected_sampling_tv(const Distribution& p, double replications);

struct EmpiricalPmf {
    Distribution probs;
    long replications = 0;
    long horizon = 0;
};

/// Smallest horizon h with 4 exp(-eta^2 h / 8) < 1e-6.
long default_oracle_horizon(double eta);

/// Argmax of the two-sided Gaussian log-likelihood-ratio walk, both arms
/// with steps -eta^2/2 + eta Z, simulated to `horizon`. Ties go to the
/// smallest |k|.
EmpiricalPmf oracle_xi_infinity(double eta, long horizon, long replications, std::uint64_t seed);

struct LadderEstimates {
    /// Index k = 0..nmax; entry 0 is the convention q_0 = q~_0 = 1.
    std::vector<double> q;
    std::vector<double> q_se;
    std::vector<double> q_tilde;
    std::vector<double> q_tilde_se;
    long replications = 0;
};

/// Monte Carlo estimates of P(T1- > k) and E{exp(-S_k) I(T1- > k)}.
LadderEstimates ladder_oracle(double eta, long nmax, long replications, std::uint64_t seed);

/// Worker count from CHANGEPOINT_THREADS (0 or unset: all hardware threads).
unsigned worker_count();

} // namespace changepoint::montecarlo
