#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace changepoint::model {

/// Time-ordered observations: one row per time point, one column per variable.
struct Dataset {
    Eigen::MatrixXd series;
    std::vector<std::string> labels;
    /// Calendar label of row 1 (e.g. a year), when known.
    std::optional<long> time_origin;

    long rows() const { return static_cast<long>(series.rows()); }
    long dims() const { return static_cast<long>(series.cols()); }
};

/// Checks n >= 4, d >= 1, matching labels and finite entries.
void validate(const Dataset& data);

/// Keeps the named columns, in the given order.
Dataset select_columns(const Dataset& data, const std::vector<std::string>& columns);

/// Entrywise natural log. Throws DomainError naming the first nonpositive entry.
Dataset log_transform(const Dataset& data);

/// Header row of labels, then one row per time point. A leading column
/// named `time` (any case) is removed from the series and its first value
/// becomes the time origin.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);

struct UnivariateChange {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double sigma = 1.0;
};

struct MultivariateChange {
    Eigen::VectorXd mu1;
    Eigen::VectorXd mu2;
    Eigen::MatrixXd sigma;
};

/// Standardized change magnitude together with the parameters it came from.
struct ChangeModel {
    double eta = 0.0;
    std::variant<UnivariateChange, MultivariateChange> origin;

    long dims() const;
};

/// eta = |mu1 - mu2| / sigma.
ChangeModel standardized_change_univariate(double mu1, double mu2, double sigma);

/// eta = sqrt((mu2 - mu1)' Sigma^{-1} (mu2 - mu1)) through a Cholesky solve.
/// Sigma within 1e-10 of symmetric is symmetrized; beyond that it is rejected.
ChangeModel standardized_change_multivariate(const Eigen::VectorXd& mu1,
                                             const Eigen::VectorXd& mu2,
                                             const Eigen::MatrixXd& sigma);

inline constexpr double kSymmetryTolerance = 1e-10;

/// Cholesky factor of a covariance matrix after the symmetry check above.
/// Throws FactorizationError when the matrix is not positive definite.
Eigen::LLT<Eigen::MatrixXd> factor_covariance(const Eigen::MatrixXd& sigma);

/// log|A| from a successful Cholesky factor.
double log_determinant(const Eigen::LLT<Eigen::MatrixXd>& factor);

} // namespace changepoint::model
