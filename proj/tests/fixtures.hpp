#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "changepoint/model.hpp"

namespace fixtures {

// Printed segment means and pooled covariance of the Feb, Jul, Aug series.
inline Eigen::Vector3d appendix_mu1() { return {6.738, 7.137, 6.725}; }
inline Eigen::Vector3d appendix_mu2() { return {7.383, 7.483, 7.166}; }
inline Eigen::Matrix3d appendix_sigma()
{
    Eigen::Matrix3d s;
    s << 0.365, -0.032, -0.029,
        -0.032, 0.161, 0.104,
        -0.029, 0.104, 0.211;
    return s;
}

inline Eigen::MatrixXd gaussian_matrix(long rows, long cols, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = z(rng);
    return m;
}

// Rows 1..split have mean mu1 and rows split+1..n mean mu2 exactly; the pooled
// scatter about the segment means divided by n equals sigma exactly.
inline changepoint::model::Dataset engineered_dataset(long n, long split, const Eigen::VectorXd& mu1,
                                                      const Eigen::VectorXd& mu2,
                                                      const Eigen::MatrixXd& sigma, std::uint64_t seed)
{
    const long d = mu1.size();
    Eigen::MatrixXd e = gaussian_matrix(n, d, seed);
    const Eigen::RowVectorXd m1 = e.topRows(split).colwise().mean();
    const Eigen::RowVectorXd m2 = e.bottomRows(n - split).colwise().mean();
    e.topRows(split).rowwise() -= m1;
    e.bottomRows(n - split).rowwise() -= m2;
    const Eigen::MatrixXd scatter = e.transpose() * e / double(n);
    const Eigen::MatrixXd ls = scatter.llt().matrixL();
    const Eigen::MatrixXd lt = sigma.llt().matrixL();
    // e * ls^{-T} has identity scatter; right-multiplying by lt^T gives sigma.
    const Eigen::MatrixXd white = ls.triangularView<Eigen::Lower>().solve(e.transpose()).transpose();
    Eigen::MatrixXd y = white * lt.transpose();
    y.topRows(split).rowwise() += mu1.transpose();
    y.bottomRows(n - split).rowwise() += mu2.transpose();

    changepoint::model::Dataset data;
    data.series = y;
    for (long j = 0; j < d; ++j) data.labels.push_back("c" + std::to_string(j + 1));
    return data;
}

} // namespace fixtures
