#pragma once

#include <Eigen/Dense>

namespace fosnet {

// Natural cubic spline through (x_i, y_i). Exact at the nodes; second
// derivative available for curvature penalties on interpolated curves.
class CubicSpline {
public:
    CubicSpline(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

    double value(double t) const;
    double second_derivative(double t) const;

private:
    Eigen::Index segment(double t) const;

    Eigen::VectorXd x_, y_, m_;  // m_ = second derivatives at the nodes
};

// Interpolate each row of `rows` (sampled on from_grid) at `times`.
Eigen::MatrixXd interpolate_rows(const Eigen::MatrixXd& rows, const Eigen::VectorXd& from_grid,
                                 const Eigen::VectorXd& times);

}  // namespace fosnet
