#pragma once

#include <Eigen/Dense>

namespace fosnet {

// Clamped B-spline basis: `order`-fold repeated boundary knots and equally
// spaced interior knots. num_basis = (#interior knots) + order.
struct BasisSystem {
    int order = 4;
    Eigen::VectorXd knots;  // length num_basis + order, nondecreasing
    int num_basis = 0;
    double t_min = 0.0;
    double t_max = 1.0;
};

BasisSystem make_basis(double t_min, double t_max, int num_basis, int order = 4);

// (k, j) = theta_k(times[j]). Right-continuous convention; the last basis
// function takes value 1 at t_max.
Eigen::MatrixXd eval_matrix(const BasisSystem& bs, const Eigen::VectorXd& times);

// d-th derivative matrix, d in {1, 2}; requires order > d.
Eigen::MatrixXd deriv_matrix(const BasisSystem& bs, const Eigen::VectorXd& times, int d);

// Unweighted quadrature sum over Q equally spaced points t_1..t_Q:
//   sum_{q=2..Q} ( sum_k coeffs_k theta_k''(t_q) )^2
// The lambda * T / (Q-1) weight is applied by the loss layer.
double curvature_penalty(const BasisSystem& bs, const Eigen::VectorXd& coeffs, int quad_points);

// sum_{k=3..K} (c_k - 2 c_{k-1} + c_{k-2})^2
double coeff_diff_penalty(const Eigen::VectorXd& coeffs);

// (K-2) x K second-difference operator D with (D c)_k = c_{k+2} - 2 c_{k+1} + c_k.
Eigen::MatrixXd second_difference_matrix(int num_basis);

// Greville abscissae (knot averages); affine coefficient sequences along
// these sites reproduce affine curves.
Eigen::VectorXd greville_abscissae(const BasisSystem& bs);

}  // namespace fosnet
