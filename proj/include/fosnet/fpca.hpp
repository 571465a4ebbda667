#pragma once

#include <Eigen/Dense>

#include "fosnet/dataset.hpp"

namespace fosnet {

// Grid-sampled functional PCA model. Eigenfunctions are L2-normalized under
// trapezoid quadrature on `grid`; eigenvalues are positive and nonincreasing.
struct FpcaModel {
    Eigen::VectorXd mean;             // m
    Eigen::MatrixXd eigenfunctions;   // K_tau x m
    Eigen::VectorXd eigenvalues;      // K_tau
    int num_components = 0;           // K_tau
    double tau = 0.0;
    Eigen::VectorXd grid;
};

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid);

// Mean/covariance on the grid, quadrature-weighted eigendecomposition,
// truncation at the smallest K_tau explaining fraction tau of total variance.
// Irregular datasets are first smoothed onto the union grid.
FpcaModel fit_fpca(const FunctionalDataset& ds, double tau);

// Trapezoid quadrature of centered values against each eigenfunction. N x K_tau.
Eigen::MatrixXd scores(const FpcaModel& model, const FunctionalDataset& ds);

// mean + scores * eigenfunctions. N x m.
Eigen::MatrixXd reconstruct(const FpcaModel& model, const Eigen::MatrixXd& score_matrix);

}  // namespace fosnet
