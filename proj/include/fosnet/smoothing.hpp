#pragma once

#include <Eigen/Dense>

#include "fosnet/bspline.hpp"
#include "fosnet/dataset.hpp"

namespace fosnet {

struct CoefficientFit {
    Eigen::MatrixXd coeffs;  // N x K_b, one row per subject
    BasisSystem basis;
    double sse = 0.0;        // masked residual sum over all subjects
};

// Per-subject least squares of observed values on the basis, solved by
// normal equations with a 1e-10 ridge jitter on the Gram diagonal. Every
// subject must have at least num_basis observed points.
CoefficientFit fit_coefficients(const FunctionalDataset& ds, const BasisSystem& bs);

}  // namespace fosnet
