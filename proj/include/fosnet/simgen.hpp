#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>

#include <nlohmann/json_fwd.hpp>

#include "fosnet/dataset.hpp"
#include "fosnet/network.hpp"

namespace fosnet {

struct SimConfig {
    int design = 1;
    int n_subjects = 2000;
    int n_predictors = 20;
    int grid_size = 40;
    double noise_var = 2.0;
    std::uint64_t seed = 0;
};

// Everything the generator drew, kept for oracle tests and scatter exports.
struct SimTruth {
    Eigen::MatrixXd noiseless;       // N x m, Y before observation noise
    Eigen::MatrixXd zeta;            // N x K coefficient values
    Eigen::MatrixXd psi;             // K x m random curves on the grid
    Eigen::MatrixXd beta;            // K x 13 curve coefficients (designs 2-4)
    std::map<int, Eigen::VectorXd> poly_coeffs;  // 1-based k -> ascending coefficients
    Eigen::MatrixXd uniform_bounds;  // K x 2 per-coordinate (a, b)
    std::optional<Network> generator_net;  // design 3
};

// Scalar predictors mapped through design-specific coefficient functions to
// linear combinations of random B-spline curves, observed with iid Gaussian
// noise on an equally spaced grid over [0, 1].
std::pair<FunctionalDataset, SimTruth> generate(const SimConfig& cfg);

nlohmann::json truth_to_json(const SimTruth& truth);

}  // namespace fosnet
