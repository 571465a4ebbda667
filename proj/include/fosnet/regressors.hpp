#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fosnet/bspline.hpp"
#include "fosnet/dataset.hpp"
#include "fosnet/fpca.hpp"
#include "fosnet/network.hpp"

namespace fosnet {

enum class Variant { Nnbb, Nnss, Nnbr, Nnsr, Fos };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

enum class PenaltyKind { None, Curvature, CoeffDiff };

PenaltyKind penalty_from_string(const std::string& name);
std::string to_string(PenaltyKind p);

struct FitConfig {
    int num_basis = 13;                // coefficient variants and FoS
    int basis_order = 4;
    double tau = 0.99;                 // score variants
    std::vector<int> hidden = {50, 30};
    Activation hidden_activation = Activation::Relu;
    Activation output_activation = Activation::Identity;
    Optimizer optimizer = Optimizer::Adam;
    double learning_rate = 1e-3;
    int epochs = 500;
    int batch_size = 32;
    PenaltyKind penalty = PenaltyKind::None;
    double lambda = 0.0;
    int quad_points = 101;
    bool standardize = false;          // z-score predictors before the network
    std::uint64_t seed = 0;
};

struct TrainedRegressor {
    Variant variant = Variant::Fos;
    std::optional<Network> net;
    std::optional<Eigen::MatrixXd> fos_coeffs;  // (P+1) x K_b, intercept row first
    std::optional<BasisSystem> basis;
    std::optional<FpcaModel> fpca;
    FitConfig config;
    Eigen::VectorXd x_mean, x_scale;   // standardization, empty when disabled
    std::vector<double> loss_trace;
};

TrainedRegressor fit(Variant variant, const FunctionalDataset& train, const FitConfig& config);

// Curve values at the requested times (n x len(times)). Times must lie
// within the training domain.
Eigen::MatrixXd predict(const TrainedRegressor& model, const Eigen::MatrixXd& x_new,
                        const Eigen::VectorXd& times);

nlohmann::json regressor_to_json(const TrainedRegressor& model);
TrainedRegressor regressor_from_json(const nlohmann::json& j);

}  // namespace fosnet
