#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fosnet {

enum class Activation { Relu, Sigmoid, Tanh, Identity };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

struct Layer {
    Eigen::MatrixXd weights;  // fan_out x fan_in
    Eigen::VectorXd bias;     // fan_out
    Activation activation = Activation::Identity;
};

struct Network {
    std::vector<Layer> layers;

    Eigen::Index input_dim() const { return layers.front().weights.cols(); }
    Eigen::Index output_dim() const { return layers.back().weights.rows(); }
    Eigen::Index parameter_count() const;
    void validate() const;  // dimension chaining, finiteness
};

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases, seeded.
Network init_network(const std::vector<int>& layer_sizes,
                     const std::vector<Activation>& activations, std::uint64_t seed);

// Row-per-subject forward pass: n x P in, n x K out.
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& inputs);

enum class LossKind { CoefMse, ResponseMse, ResponseMseCurvature, ResponseMseCoeffDiff };

// Loss configuration. Response-space kinds map network outputs through
// basis_matrix (B-spline evaluation matrix or FPCA eigenfunctions) before
// comparing to observed values; mean_curve, when nonempty, is added to the
// mapped response. mask (when nonempty) zeroes unobserved subject-time pairs.
struct LossSpec {
    LossKind kind = LossKind::CoefMse;
    Eigen::MatrixXd basis_matrix;    // K x m
    Eigen::VectorXd mean_curve;      // m, optional (size 0 = absent)
    Eigen::MatrixXd mask;            // n x m, optional
    double lambda = 0.0;
    int quad_points = 101;
    Eigen::MatrixXd deriv_matrix;    // K x Q second derivatives (curvature kind)
    double domain_length = 1.0;      // T in the lambda*T/(Q-1) weight
};

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> bias;
};

// Exact loss value and reverse-mode gradient for every parameter. The loss
// carries the 1/n factor; penalized kinds add lambda*T/(Q-1) (curvature) or
// lambda (coefficient differences) times the per-subject penalty sum.
std::pair<double, Gradients> loss_and_grad(const Network& net, const Eigen::MatrixXd& inputs,
                                           const Eigen::MatrixXd& targets, const LossSpec& spec);

enum class Optimizer { Sgd, Adam };

struct TrainOptions {
    Optimizer optimizer = Optimizer::Adam;
    double learning_rate = 1e-3;
    int epochs = 500;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

struct TrainResult {
    Network net;
    std::vector<double> loss_trace;  // full-data loss after each epoch
};

// Seeded minibatch training; the final short batch is used, not dropped.
// Adam uses beta1=0.9, beta2=0.999, eps=1e-8.
TrainResult train(Network net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                  const LossSpec& spec, const TrainOptions& options);

nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

}  // namespace fosnet
