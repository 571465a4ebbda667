#include <algorithm>
#include "fosnet/network.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "fosnet/bspline.hpp"
#include "fosnet/rng.hpp"

namespace fosnet {

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity") return Activation::Identity;
    throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    return "identity";
}

namespace {

Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& z) {
    switch (a) {
        case Activation::Relu: return z.cwiseMax(0.0);
        case Activation::Sigmoid: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
        case Activation::Tanh: return z.array().tanh().matrix();
        case Activation::Identity: return z;
    }
    return z;
}

// derivative as a function of the pre-activation z
Eigen::MatrixXd activation_derivative(Activation a, const Eigen::MatrixXd& z) {
    switch (a) {
        case Activation::Relu:
            return (z.array() > 0.0).cast<double>().matrix();
        case Activation::Sigmoid: {
            const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
            return (s * (1.0 - s)).matrix();
        }
        case Activation::Tanh: {
            const Eigen::ArrayXXd t = z.array().tanh();
            return (1.0 - t * t).matrix();
        }
        case Activation::Identity:
            return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

}  // namespace

Eigen::Index Network::parameter_count() const {
    Eigen::Index count = 0;
    for (const auto& layer : layers) count += layer.weights.size() + layer.bias.size();
    return count;
}

void Network::validate() const {
    if (layers.empty()) throw std::invalid_argument("network: no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.bias.size() != layer.weights.rows())
            throw std::invalid_argument("network: bias/weight dimension mismatch");
        if (l > 0 && layer.weights.cols() != layers[l - 1].weights.rows())
            throw std::invalid_argument(
                fmt::format("network: layer {} fan_in {} != previous fan_out {}", l,
                            layer.weights.cols(), layers[l - 1].weights.rows()));
        if (!layer.weights.allFinite() || !layer.bias.allFinite())
            throw std::invalid_argument("network: non-finite parameter");
    }
}

Network init_network(const std::vector<int>& layer_sizes,
                     const std::vector<Activation>& activations, std::uint64_t seed) {
    if (layer_sizes.size() < 3)
        throw std::invalid_argument("init_network: need at least one hidden layer");
    if (activations.size() != layer_sizes.size() - 1)
        throw std::invalid_argument(fmt::format(
            "init_network: {} activations for {} layers", activations.size(),
            layer_sizes.size() - 1));
    for (const int s : layer_sizes)
        if (s <= 0) throw std::invalid_argument("init_network: layer sizes must be positive");

    Rng rng(seed);
    Network net;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        Layer layer;
        layer.weights.resize(fan_out, fan_in);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = rng.uniform(-bound, bound);
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        layer.activation = activations[l];
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& inputs) {
    if (inputs.cols() != net.input_dim())
        throw std::invalid_argument(fmt::format("forward: input width {} != network fan_in {}",
                                                inputs.cols(), net.input_dim()));
    Eigen::MatrixXd a = inputs;
    for (const auto& layer : net.layers) {
        const Eigen::MatrixXd z =
            (a * layer.weights.transpose()).rowwise() + layer.bias.transpose();
        a = apply_activation(layer.activation, z);
    }
    return a;
}

std::pair<double, Gradients> loss_and_grad(const Network& net, const Eigen::MatrixXd& inputs,
                                           const Eigen::MatrixXd& targets, const LossSpec& spec) {
    const auto n = inputs.rows();
    if (n == 0) throw std::invalid_argument("loss_and_grad: empty batch");
    const bool response_kind = spec.kind != LossKind::CoefMse;
    if (response_kind && spec.basis_matrix.size() == 0)
        throw std::invalid_argument("loss_and_grad: response-space loss requires basis_matrix");
    if (spec.kind == LossKind::ResponseMseCurvature && spec.deriv_matrix.size() == 0)
        throw std::invalid_argument("loss_and_grad: curvature penalty requires deriv_matrix");
    if (spec.lambda < 0.0) throw std::invalid_argument("loss_and_grad: lambda must be >= 0");
    if (spec.mask.size() != 0 && (spec.mask.rows() != n || spec.mask.cols() != targets.cols()))
        throw std::invalid_argument("loss_and_grad: mask shape mismatch");

    // forward with caches
    const auto depth = net.layers.size();
    std::vector<Eigen::MatrixXd> pre(depth), act(depth + 1);
    act[0] = inputs;
    for (std::size_t l = 0; l < depth; ++l) {
        pre[l] = (act[l] * net.layers[l].weights.transpose()).rowwise() +
                 net.layers[l].bias.transpose();
        act[l + 1] = apply_activation(net.layers[l].activation, pre[l]);
    }
    const Eigen::MatrixXd& outputs = act[depth];  // n x K

    double loss = 0.0;
    Eigen::MatrixXd d_outputs;  // dL/d(outputs)

    if (spec.kind == LossKind::CoefMse) {
        if (targets.rows() != n || targets.cols() != outputs.cols())
            throw std::invalid_argument("loss_and_grad: target shape mismatch for CoefMse");
        const Eigen::MatrixXd resid = outputs - targets;
        loss = resid.squaredNorm() / static_cast<double>(n);
        d_outputs = 2.0 / static_cast<double>(n) * resid;
    } else {
        if (outputs.cols() != spec.basis_matrix.rows())
            throw std::invalid_argument(fmt::format(
                "loss_and_grad: network output width {} != basis rows {}", outputs.cols(),
                spec.basis_matrix.rows()));
        if (targets.rows() != n || targets.cols() != spec.basis_matrix.cols())
            throw std::invalid_argument("loss_and_grad: target shape mismatch for response loss");

        Eigen::MatrixXd predicted = outputs * spec.basis_matrix;  // n x m
        if (spec.mean_curve.size() != 0) predicted.rowwise() += spec.mean_curve.transpose();
        Eigen::MatrixXd resid = predicted - targets;
        if (spec.mask.size() != 0) resid = resid.cwiseProduct(spec.mask);
        loss = resid.squaredNorm() / static_cast<double>(n);
        d_outputs = 2.0 / static_cast<double>(n) * (resid * spec.basis_matrix.transpose());

        if (spec.kind == LossKind::ResponseMseCurvature) {
            const auto q = spec.deriv_matrix.cols();
            if (q < 2) throw std::invalid_argument("loss_and_grad: need Q >= 2 quadrature points");
            // quadrature skips the first point, matching the q=2..Q sum
            const Eigen::MatrixXd d2 = spec.deriv_matrix.rightCols(q - 1);  // K x (Q-1)
            const double weight =
                spec.lambda * spec.domain_length / static_cast<double>(q - 1);
            const Eigen::MatrixXd curve_d2 = outputs * d2;  // n x (Q-1)
            loss += weight * curve_d2.squaredNorm() / static_cast<double>(n);
            d_outputs += 2.0 * weight / static_cast<double>(n) * (curve_d2 * d2.transpose());
        } else if (spec.kind == LossKind::ResponseMseCoeffDiff) {
            const Eigen::MatrixXd diff_op = second_difference_matrix(
                static_cast<int>(outputs.cols()));  // (K-2) x K
            const Eigen::MatrixXd diffs = outputs * diff_op.transpose();  // n x (K-2)
            loss += spec.lambda * diffs.squaredNorm() / static_cast<double>(n);
            d_outputs += 2.0 * spec.lambda / static_cast<double>(n) * (diffs * diff_op);
        }
    }

    if (!std::isfinite(loss))
        throw std::runtime_error("loss_and_grad: loss is non-finite");

    // backpropagation through the affine chain
    Gradients grads;
    grads.weights.resize(depth);
    grads.bias.resize(depth);
    Eigen::MatrixXd delta = d_outputs;
    for (std::size_t l = depth; l-- > 0;) {
        delta = delta.cwiseProduct(activation_derivative(net.layers[l].activation, pre[l]));
        grads.weights[l] = delta.transpose() * act[l];
        grads.bias[l] = delta.colwise().sum().transpose();
        if (l > 0) delta = delta * net.layers[l].weights;
    }
    return {loss, std::move(grads)};
}

namespace {

LossSpec batch_spec(const LossSpec& spec, const std::vector<Eigen::Index>& rows) {
    LossSpec out = spec;
    if (spec.mask.size() != 0) {
        out.mask.resize(static_cast<Eigen::Index>(rows.size()), spec.mask.cols());
        for (std::size_t r = 0; r < rows.size(); ++r)
            out.mask.row(static_cast<Eigen::Index>(r)) = spec.mask.row(rows[r]);
    }
    return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
    return out;
}

}  // namespace

TrainResult train(Network net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                  const LossSpec& spec, const TrainOptions& options) {
    if (options.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (options.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
    if (!(options.learning_rate > 0.0))
        throw std::invalid_argument("train: learning rate must be positive");
    net.validate();

    const auto n = inputs.rows();
    const auto depth = net.layers.size();

    // Adam state
    std::vector<Eigen::MatrixXd> mw(depth), vw(depth);
    std::vector<Eigen::VectorXd> mb(depth), vb(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        mw[l] = Eigen::MatrixXd::Zero(net.layers[l].weights.rows(), net.layers[l].weights.cols());
        vw[l] = mw[l];
        mb[l] = Eigen::VectorXd::Zero(net.layers[l].bias.size());
        vb[l] = mb[l];
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    Rng shuffle_rng = Rng(options.seed).substream("shuffle");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    TrainResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(options.epochs));
    double last_finite_loss = std::numeric_limits<double>::quiet_NaN();

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (Eigen::Index start = 0; start < n; start += options.batch_size) {
            const auto end = std::min<Eigen::Index>(start + options.batch_size, n);
            std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + end);
            // shuffle decides membership only; canonical row order inside a
            // batch keeps the floating-point summation order data-defined
            // (and makes a full-size batch an exact steepest-descent step)
            std::sort(rows.begin(), rows.end());
            const Eigen::MatrixXd bx = take_rows(inputs, rows);
            const Eigen::MatrixXd bt = take_rows(targets, rows);
            const LossSpec bspec = batch_spec(spec, rows);

            Gradients grads;
            try {
                grads = loss_and_grad(net, bx, bt, bspec).second;
            } catch (const std::runtime_error&) {
                throw std::runtime_error(fmt::format(
                    "train: loss became non-finite at epoch {} (last full-data loss {})",
                    epoch + 1, last_finite_loss));
            }

            if (options.optimizer == Optimizer::Sgd) {
                for (std::size_t l = 0; l < depth; ++l) {
                    net.layers[l].weights -= options.learning_rate * grads.weights[l];
                    net.layers[l].bias -= options.learning_rate * grads.bias[l];
                }
            } else {
                ++step;
                const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                for (std::size_t l = 0; l < depth; ++l) {
                    mw[l] = beta1 * mw[l] + (1.0 - beta1) * grads.weights[l];
                    vw[l] = beta2 * vw[l].array().matrix() +
                            (1.0 - beta2) * grads.weights[l].array().square().matrix();
                    mb[l] = beta1 * mb[l] + (1.0 - beta1) * grads.bias[l];
                    vb[l] = beta2 * vb[l].array().matrix() +
                            (1.0 - beta2) * grads.bias[l].array().square().matrix();
                    net.layers[l].weights.array() -=
                        options.learning_rate * (mw[l].array() / bc1) /
                        ((vw[l].array() / bc2).sqrt() + eps);
                    net.layers[l].bias.array() -=
                        options.learning_rate * (mb[l].array() / bc1) /
                        ((vb[l].array() / bc2).sqrt() + eps);
                }
            }
        }
        double epoch_loss;
        try {
            epoch_loss = loss_and_grad(net, inputs, targets, spec).first;
        } catch (const std::runtime_error&) {
            throw std::runtime_error(fmt::format(
                "train: loss became non-finite at epoch {} (last full-data loss {})",
                epoch + 1, last_finite_loss));
        }
        last_finite_loss = epoch_loss;
        result.loss_trace.push_back(epoch_loss);
    }
    result.net = std::move(net);
    return result;
}

nlohmann::json network_to_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json j;
        j["fan_out"] = layer.weights.rows();
        j["fan_in"] = layer.weights.cols();
        j["activation"] = to_string(layer.activation);
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(layer.weights.size()));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                w.push_back(layer.weights(r, c));  // row-major
        j["weights"] = std::move(w);
        j["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
        layers.push_back(std::move(j));
    }
    return nlohmann::json{{"layers", std::move(layers)}};
}

Network network_from_json(const nlohmann::json& j) {
    Network net;
    for (const auto& lj : j.at("layers")) {
        Layer layer;
        const auto fan_out = lj.at("fan_out").get<Eigen::Index>();
        const auto fan_in = lj.at("fan_in").get<Eigen::Index>();
        layer.activation = activation_from_string(lj.at("activation").get<std::string>());
        const auto w = lj.at("weights").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != fan_out * fan_in)
            throw std::invalid_argument("network_from_json: weight count mismatch");
        layer.weights.resize(fan_out, fan_in);
        for (Eigen::Index r = 0; r < fan_out; ++r)
            for (Eigen::Index c = 0; c < fan_in; ++c)
                layer.weights(r, c) = w[static_cast<std::size_t>(r * fan_in + c)];
        const auto b = lj.at("bias").get<std::vector<double>>();
        layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

}  // namespace fosnet
