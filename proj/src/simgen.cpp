#include "fosnet/simgen.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "fosnet/bspline.hpp"
#include "fosnet/rng.hpp"
#include "json_util.hpp"

namespace fosnet {

namespace {

bool contains(const std::vector<int>& v, int k) {
    for (const int x : v)
        if (x == k) return true;
    return false;
}

double eval_poly(const Eigen::VectorXd& coeffs, double x) {
    double acc = 0.0;
    for (Eigen::Index d = coeffs.size() - 1; d >= 0; --d) acc = acc * x + coeffs(d);
    return acc;
}

Network random_sigmoid_net(int width, Rng rng) {
    const std::vector<int> sizes = {width, 16, 16, 16, width};
    Network net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.weights.resize(sizes[l + 1], sizes[l]);
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                layer.weights(r, c) = rng.normal();
        layer.bias = Eigen::VectorXd::Zero(sizes[l + 1]);
        layer.activation = Activation::Sigmoid;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace

std::pair<FunctionalDataset, SimTruth> generate(const SimConfig& cfg) {
    if (cfg.design < 1 || cfg.design > 4)
        throw std::invalid_argument(fmt::format("generate: invalid design {}", cfg.design));
    if (cfg.n_subjects < 1) throw std::invalid_argument("generate: need at least one subject");
    const int k_pred = cfg.n_predictors;
    if (cfg.design == 1 && k_pred < 5)
        throw std::invalid_argument("generate: design 1 needs at least 5 predictors");
    if (k_pred < 1 || cfg.grid_size < 2)
        throw std::invalid_argument("generate: invalid predictor or grid count");

    const Rng root(cfg.seed);
    const int n = cfg.n_subjects;
    const int m = cfg.grid_size;

    Eigen::VectorXd grid(m);
    for (int j = 0; j < m; ++j) grid(j) = static_cast<double>(j) / (m - 1);

    SimTruth truth;

    // per-coordinate uniform ranges, drawn once per dataset
    Rng bounds_rng = root.substream("bounds");
    truth.uniform_bounds.resize(k_pred, 2);
    for (int k = 0; k < k_pred; ++k) {
        truth.uniform_bounds(k, 0) = static_cast<double>(bounds_rng.uniform_int(-4, 0));
        truth.uniform_bounds(k, 1) = static_cast<double>(bounds_rng.uniform_int(3, 7));
    }

    // predictors; per-subject substreams keep prefixes stable across N
    const std::vector<int> binary_idx = {1, 3, 5, 7};       // 1-based
    const std::vector<int> categorical_idx = {2, 4, 6};
    const Rng pred_root = root.substream("predictors");
    Eigen::MatrixXd predictors(n, k_pred);
    for (int i = 0; i < n; ++i) {
        Rng rng = pred_root.substream(static_cast<std::uint64_t>(i));
        for (int k = 0; k < k_pred; ++k) {
            const int k1 = k + 1;
            if (cfg.design >= 2 && contains(binary_idx, k1))
                predictors(i, k) = static_cast<double>(rng.uniform_int(0, 1));
            else if (cfg.design >= 2 && contains(categorical_idx, k1))
                predictors(i, k) = static_cast<double>(rng.uniform_int(1, 8));
            else
                predictors(i, k) =
                    rng.uniform(truth.uniform_bounds(k, 0), truth.uniform_bounds(k, 1));
        }
    }

    // random curves psi_k on the grid
    Rng curve_rng = root.substream("curves");
    if (cfg.design == 1) {
        const auto bs = make_basis(0.0, 1.0, k_pred, 4);
        truth.psi = eval_matrix(bs, grid);  // K x m, psi_k = B_k
    } else {
        const auto bs = make_basis(0.0, 1.0, 13, 4);
        const Eigen::MatrixXd b = eval_matrix(bs, grid);  // 13 x m
        truth.beta.resize(k_pred, 13);
        for (int k = 0; k < k_pred; ++k)
            for (int l = 0; l < 13; ++l) truth.beta(k, l) = curve_rng.normal(0.0, 2.0);
        truth.psi = truth.beta * b;
    }

    // coefficient functions zeta_k
    std::vector<int> quadratic_idx, cubic_idx;
    if (cfg.design == 1) {
        quadratic_idx = {8, 10, 12, 13, 14};
        cubic_idx = {1, 3, 4, 7, 9};
    } else if (cfg.design == 2) {
        quadratic_idx = {14, 16, 17, 18};
        cubic_idx = {8, 10, 19, 20};
    }
    Rng poly_rng = root.substream("poly");
    for (const int k1 : quadratic_idx) {
        if (k1 > k_pred) continue;
        Eigen::VectorXd c(3);
        for (int d = 0; d < 3; ++d) c(d) = poly_rng.normal();
        truth.poly_coeffs[k1] = std::move(c);
    }
    for (const int k1 : cubic_idx) {
        if (k1 > k_pred) continue;
        Eigen::VectorXd c(4);
        for (int d = 0; d < 4; ++d) c(d) = poly_rng.normal();
        truth.poly_coeffs[k1] = std::move(c);
    }

    if (cfg.design == 3) {
        truth.generator_net =
            random_sigmoid_net(k_pred, root.substream("generator-weights"));
        // row-at-a-time so the result for subject i is bit-identical no
        // matter how many subjects follow (matrix-product blocking is
        // shape-dependent)
        truth.zeta.resize(n, k_pred);
        for (int i = 0; i < n; ++i)
            truth.zeta.row(i) = forward(*truth.generator_net, predictors.row(i));
    } else {
        truth.zeta.resize(n, k_pred);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < k_pred; ++k) {
                const auto it = truth.poly_coeffs.find(k + 1);
                truth.zeta(i, k) = it == truth.poly_coeffs.end()
                                       ? predictors(i, k)
                                       : eval_poly(it->second, predictors(i, k));
            }
        }
    }

    truth.noiseless.resize(n, m);  // row-at-a-time, see above
    for (int i = 0; i < n; ++i) truth.noiseless.row(i) = truth.zeta.row(i) * truth.psi;

    const Rng noise_root = root.substream("noise");
    const double noise_sd = std::sqrt(cfg.noise_var);
    Eigen::MatrixXd values = truth.noiseless;
    for (int i = 0; i < n; ++i) {
        Rng rng = noise_root.substream(static_cast<std::uint64_t>(i));
        for (int j = 0; j < m; ++j) values(i, j) += noise_sd * rng.normal();
    }

    auto ds = make_dataset(std::move(predictors), grid, std::move(values),
                           Eigen::MatrixXd::Ones(n, m));
    return {std::move(ds), std::move(truth)};
}

nlohmann::json truth_to_json(const SimTruth& truth) {
    nlohmann::json j;
    j["noiseless"] = detail::matrix_to_json(truth.noiseless);
    j["zeta"] = detail::matrix_to_json(truth.zeta);
    j["psi"] = detail::matrix_to_json(truth.psi);
    if (truth.beta.size() != 0) j["beta"] = detail::matrix_to_json(truth.beta);
    nlohmann::json polys = nlohmann::json::object();
    for (const auto& [k, coeffs] : truth.poly_coeffs)
        polys[std::to_string(k)] = detail::vector_to_json(coeffs);
    j["poly_coeffs"] = std::move(polys);
    j["uniform_bounds"] = detail::matrix_to_json(truth.uniform_bounds);
    if (truth.generator_net) j["generator_net"] = network_to_json(*truth.generator_net);
    return j;
}

}  // namespace fosnet
