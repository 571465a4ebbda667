#include "fosnet/regressors.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "fosnet/interp.hpp"
#include "fosnet/rng.hpp"
#include "fosnet/smoothing.hpp"
#include "json_util.hpp"

namespace fosnet {

Variant variant_from_string(const std::string& name) {
    if (name == "nnbb") return Variant::Nnbb;
    if (name == "nnss") return Variant::Nnss;
    if (name == "nnbr") return Variant::Nnbr;
    if (name == "nnsr") return Variant::Nnsr;
    if (name == "fos") return Variant::Fos;
    throw std::invalid_argument("unknown variant: " + name);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Nnbb: return "nnbb";
        case Variant::Nnss: return "nnss";
        case Variant::Nnbr: return "nnbr";
        case Variant::Nnsr: return "nnsr";
        case Variant::Fos: return "fos";
    }
    return "fos";
}

PenaltyKind penalty_from_string(const std::string& name) {
    if (name == "none") return PenaltyKind::None;
    if (name == "curvature") return PenaltyKind::Curvature;
    if (name == "coeffdiff") return PenaltyKind::CoeffDiff;
    throw std::invalid_argument("unknown penalty kind: " + name);
}

std::string to_string(PenaltyKind p) {
    switch (p) {
        case PenaltyKind::None: return "none";
        case PenaltyKind::Curvature: return "curvature";
        case PenaltyKind::CoeffDiff: return "coeffdiff";
    }
    return "none";
}

namespace {

Eigen::VectorXd quadrature_times(double t_min, double t_max, int q) {
    Eigen::VectorXd times(q);
    for (int i = 0; i < q; ++i)
        times(i) = t_min + (t_max - t_min) * static_cast<double>(i) / (q - 1);
    return times;
}

Network build_network(Eigen::Index input_dim, Eigen::Index output_dim, const FitConfig& cfg) {
    std::vector<int> sizes;
    sizes.push_back(static_cast<int>(input_dim));
    for (const int h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(static_cast<int>(output_dim));
    std::vector<Activation> acts(cfg.hidden.size(), cfg.hidden_activation);
    acts.push_back(cfg.output_activation);
    return init_network(sizes, acts, Rng(cfg.seed).substream("init").next_u64());
}

TrainOptions train_options(const FitConfig& cfg) {
    TrainOptions opt;
    opt.optimizer = cfg.optimizer;
    opt.learning_rate = cfg.learning_rate;
    opt.epochs = cfg.epochs;
    opt.batch_size = cfg.batch_size;
    opt.seed = Rng(cfg.seed).substream("train").next_u64();
    return opt;
}

// Second derivatives of grid-sampled eigenfunctions at the quadrature
// points, via the cubic-spline representation used for prediction.
Eigen::MatrixXd eigenfunction_d2(const FpcaModel& model, const Eigen::VectorXd& times) {
    Eigen::MatrixXd d2(model.num_components, times.size());
    for (int k = 0; k < model.num_components; ++k) {
        const CubicSpline spline(model.grid, model.eigenfunctions.row(k).transpose());
        for (Eigen::Index q = 0; q < times.size(); ++q)
            d2(k, q) = spline.second_derivative(times(q));
    }
    return d2;
}

}  // namespace

TrainedRegressor fit(Variant variant, const FunctionalDataset& train_ds, const FitConfig& config) {
    const bool coefficient_variant =
        variant == Variant::Nnbb || variant == Variant::Nnbr || variant == Variant::Fos;
    const bool response_trained = variant == Variant::Nnbr || variant == Variant::Nnsr;
    if (config.penalty != PenaltyKind::None && !response_trained)
        throw std::invalid_argument(fmt::format(
            "{}: roughness penalty not applicable; smoothing happens when the curve "
            "representation is fitted a priori", to_string(variant)));

    TrainedRegressor model;
    model.variant = variant;
    model.config = config;

    const auto& grid = train_ds.grid;
    const double t_min = grid(0), t_max = grid(grid.size() - 1);

    Eigen::MatrixXd x = train_ds.predictors;
    if (config.standardize && variant != Variant::Fos) {
        model.x_mean = x.colwise().mean().transpose();
        Eigen::MatrixXd centered = x.rowwise() - model.x_mean.transpose();
        model.x_scale = (centered.array().square().colwise().mean()).sqrt().transpose();
        for (Eigen::Index k = 0; k < model.x_scale.size(); ++k)
            if (model.x_scale(k) < 1e-12) model.x_scale(k) = 1.0;
        x = centered.array().rowwise() / model.x_scale.transpose().array();
    }

    if (coefficient_variant) {
        model.basis = make_basis(t_min, t_max, config.num_basis, config.basis_order);
    }

    switch (variant) {
        case Variant::Fos: {
            const auto coef_fit = fit_coefficients(train_ds, *model.basis);
            Eigen::MatrixXd design(train_ds.n_subjects(), train_ds.n_predictors() + 1);
            design.col(0).setOnes();
            design.rightCols(train_ds.n_predictors()) = train_ds.predictors;
            const Eigen::MatrixXd gram =
                design.transpose() * design +
                1e-10 * Eigen::MatrixXd::Identity(design.cols(), design.cols());
            model.fos_coeffs = gram.ldlt().solve(design.transpose() * coef_fit.coeffs);
            break;
        }
        case Variant::Nnbb: {
            const auto coef_fit = fit_coefficients(train_ds, *model.basis);
            Network net = build_network(x.cols(), config.num_basis, config);
            LossSpec spec;
            spec.kind = LossKind::CoefMse;
            auto result = train(std::move(net), x, coef_fit.coeffs, spec, train_options(config));
            model.net = std::move(result.net);
            model.loss_trace = std::move(result.loss_trace);
            break;
        }
        case Variant::Nnss: {
            model.fpca = fit_fpca(train_ds, config.tau);
            const Eigen::MatrixXd xi = scores(*model.fpca, train_ds);
            Network net = build_network(x.cols(), model.fpca->num_components, config);
            LossSpec spec;
            spec.kind = LossKind::CoefMse;
            auto result = train(std::move(net), x, xi, spec, train_options(config));
            model.net = std::move(result.net);
            model.loss_trace = std::move(result.loss_trace);
            break;
        }
        case Variant::Nnbr: {
            LossSpec spec;
            spec.kind = config.penalty == PenaltyKind::Curvature ? LossKind::ResponseMseCurvature
                        : config.penalty == PenaltyKind::CoeffDiff ? LossKind::ResponseMseCoeffDiff
                                                                   : LossKind::ResponseMse;
            spec.basis_matrix = eval_matrix(*model.basis, grid);
            if (!train_ds.regular) spec.mask = train_ds.mask;
            spec.lambda = config.lambda;
            spec.quad_points = config.quad_points;
            spec.domain_length = t_max - t_min;
            if (config.penalty == PenaltyKind::Curvature)
                spec.deriv_matrix = deriv_matrix(
                    *model.basis, quadrature_times(t_min, t_max, config.quad_points), 2);
            Network net = build_network(x.cols(), config.num_basis, config);
            auto result = train(std::move(net), x, train_ds.values, spec, train_options(config));
            model.net = std::move(result.net);
            model.loss_trace = std::move(result.loss_trace);
            break;
        }
        case Variant::Nnsr: {
            model.fpca = fit_fpca(train_ds, config.tau);
            LossSpec spec;
            spec.kind = config.penalty == PenaltyKind::Curvature ? LossKind::ResponseMseCurvature
                        : config.penalty == PenaltyKind::CoeffDiff ? LossKind::ResponseMseCoeffDiff
                                                                   : LossKind::ResponseMse;
            spec.basis_matrix = model.fpca->eigenfunctions;
            if (!train_ds.regular) spec.mask = train_ds.mask;
            spec.lambda = config.lambda;
            spec.quad_points = config.quad_points;
            spec.domain_length = t_max - t_min;
            if (config.penalty == PenaltyKind::Curvature)
                spec.deriv_matrix = eigenfunction_d2(
                    *model.fpca, quadrature_times(t_min, t_max, config.quad_points));
            // train on pre-centered values; the mean is restored at prediction
            const Eigen::MatrixXd centered =
                train_ds.values.rowwise() - model.fpca->mean.transpose();
            Network net = build_network(x.cols(), model.fpca->num_components, config);
            auto result = train(std::move(net), x, centered, spec, train_options(config));
            model.net = std::move(result.net);
            model.loss_trace = std::move(result.loss_trace);
            break;
        }
    }
    return model;
}

Eigen::MatrixXd predict(const TrainedRegressor& model, const Eigen::MatrixXd& x_new,
                        const Eigen::VectorXd& times) {
    Eigen::MatrixXd coeffs;  // n x K (basis coefficients or FPC scores)
    if (model.variant == Variant::Fos) {
        if (x_new.cols() + 1 != model.fos_coeffs->rows())
            throw std::invalid_argument("predict: predictor width does not match training");
        Eigen::MatrixXd design(x_new.rows(), x_new.cols() + 1);
        design.col(0).setOnes();
        design.rightCols(x_new.cols()) = x_new;
        coeffs = design * (*model.fos_coeffs);
    } else {
        Eigen::MatrixXd x = x_new;
        if (model.x_mean.size() != 0) {
            x = (x.rowwise() - model.x_mean.transpose()).array().rowwise() /
                model.x_scale.transpose().array();
        }
        coeffs = forward(*model.net, x);
    }

    if (model.basis) {
        return coeffs * eval_matrix(*model.basis, times);
    }

    const auto& fpca = *model.fpca;
    const double lo = fpca.grid(0), hi = fpca.grid(fpca.grid.size() - 1);
    for (Eigen::Index j = 0; j < times.size(); ++j)
        if (times(j) < lo || times(j) > hi)
            throw std::domain_error(fmt::format(
                "predict: time {} outside training domain [{}, {}]", times(j), lo, hi));
    const Eigen::MatrixXd phi_t = interpolate_rows(fpca.eigenfunctions, fpca.grid, times);
    const Eigen::MatrixXd mean_t =
        interpolate_rows(fpca.mean.transpose(), fpca.grid, times);
    return (coeffs * phi_t).rowwise() + mean_t.row(0);
}

nlohmann::json regressor_to_json(const TrainedRegressor& model) {
    nlohmann::json j;
    j["variant"] = to_string(model.variant);
    nlohmann::json cfg;
    cfg["num_basis"] = model.config.num_basis;
    cfg["basis_order"] = model.config.basis_order;
    cfg["tau"] = model.config.tau;
    cfg["hidden"] = model.config.hidden;
    cfg["hidden_activation"] = to_string(model.config.hidden_activation);
    cfg["output_activation"] = to_string(model.config.output_activation);
    cfg["optimizer"] = model.config.optimizer == Optimizer::Adam ? "adam" : "sgd";
    cfg["learning_rate"] = model.config.learning_rate;
    cfg["epochs"] = model.config.epochs;
    cfg["batch_size"] = model.config.batch_size;
    cfg["penalty"] = to_string(model.config.penalty);
    cfg["lambda"] = model.config.lambda;
    cfg["quad_points"] = model.config.quad_points;
    cfg["standardize"] = model.config.standardize;
    cfg["seed"] = model.config.seed;
    j["config"] = std::move(cfg);
    if (model.net) j["network"] = network_to_json(*model.net);
    if (model.fos_coeffs) j["fos_coeffs"] = detail::matrix_to_json(*model.fos_coeffs);
    if (model.basis) {
        nlohmann::json b;
        b["order"] = model.basis->order;
        b["num_basis"] = model.basis->num_basis;
        b["t_min"] = model.basis->t_min;
        b["t_max"] = model.basis->t_max;
        b["knots"] = detail::vector_to_json(model.basis->knots);
        j["basis"] = std::move(b);
    }
    if (model.fpca) {
        nlohmann::json f;
        f["mean"] = detail::vector_to_json(model.fpca->mean);
        f["eigenfunctions"] = detail::matrix_to_json(model.fpca->eigenfunctions);
        f["eigenvalues"] = detail::vector_to_json(model.fpca->eigenvalues);
        f["num_components"] = model.fpca->num_components;
        f["tau"] = model.fpca->tau;
        f["grid"] = detail::vector_to_json(model.fpca->grid);
        j["fpca"] = std::move(f);
    }
    if (model.x_mean.size() != 0) {
        j["x_mean"] = detail::vector_to_json(model.x_mean);
        j["x_scale"] = detail::vector_to_json(model.x_scale);
    }
    if (!model.loss_trace.empty()) j["loss_trace"] = model.loss_trace;
    return j;
}

TrainedRegressor regressor_from_json(const nlohmann::json& j) {
    TrainedRegressor model;
    model.variant = variant_from_string(j.at("variant").get<std::string>());
    const auto& cfg = j.at("config");
    model.config.num_basis = cfg.at("num_basis").get<int>();
    model.config.basis_order = cfg.at("basis_order").get<int>();
    model.config.tau = cfg.at("tau").get<double>();
    model.config.hidden = cfg.at("hidden").get<std::vector<int>>();
    model.config.hidden_activation =
        activation_from_string(cfg.at("hidden_activation").get<std::string>());
    model.config.output_activation =
        activation_from_string(cfg.at("output_activation").get<std::string>());
    model.config.optimizer =
        cfg.at("optimizer").get<std::string>() == "adam" ? Optimizer::Adam : Optimizer::Sgd;
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.epochs = cfg.at("epochs").get<int>();
    model.config.batch_size = cfg.at("batch_size").get<int>();
    model.config.penalty = penalty_from_string(cfg.at("penalty").get<std::string>());
    model.config.lambda = cfg.at("lambda").get<double>();
    model.config.quad_points = cfg.at("quad_points").get<int>();
    model.config.standardize = cfg.at("standardize").get<bool>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    if (j.contains("network")) model.net = network_from_json(j.at("network"));
    if (j.contains("fos_coeffs")) model.fos_coeffs = detail::matrix_from_json(j.at("fos_coeffs"));
    if (j.contains("basis")) {
        BasisSystem b;
        const auto& bj = j.at("basis");
        b.order = bj.at("order").get<int>();
        b.num_basis = bj.at("num_basis").get<int>();
        b.t_min = bj.at("t_min").get<double>();
        b.t_max = bj.at("t_max").get<double>();
        b.knots = detail::vector_from_json(bj.at("knots"));
        model.basis = std::move(b);
    }
    if (j.contains("fpca")) {
        FpcaModel f;
        const auto& fj = j.at("fpca");
        f.mean = detail::vector_from_json(fj.at("mean"));
        f.eigenfunctions = detail::matrix_from_json(fj.at("eigenfunctions"));
        f.eigenvalues = detail::vector_from_json(fj.at("eigenvalues"));
        f.num_components = fj.at("num_components").get<int>();
        f.tau = fj.at("tau").get<double>();
        f.grid = detail::vector_from_json(fj.at("grid"));
        model.fpca = std::move(f);
    }
    if (j.contains("x_mean")) {
        model.x_mean = detail::vector_from_json(j.at("x_mean"));
        model.x_scale = detail::vector_from_json(j.at("x_scale"));
    }
    if (j.contains("loss_trace")) model.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    const bool has_net = model.net.has_value(), has_fos = model.fos_coeffs.has_value();
    if (has_net == has_fos)
        throw std::invalid_argument("regressor_from_json: exactly one of network/fos_coeffs required");
    return model;
}

}  // namespace fosnet
