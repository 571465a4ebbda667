#include "fosnet/fpca.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/core.h>

#include "fosnet/smoothing.hpp"

namespace fosnet {

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
    const auto m = grid.size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    for (Eigen::Index j = 0; j + 1 < m; ++j) {
        const double h = grid(j + 1) - grid(j);
        w(j) += 0.5 * h;
        w(j + 1) += 0.5 * h;
    }
    return w;
}

namespace {

// Fill unobserved entries by smoothing each subject onto the union grid.
Eigen::MatrixXd densify(const FunctionalDataset& ds) {
    if (ds.regular) return ds.values;
    Eigen::Index min_obs = ds.grid_size();
    for (Eigen::Index i = 0; i < ds.n_subjects(); ++i)
        min_obs = std::min(min_obs, static_cast<Eigen::Index>(ds.mask.row(i).sum()));
    const int kb = static_cast<int>(std::min<Eigen::Index>(15, min_obs));
    if (kb < 4)
        throw std::invalid_argument(
            "fit_fpca: irregular data needs at least 4 observations per subject");
    const auto bs = make_basis(ds.grid(0), ds.grid(ds.grid_size() - 1), kb, 4);
    const auto fit = fit_coefficients(ds, bs);
    return fit.coeffs * eval_matrix(bs, ds.grid);
}

}  // namespace

FpcaModel fit_fpca(const FunctionalDataset& ds, double tau) {
    if (!(tau > 0.0 && tau <= 1.0))
        throw std::invalid_argument("fit_fpca: tau must be in (0, 1]");
    const auto n = ds.n_subjects();
    if (n < 2) throw std::invalid_argument("fit_fpca: need at least 2 subjects");
    const auto m = ds.grid_size();

    const Eigen::MatrixXd dense = densify(ds);

    FpcaModel model;
    model.tau = tau;
    model.grid = ds.grid;
    model.mean = dense.colwise().mean().transpose();

    const Eigen::MatrixXd centered = dense.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n - 1);  // m x m

    // Quadrature-weighted symmetric eigenproblem: with W the trapezoid
    // weights, eigenvectors u of W^1/2 K W^1/2 give L2-orthonormal
    // eigenfunctions phi = W^-1/2 u and L2 eigenvalues directly.
    const Eigen::VectorXd w = trapezoid_weights(ds.grid);
    const Eigen::VectorXd sqrt_w = w.array().sqrt();
    const Eigen::MatrixXd weighted =
        sqrt_w.asDiagonal() * cov * sqrt_w.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weighted);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("fit_fpca: eigendecomposition failed");

    // ascending from Eigen; collect the positive ones in descending order
    std::vector<std::pair<double, Eigen::Index>> positive;
    double total = 0.0;
    const double floor = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    for (Eigen::Index k = m - 1; k >= 0; --k) {
        const double ev = eig.eigenvalues()(k);
        if (ev > floor) {
            positive.emplace_back(ev, k);
            total += ev;
        }
    }
    if (positive.empty())
        throw std::runtime_error("fit_fpca: degenerate covariance (no positive eigenvalue)");

    int k_tau = 0;
    double cum = 0.0;
    for (const auto& [ev, idx] : positive) {
        ++k_tau;
        cum += ev;
        if (cum / total >= tau) break;
    }

    model.num_components = k_tau;
    model.eigenvalues.resize(k_tau);
    model.eigenfunctions.resize(k_tau, m);
    for (int k = 0; k < k_tau; ++k) {
        model.eigenvalues(k) = positive[static_cast<std::size_t>(k)].first;
        Eigen::VectorXd phi =
            eig.eigenvectors().col(positive[static_cast<std::size_t>(k)].second).array() /
            sqrt_w.array();
        // sign convention: largest-magnitude entry positive
        Eigen::Index arg_max = 0;
        phi.cwiseAbs().maxCoeff(&arg_max);
        if (phi(arg_max) < 0.0) phi = -phi;
        model.eigenfunctions.row(k) = phi.transpose();
    }
    return model;
}

Eigen::MatrixXd scores(const FpcaModel& model, const FunctionalDataset& ds) {
    if (ds.grid.size() != model.grid.size() || (ds.grid - model.grid).cwiseAbs().maxCoeff() > 0.0)
        throw std::invalid_argument("scores: dataset grid does not match model grid");
    const Eigen::MatrixXd dense = ds.regular ? ds.values : densify(ds);
    const Eigen::VectorXd w = trapezoid_weights(model.grid);
    const Eigen::MatrixXd centered = dense.rowwise() - model.mean.transpose();
    return centered * w.asDiagonal() * model.eigenfunctions.transpose();
}

Eigen::MatrixXd reconstruct(const FpcaModel& model, const Eigen::MatrixXd& score_matrix) {
    if (score_matrix.cols() != model.num_components)
        throw std::invalid_argument(fmt::format(
            "reconstruct: score width {} != K_tau {}", score_matrix.cols(), model.num_components));
    return (score_matrix * model.eigenfunctions).rowwise() + model.mean.transpose();
}

}  // namespace fosnet
