#include "fosnet/smoothing.hpp"

#include <stdexcept>
#include <vector>

#include <fmt/core.h>

namespace fosnet {

CoefficientFit fit_coefficients(const FunctionalDataset& ds, const BasisSystem& bs) {
    const auto n = ds.n_subjects();
    const auto m = ds.grid_size();
    const int kb = bs.num_basis;

    const Eigen::MatrixXd theta = eval_matrix(bs, ds.grid);  // K_b x m

    CoefficientFit fit;
    fit.basis = bs;
    fit.coeffs.resize(n, kb);
    fit.sse = 0.0;

    const double jitter = 1e-10;

    if (ds.regular) {
        // shared design: one factorization serves every subject
        const Eigen::MatrixXd gram =
            theta * theta.transpose() + jitter * Eigen::MatrixXd::Identity(kb, kb);
        if (m < kb)
            throw std::invalid_argument(fmt::format(
                "fit_coefficients: {} observed points but {} basis functions; "
                "use fewer basis functions or penalized fitting", m, kb));
        const auto solver = gram.ldlt();
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd rhs = theta * ds.values.row(i).transpose();
            const Eigen::VectorXd c = solver.solve(rhs);
            fit.coeffs.row(i) = c.transpose();
            fit.sse += (ds.values.row(i).transpose() - theta.transpose() * c).squaredNorm();
        }
        return fit;
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<Eigen::Index> obs;
        for (Eigen::Index j = 0; j < m; ++j)
            if (ds.mask(i, j) == 1.0) obs.push_back(j);
        if (static_cast<int>(obs.size()) < kb)
            throw std::invalid_argument(fmt::format(
                "fit_coefficients: subject {} has {} observed points but {} basis "
                "functions; use fewer basis functions or penalized fitting",
                i < static_cast<Eigen::Index>(ds.subject_ids.size())
                    ? ds.subject_ids[static_cast<std::size_t>(i)]
                    : std::to_string(i),
                obs.size(), kb));
        Eigen::MatrixXd theta_obs(kb, static_cast<Eigen::Index>(obs.size()));
        Eigen::VectorXd z(static_cast<Eigen::Index>(obs.size()));
        for (std::size_t c = 0; c < obs.size(); ++c) {
            theta_obs.col(static_cast<Eigen::Index>(c)) = theta.col(obs[c]);
            z(static_cast<Eigen::Index>(c)) = ds.values(i, obs[c]);
        }
        const Eigen::MatrixXd gram =
            theta_obs * theta_obs.transpose() + jitter * Eigen::MatrixXd::Identity(kb, kb);
        const Eigen::VectorXd coeff = gram.ldlt().solve(theta_obs * z);
        fit.coeffs.row(i) = coeff.transpose();
        fit.sse += (z - theta_obs.transpose() * coeff).squaredNorm();
    }
    return fit;
}

}  // namespace fosnet
