#include <doctest.h>

#include <cmath>

#include "fosnet/bspline.hpp"
#include "fosnet/rng.hpp"
#include "fosnet/smoothing.hpp"

using namespace fosnet;

namespace {

FunctionalDataset dataset_from(const Eigen::MatrixXd& x, const Eigen::VectorXd& grid,
                               const Eigen::MatrixXd& z, Eigen::MatrixXd mask) {
    return make_dataset(x, grid, z, std::move(mask));
}

// Independent oracle: plain gradient descent on the masked least-squares
// objective, run to tight convergence.
Eigen::VectorXd gradient_descent_ls(const Eigen::MatrixXd& theta_t,  // m_obs x K
                                    const Eigen::VectorXd& z) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(theta_t.cols());
    const Eigen::MatrixXd gram = theta_t.transpose() * theta_t;
    const double lr = 0.9 / Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram)
                                .eigenvalues()
                                .maxCoeff();
    for (int it = 0; it < 200000; ++it) {
        const Eigen::VectorXd grad = gram * c - theta_t.transpose() * z;
        c -= lr * grad;
        if (grad.norm() < 1e-13) break;
    }
    return c;
}

}  // namespace

TEST_CASE("noiseless curves are recovered exactly") {
    const auto bs = make_basis(0.0, 1.0, 8, 4);
    const auto grid = Eigen::VectorXd::LinSpaced(30, 0.0, 1.0);
    const Eigen::MatrixXd theta = eval_matrix(bs, grid);

    Rng rng(5);
    Eigen::MatrixXd coeffs(6, 8);
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs(i) = rng.normal();
    const Eigen::MatrixXd z = coeffs * theta;
    const auto ds = dataset_from(Eigen::MatrixXd::Zero(6, 1), grid, z,
                                 Eigen::MatrixXd::Ones(6, 30));

    const auto fit = fit_coefficients(ds, bs);
    CHECK((fit.coeffs - coeffs).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(fit.sse < 1e-12);
}

TEST_CASE("square system interpolates") {
    const int kb = 7;
    const auto bs = make_basis(0.0, 1.0, kb, 4);
    const auto grid = Eigen::VectorXd::LinSpaced(kb, 0.0, 1.0);
    Rng rng(9);
    Eigen::MatrixXd z(3, kb);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const auto ds = dataset_from(Eigen::MatrixXd::Zero(3, 1), grid, z,
                                 Eigen::MatrixXd::Ones(3, kb));
    const auto fit = fit_coefficients(ds, bs);
    CHECK(fit.sse < 1e-12);
}

TEST_CASE("matches an iterative least-squares oracle") {
    const auto bs = make_basis(0.0, 1.0, 9, 4);
    const int n = 20, m = 40;
    const auto grid = Eigen::VectorXd::LinSpaced(m, 0.0, 1.0);
    Rng rng(23);
    Eigen::MatrixXd z(n, m);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    // drop a few points per subject so the mask path is exercised
    Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(n, m);
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < 4; ++r)
            mask(i, static_cast<int>(rng.uniform_int(0, m - 1))) = 0.0;

    const auto ds = dataset_from(Eigen::MatrixXd::Zero(n, 1), grid, z, mask);
    const auto fit = fit_coefficients(ds, bs);

    const Eigen::MatrixXd theta = eval_matrix(bs, grid);  // K x m
    for (int i = 0; i < n; ++i) {
        const int mi = static_cast<int>(mask.row(i).sum());
        Eigen::MatrixXd design(mi, 9);
        Eigen::VectorXd zi(mi);
        int r = 0;
        for (int j = 0; j < m; ++j) {
            if (mask(i, j) == 1.0) {
                design.row(r) = theta.col(j).transpose();
                zi(r) = z(i, j);
                ++r;
            }
        }
        const Eigen::VectorXd oracle = gradient_descent_ls(design, zi);
        CHECK((fit.coeffs.row(i).transpose() - oracle).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("residuals are orthogonal to the basis") {
    const auto bs = make_basis(0.0, 1.0, 10, 4);
    const int n = 8, m = 35;
    const auto grid = Eigen::VectorXd::LinSpaced(m, 0.0, 1.0);
    Rng rng(41);
    Eigen::MatrixXd z(n, m);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const auto ds = dataset_from(Eigen::MatrixXd::Zero(n, 1), grid, z,
                                 Eigen::MatrixXd::Ones(n, m));
    const auto fit = fit_coefficients(ds, bs);

    const Eigen::MatrixXd theta = eval_matrix(bs, grid);
    const Eigen::MatrixXd resid = z - fit.coeffs * theta;
    for (int i = 0; i < n; ++i) {
        const double rel = (theta * resid.row(i).transpose()).norm() / z.row(i).norm();
        CHECK(rel < 1e-8);
    }
}

TEST_CASE("mean squared residual approaches the noise variance") {
    const auto bs = make_basis(0.0, 1.0, 13, 4);
    const int n = 100, m = 200;
    const double sigma2 = 0.49;
    const auto grid = Eigen::VectorXd::LinSpaced(m, 0.0, 1.0);
    Rng rng(77);
    Eigen::MatrixXd z(n, m);
    for (int i = 0; i < n; ++i) {
        const double a = rng.normal(), b = rng.normal();
        for (int j = 0; j < m; ++j)
            z(i, j) = a * std::sin(2 * M_PI * grid(j)) + b * grid(j) +
                      std::sqrt(sigma2) * rng.normal();
    }
    const auto ds = dataset_from(Eigen::MatrixXd::Zero(n, 1), grid, z,
                                 Eigen::MatrixXd::Ones(n, m));
    const auto fit = fit_coefficients(ds, bs);
    const double per_point = fit.sse / (n * m);
    CHECK(per_point > 0.8 * sigma2);
    CHECK(per_point < 1.2 * sigma2);
}

TEST_CASE("too few observations names the subject") {
    const auto bs = make_basis(0.0, 1.0, 13, 4);
    const int m = 20;
    const auto grid = Eigen::VectorXd::LinSpaced(m, 0.0, 1.0);
    Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(2, m);
    mask.row(1).tail(10).setZero();  // subject 2 has 10 < 13 points
    auto ds = dataset_from(Eigen::MatrixXd::Zero(2, 1), grid,
                           Eigen::MatrixXd::Random(2, m), mask);
    ds.subject_ids = {"s1", "s2"};
    CHECK_THROWS_WITH_AS(fit_coefficients(ds, bs), doctest::Contains("s2"),
                         std::invalid_argument);
}
