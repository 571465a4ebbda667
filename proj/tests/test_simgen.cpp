#include <doctest.h>

#include <cmath>
#include <set>

#include "fosnet/bspline.hpp"
#include "fosnet/simgen.hpp"
#include "fosnet/smoothing.hpp"

using namespace fosnet;

namespace {

SimConfig config(int design, int n, std::uint64_t seed, double noise_var = 2.0) {
    SimConfig cfg;
    cfg.design = design;
    cfg.n_subjects = n;
    cfg.seed = seed;
    cfg.noise_var = noise_var;
    return cfg;
}

double polyval(const Eigen::VectorXd& coeffs, double x) {
    double v = 0.0, p = 1.0;
    for (Eigen::Index d = 0; d < coeffs.size(); ++d) {
        v += coeffs(d) * p;
        p *= x;
    }
    return v;
}

}  // namespace

TEST_CASE("design 1 layout and polynomial coefficient functions") {
    const auto [ds, truth] = generate(config(1, 2000, 42));
    CHECK(ds.n_subjects() == 2000);
    CHECK(ds.n_predictors() == 20);
    CHECK(ds.grid_size() == 40);
    CHECK(ds.regular);
    CHECK(ds.grid(0) == 0.0);
    CHECK(ds.grid(39) == 1.0);

    // per-coordinate uniform bounds from the admissible sets, respected by X
    for (int k = 0; k < 20; ++k) {
        const double a = truth.uniform_bounds(k, 0), b = truth.uniform_bounds(k, 1);
        CHECK(a >= -4.0);
        CHECK(a <= 0.0);
        CHECK(a == std::floor(a));
        CHECK(b >= 3.0);
        CHECK(b <= 7.0);
        CHECK(b == std::floor(b));
        CHECK(ds.predictors.col(k).minCoeff() >= a);
        CHECK(ds.predictors.col(k).maxCoeff() <= b);
    }

    // zeta_12 is a degree-2 polynomial of X_12 alone; zeta_3 degree-3 of X_3
    REQUIRE(truth.poly_coeffs.count(12) == 1);
    CHECK(truth.poly_coeffs.at(12).size() == 3);
    REQUIRE(truth.poly_coeffs.count(3) == 1);
    CHECK(truth.poly_coeffs.at(3).size() == 4);
    for (int i = 0; i < 50; ++i) {
        CHECK(truth.zeta(i, 11) ==
              doctest::Approx(polyval(truth.poly_coeffs.at(12), ds.predictors(i, 11)))
                  .epsilon(1e-12));
        CHECK(truth.zeta(i, 2) ==
              doctest::Approx(polyval(truth.poly_coeffs.at(3), ds.predictors(i, 2)))
                  .epsilon(1e-12));
    }
    // untransformed coordinates stay linear
    CHECK(truth.zeta(7, 1) == ds.predictors(7, 1));

    // noiseless curves are the stated combination of the random curves
    const Eigen::MatrixXd combo = truth.zeta * truth.psi;
    CHECK((combo - truth.noiseless).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("designs 2-4 predictor types") {
    for (int design : {2, 3, 4}) {
        const auto [ds, truth] = generate(config(design, 300, 9));
        for (int k : {0, 2, 4, 6}) {  // 1-based {1,3,5,7}
            for (int i = 0; i < 300; ++i) {
                const double v = ds.predictors(i, k);
                CHECK((v == 0.0 || v == 1.0));
            }
        }
        for (int k : {1, 3, 5}) {  // 1-based {2,4,6}
            std::set<double> levels;
            for (int i = 0; i < 300; ++i) {
                const double v = ds.predictors(i, k);
                CHECK(v == std::floor(v));
                CHECK(v >= 1.0);
                CHECK(v <= 8.0);
                levels.insert(v);
            }
            CHECK(levels.size() > 4);  // all 8 levels essentially certain at n=300
        }
    }
}

TEST_CASE("design 2 polynomial index sets") {
    const auto [ds, truth] = generate(config(2, 100, 5));
    for (int k : {14, 16, 17, 18}) CHECK(truth.poly_coeffs.at(k).size() == 3);
    for (int k : {8, 10, 19, 20}) CHECK(truth.poly_coeffs.at(k).size() == 4);
    // binary/categorical coordinates pass through untransformed
    CHECK(truth.zeta(3, 0) == ds.predictors(3, 0));
    CHECK(truth.zeta(3, 1) == ds.predictors(3, 1));
}

TEST_CASE("design 3 coefficient functions come from the generator network") {
    const auto [ds, truth] = generate(config(3, 60, 77));
    REQUIRE(truth.generator_net.has_value());
    const auto out = forward(*truth.generator_net, ds.predictors);
    CHECK((out - truth.zeta).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(truth.generator_net->layers.size() == 4);
    CHECK(truth.generator_net->layers[0].weights.rows() == 16);
    CHECK(truth.generator_net->layers[3].weights.rows() == 20);
}

TEST_CASE("design 4 is linear and exactly basis-representable") {
    const auto [ds, truth] = generate(config(4, 400, 11, 0.0));
    CHECK(truth.zeta == ds.predictors);
    CHECK((ds.values - truth.noiseless).cwiseAbs().maxCoeff() == 0.0);

    const auto bs = make_basis(0.0, 1.0, 13, 4);
    const auto fit = fit_coefficients(ds, bs);
    CHECK(fit.sse < 1e-8);
}

TEST_CASE("noiseless designs 2-4 lie in the 13-function basis") {
    const auto bs = make_basis(0.0, 1.0, 13, 4);
    for (int design : {2, 3, 4}) {
        auto [ds, truth] = generate(config(design, 100, 21));
        ds.values = truth.noiseless;
        const auto fit = fit_coefficients(ds, bs);
        CHECK(fit.sse < 1e-10);
    }
}

TEST_CASE("determinism and prefix stability") {
    const auto [a, ta] = generate(config(3, 150, 1234));
    const auto [b, tb] = generate(config(3, 150, 1234));
    CHECK(a.predictors == b.predictors);
    CHECK(a.values == b.values);
    CHECK(ta.psi == tb.psi);

    // growing N keeps the shared prefix of subjects identical
    const auto [big, tbig] = generate(config(3, 400, 1234));
    CHECK(big.predictors.topRows(150) == a.predictors);
    CHECK(big.values.topRows(150) == a.values);
}

TEST_CASE("noise variance is honest") {
    const auto [ds, truth] = generate(config(2, 2000, 31, 2.0));
    const Eigen::MatrixXd noise = ds.values - truth.noiseless;
    const double var = noise.array().square().sum() / (noise.size() - 1);
    CHECK(var == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::abs(noise.mean()) < 0.05);
}

TEST_CASE("invalid configurations") {
    CHECK_THROWS_AS(generate(config(5, 100, 1)), std::invalid_argument);
    CHECK_THROWS_AS(generate(config(0, 100, 1)), std::invalid_argument);
    auto cfg = config(1, 100, 1);
    cfg.n_predictors = 4;  // design 1 needs K >= 5
    CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
    auto cfg2 = config(2, 0, 1);
    CHECK_THROWS_AS(generate(cfg2), std::invalid_argument);
}
