#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "fosnet/bspline.hpp"
#include "fosnet/network.hpp"
#include "fosnet/rng.hpp"

using namespace fosnet;

namespace {

double activate(Activation a, double v) {
    switch (a) {
        case Activation::Relu: return v > 0 ? v : 0.0;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
        case Activation::Tanh: return std::tanh(v);
        case Activation::Identity: return v;
    }
    return v;
}

// Naive per-subject, per-neuron evaluation oracle.
Eigen::MatrixXd forward_oracle(const Network& net, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), net.output_dim());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::VectorXd a = x.row(i).transpose();
        for (const auto& layer : net.layers) {
            Eigen::VectorXd z(layer.weights.rows());
            for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
                double s = layer.bias(r);
                for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                    s += layer.weights(r, c) * a(c);
                z(r) = activate(layer.activation, s);
            }
            a = z;
        }
        out.row(i) = a.transpose();
    }
    return out;
}

Network test_net(std::uint64_t seed) {
    // 3 layers, smooth activations so finite differences are well-behaved
    return init_network({5, 7, 6, 6},
                        {Activation::Tanh, Activation::Sigmoid, Activation::Identity}, seed);
}

void check_gradient(const LossSpec& spec, const Eigen::MatrixXd& x,
                    const Eigen::MatrixXd& targets) {
    auto net = test_net(17);
    const auto [loss, grad] = loss_and_grad(net, x, targets, spec);
    CHECK(std::isfinite(loss));

    const double h = 1e-6;
    double max_rel = 0.0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto perturb = [&](double* p, double g) {
            const double orig = *p;
            *p = orig + h;
            const double up = loss_and_grad(net, x, targets, spec).first;
            *p = orig - h;
            const double dn = loss_and_grad(net, x, targets, spec).first;
            *p = orig;
            const double fd = (up - dn) / (2 * h);
            const double rel = std::abs(fd - g) / std::max(1.0, std::abs(fd));
            max_rel = std::max(max_rel, rel);
        };
        for (Eigen::Index i = 0; i < net.layers[l].weights.size(); ++i)
            perturb(net.layers[l].weights.data() + i, grad.weights[l](i));
        for (Eigen::Index i = 0; i < net.layers[l].bias.size(); ++i)
            perturb(net.layers[l].bias.data() + i, grad.bias[l](i));
    }
    CHECK(max_rel < 1e-4);
}

}  // namespace

TEST_CASE("initialization") {
    const std::vector<int> sizes{20, 50, 30, 6};
    const std::vector<Activation> acts{Activation::Relu, Activation::Relu,
                                       Activation::Identity};
    const auto a = init_network(sizes, acts, 42);
    const auto b = init_network(sizes, acts, 42);
    CHECK(a.layers.size() == 3);
    CHECK(a.layers[0].weights.rows() == 50);
    CHECK(a.layers[0].weights.cols() == 20);
    CHECK(a.layers[1].weights.rows() == 30);
    CHECK(a.layers[1].weights.cols() == 50);
    CHECK(a.layers[2].weights.rows() == 6);
    CHECK(a.layers[2].weights.cols() == 30);
    for (int l = 0; l < 3; ++l) {
        CHECK(a.layers[l].weights == b.layers[l].weights);
        CHECK(a.layers[l].bias.cwiseAbs().maxCoeff() == 0.0);
        const double bound = std::sqrt(6.0 / (a.layers[l].weights.cols() +
                                              a.layers[l].weights.rows()));
        CHECK(a.layers[l].weights.cwiseAbs().maxCoeff() <= bound);
    }
    CHECK(a.parameter_count() == 20 * 50 + 50 + 50 * 30 + 30 + 30 * 6 + 6);

    CHECK_THROWS_AS(init_network({20, 50}, acts, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_network({20, 0, 6},
                                 {Activation::Relu, Activation::Identity}, 1),
                    std::invalid_argument);
}

TEST_CASE("forward pass") {
    // zero net maps everything to zero
    Network zero;
    zero.layers.push_back({Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4),
                           Activation::Identity});
    CHECK(forward(zero, Eigen::MatrixXd::Random(5, 3)).cwiseAbs().maxCoeff() == 0.0);

    // identity layer reproduces the input
    Network ident;
    ident.layers.push_back({Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3),
                            Activation::Identity});
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
    CHECK((forward(ident, x) - x).cwiseAbs().maxCoeff() == 0.0);

    // random net against the naive oracle
    const auto net = init_network({4, 9, 5, 3},
                                  {Activation::Relu, Activation::Tanh, Activation::Sigmoid},
                                  7);
    const Eigen::MatrixXd xr = Eigen::MatrixXd::Random(11, 4);
    CHECK((forward(net, xr) - forward_oracle(net, xr)).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(forward(net, Eigen::MatrixXd::Random(2, 5)), std::invalid_argument);
}

TEST_CASE("gradients match finite differences for all loss kinds") {
    const int n = 8, k = 6, m = 15;
    Rng rng(3);
    Eigen::MatrixXd x(n, 5), coef_targets(n, k), resp_targets(n, m), mask(n, m);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    for (Eigen::Index i = 0; i < coef_targets.size(); ++i) coef_targets(i) = rng.normal();
    for (Eigen::Index i = 0; i < resp_targets.size(); ++i) resp_targets(i) = rng.normal();
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = rng.uniform() < 0.7 ? 1.0 : 0.0;

    const auto bs = make_basis(0.0, 1.0, k, 4);
    const auto grid = Eigen::VectorXd::LinSpaced(m, 0.0, 1.0);
    const Eigen::MatrixXd theta = eval_matrix(bs, grid);
    const int q = 21;
    const Eigen::MatrixXd d2 = deriv_matrix(bs, Eigen::VectorXd::LinSpaced(q, 0.0, 1.0), 2);

    SUBCASE("CoefMSE") {
        LossSpec spec;
        spec.kind = LossKind::CoefMse;
        check_gradient(spec, x, coef_targets);
    }
    SUBCASE("ResponseMSE masked") {
        LossSpec spec;
        spec.kind = LossKind::ResponseMse;
        spec.basis_matrix = theta;
        spec.mask = mask;
        check_gradient(spec, x, resp_targets);
    }
    SUBCASE("ResponseMSE with mean curve") {
        LossSpec spec;
        spec.kind = LossKind::ResponseMse;
        spec.basis_matrix = theta;
        spec.mean_curve = Eigen::VectorXd::LinSpaced(m, -1.0, 1.0);
        check_gradient(spec, x, resp_targets);
    }
    SUBCASE("curvature penalty") {
        LossSpec spec;
        spec.kind = LossKind::ResponseMseCurvature;
        spec.basis_matrix = theta;
        spec.mask = mask;
        spec.lambda = 0.1;
        spec.quad_points = q;
        spec.deriv_matrix = d2;
        check_gradient(spec, x, resp_targets);
    }
    SUBCASE("coefficient-difference penalty") {
        LossSpec spec;
        spec.kind = LossKind::ResponseMseCoeffDiff;
        spec.basis_matrix = theta;
        spec.mask = mask;
        spec.lambda = 0.1;
        check_gradient(spec, x, resp_targets);
    }
}

TEST_CASE("loss identities") {
    const int n = 6, k = 6, m = 12;
    Rng rng(29);
    Eigen::MatrixXd x(n, 5), targets(n, m);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    for (Eigen::Index i = 0; i < targets.size(); ++i) targets(i) = rng.normal();
    const auto net = test_net(5);
    const auto bs = make_basis(0.0, 1.0, k, 4);
    const Eigen::MatrixXd theta = eval_matrix(bs, Eigen::VectorXd::LinSpaced(m, 0.0, 1.0));

    LossSpec plain;
    plain.kind = LossKind::ResponseMse;
    plain.basis_matrix = theta;
    const double base = loss_and_grad(net, x, targets, plain).first;

    // all-ones mask is a no-op, exactly
    LossSpec masked = plain;
    masked.mask = Eigen::MatrixXd::Ones(n, m);
    CHECK(loss_and_grad(net, x, targets, masked).first == base);

    // lambda = 0 penalized kinds collapse to the plain response loss
    LossSpec curv = plain;
    curv.kind = LossKind::ResponseMseCurvature;
    curv.lambda = 0.0;
    curv.quad_points = 31;
    curv.deriv_matrix = deriv_matrix(bs, Eigen::VectorXd::LinSpaced(31, 0.0, 1.0), 2);
    CHECK(loss_and_grad(net, x, targets, curv).first == base);

    LossSpec diff = plain;
    diff.kind = LossKind::ResponseMseCoeffDiff;
    diff.lambda = 0.0;
    CHECK(loss_and_grad(net, x, targets, diff).first == base);

    // penalized loss decomposes into ResponseMSE + lambda * penalty term,
    // where the penalty matches the basis module's value on the predictions
    curv.lambda = 0.37;
    const Eigen::MatrixXd chat = forward(net, x);
    double curv_sum = 0.0, diff_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        curv_sum += curvature_penalty(bs, chat.row(i).transpose(), 31);
        diff_sum += coeff_diff_penalty(chat.row(i).transpose());
    }
    const double curv_total = loss_and_grad(net, x, targets, curv).first;
    CHECK(curv_total - base ==
          doctest::Approx(0.37 * 1.0 / 30.0 * curv_sum / n).epsilon(1e-10));

    diff.lambda = 0.81;
    const double diff_total = loss_and_grad(net, x, targets, diff).first;
    CHECK(diff_total - base == doctest::Approx(0.81 * diff_sum / n).epsilon(1e-10));

    // scaling: doubling targets quadruples CoefMSE at fixed parameters
    LossSpec coef;
    coef.kind = LossKind::CoefMse;
    Eigen::MatrixXd ct(n, k);
    for (Eigen::Index i = 0; i < ct.size(); ++i) ct(i) = rng.normal();
    // make predictions zero so the quadratic scaling is exact
    Network zero;
    zero.layers.push_back({Eigen::MatrixXd::Zero(k, 5), Eigen::VectorXd::Zero(k),
                           Activation::Identity});
    const double l1 = loss_and_grad(zero, x, ct, coef).first;
    const double l2 = loss_and_grad(zero, x, (2.0 * ct).eval(), coef).first;
    CHECK(l2 == doctest::Approx(4.0 * l1).epsilon(1e-12));
}

TEST_CASE("one full-batch SGD epoch is one exact gradient step") {
    const int n = 10;
    Rng rng(8);
    Eigen::MatrixXd x(n, 5), targets(n, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    for (Eigen::Index i = 0; i < targets.size(); ++i) targets(i) = rng.normal();

    auto net = test_net(77);
    LossSpec spec;
    spec.kind = LossKind::CoefMse;
    const auto [loss0, grad] = loss_and_grad(net, x, targets, spec);

    TrainOptions opt;
    opt.optimizer = Optimizer::Sgd;
    opt.learning_rate = 0.05;
    opt.epochs = 1;
    opt.batch_size = n;
    opt.seed = 4;
    const auto result = train(net, x, targets, spec, opt);

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Eigen::MatrixXd expect_w =
            net.layers[l].weights - 0.05 * grad.weights[l];
        const Eigen::VectorXd expect_b = net.layers[l].bias - 0.05 * grad.bias[l];
        CHECK((result.net.layers[l].weights - expect_w).cwiseAbs().maxCoeff() == 0.0);
        CHECK((result.net.layers[l].bias - expect_b).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(result.loss_trace.size() == 1);
}

TEST_CASE("convex full-batch descent is monotone") {
    const int n = 30, p = 4, k = 3;
    Rng rng(15);
    Eigen::MatrixXd x(n, p), a(k, p);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
    const Eigen::MatrixXd targets = x * a.transpose();

    Network net;
    net.layers.push_back({0.01 * Eigen::MatrixXd::Random(k, p), Eigen::VectorXd::Zero(k),
                          Activation::Identity});
    LossSpec spec;
    spec.kind = LossKind::CoefMse;
    TrainOptions opt;
    opt.optimizer = Optimizer::Sgd;
    opt.learning_rate = 1e-3;
    opt.epochs = 50;
    opt.batch_size = n;
    const auto result = train(net, x, targets, spec, opt);
    for (std::size_t e = 1; e < result.loss_trace.size(); ++e)
        CHECK(result.loss_trace[e] <= result.loss_trace[e - 1] + 1e-14);
}

TEST_CASE("training is deterministic") {
    const int n = 25;
    Rng rng(6);
    Eigen::MatrixXd x(n, 5), targets(n, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    for (Eigen::Index i = 0; i < targets.size(); ++i) targets(i) = rng.normal();
    const auto net = test_net(3);
    LossSpec spec;
    spec.kind = LossKind::CoefMse;
    TrainOptions opt;
    opt.epochs = 20;
    opt.batch_size = 8;
    opt.seed = 11;

    const auto a = train(net, x, targets, spec, opt);
    const auto b = train(net, x, targets, spec, opt);
    for (std::size_t l = 0; l < a.net.layers.size(); ++l) {
        CHECK(a.net.layers[l].weights == b.net.layers[l].weights);
        CHECK(a.net.layers[l].bias == b.net.layers[l].bias);
    }
    CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("divergence is reported with epoch context") {
    const int n = 12;
    Rng rng(2);
    Eigen::MatrixXd x(n, 5), targets(n, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 100.0 * rng.normal();
    for (Eigen::Index i = 0; i < targets.size(); ++i) targets(i) = rng.normal();
    auto net = init_network({5, 16, 6}, {Activation::Relu, Activation::Identity}, 1);
    LossSpec spec;
    spec.kind = LossKind::CoefMse;
    TrainOptions opt;
    opt.optimizer = Optimizer::Sgd;
    opt.learning_rate = 1e6;  // guaranteed blow-up
    opt.epochs = 50;
    opt.batch_size = n;
    CHECK_THROWS_WITH_AS(train(net, x, targets, spec, opt), doctest::Contains("epoch"),
                         std::runtime_error);
}

TEST_CASE("JSON round trip") {
    const auto net = init_network({4, 9, 5, 3},
                                  {Activation::Relu, Activation::Tanh, Activation::Sigmoid},
                                  21);
    const auto j = network_to_json(net);
    const auto again = network_from_json(j);
    REQUIRE(again.layers.size() == net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        CHECK(again.layers[l].weights == net.layers[l].weights);
        CHECK(again.layers[l].bias == net.layers[l].bias);
        CHECK(again.layers[l].activation == net.layers[l].activation);
    }
}
