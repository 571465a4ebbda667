#include "fosnet/bspline.hpp"

#include <stdexcept>

#include <fmt/core.h>

namespace fosnet {

namespace {

// Cox-de Boor triangular recursion carrying value, first and second
// derivative through each degree. Writes num_basis entries per column.
void basis_at(const BasisSystem& bs, double t, double* val, double* d1, double* d2) {
    const auto& knots = bs.knots;
    const auto n_knots = knots.size();
    const Eigen::Index n0 = n_knots - 1;  // degree-0 indicator count

    Eigen::VectorXd b = Eigen::VectorXd::Zero(n0), db = Eigen::VectorXd::Zero(n0),
                    ddb = Eigen::VectorXd::Zero(n0);
    if (t >= bs.t_max) {
        // closed right end: last nonempty span
        for (Eigen::Index k = n0 - 1; k >= 0; --k) {
            if (knots(k) < knots(k + 1)) {
                b(k) = 1.0;
                break;
            }
        }
    } else {
        for (Eigen::Index k = 0; k < n0; ++k)
            if (knots(k) <= t && t < knots(k + 1)) b(k) = 1.0;
    }

    for (int p = 1; p < bs.order; ++p) {
        Eigen::VectorXd nb = Eigen::VectorXd::Zero(n0), ndb = Eigen::VectorXd::Zero(n0),
                        nddb = Eigen::VectorXd::Zero(n0);
        for (Eigen::Index k = 0; k + p + 1 < n_knots; ++k) {
            const double den1 = knots(k + p) - knots(k);
            const double den2 = knots(k + p + 1) - knots(k + 1);
            const double a = den1 > 0.0 ? (t - knots(k)) / den1 : 0.0;
            const double da = den1 > 0.0 ? 1.0 / den1 : 0.0;
            const double c = den2 > 0.0 ? (knots(k + p + 1) - t) / den2 : 0.0;
            const double dc = den2 > 0.0 ? -1.0 / den2 : 0.0;
            nb(k) = a * b(k) + c * b(k + 1);
            ndb(k) = a * db(k) + da * b(k) + c * db(k + 1) + dc * b(k + 1);
            nddb(k) = a * ddb(k) + 2.0 * da * db(k) + c * ddb(k + 1) + 2.0 * dc * db(k + 1);
        }
        b.swap(nb);
        db.swap(ndb);
        ddb.swap(nddb);
    }
    for (int k = 0; k < bs.num_basis; ++k) {
        if (val) val[k] = b(k);
        if (d1) d1[k] = db(k);
        if (d2) d2[k] = ddb(k);
    }
}

void check_domain(const BasisSystem& bs, const Eigen::VectorXd& times) {
    for (Eigen::Index j = 0; j < times.size(); ++j) {
        if (times(j) < bs.t_min || times(j) > bs.t_max)
            throw std::domain_error(fmt::format(
                "time {} outside basis domain [{}, {}]", times(j), bs.t_min, bs.t_max));
    }
}

}  // namespace

BasisSystem make_basis(double t_min, double t_max, int num_basis, int order) {
    if (order < 2) throw std::invalid_argument("make_basis: order must be >= 2");
    if (num_basis < order)
        throw std::invalid_argument(fmt::format(
            "make_basis: num_basis ({}) must be >= order ({})", num_basis, order));
    if (!(t_max > t_min)) throw std::invalid_argument("make_basis: degenerate domain");

    BasisSystem bs;
    bs.order = order;
    bs.num_basis = num_basis;
    bs.t_min = t_min;
    bs.t_max = t_max;
    const int n_interior = num_basis - order;
    bs.knots.resize(num_basis + order);
    for (int i = 0; i < order; ++i) {
        bs.knots(i) = t_min;
        bs.knots(num_basis + i) = t_max;
    }
    for (int i = 1; i <= n_interior; ++i)
        bs.knots(order - 1 + i) =
            t_min + (t_max - t_min) * static_cast<double>(i) / (n_interior + 1);
    return bs;
}

Eigen::MatrixXd eval_matrix(const BasisSystem& bs, const Eigen::VectorXd& times) {
    check_domain(bs, times);
    Eigen::MatrixXd out(bs.num_basis, times.size());
    for (Eigen::Index j = 0; j < times.size(); ++j)
        basis_at(bs, times(j), out.col(j).data(), nullptr, nullptr);
    return out;
}

Eigen::MatrixXd deriv_matrix(const BasisSystem& bs, const Eigen::VectorXd& times, int d) {
    if (d != 1 && d != 2) throw std::invalid_argument("deriv_matrix: d must be 1 or 2");
    if (bs.order <= d)
        throw std::invalid_argument(fmt::format(
            "deriv_matrix: order ({}) must exceed derivative order ({})", bs.order, d));
    check_domain(bs, times);
    Eigen::MatrixXd out(bs.num_basis, times.size());
    for (Eigen::Index j = 0; j < times.size(); ++j) {
        if (d == 1)
            basis_at(bs, times(j), nullptr, out.col(j).data(), nullptr);
        else
            basis_at(bs, times(j), nullptr, nullptr, out.col(j).data());
    }
    return out;
}

double curvature_penalty(const BasisSystem& bs, const Eigen::VectorXd& coeffs, int quad_points) {
    if (quad_points < 2) throw std::invalid_argument("curvature_penalty: need Q >= 2");
    if (coeffs.size() != bs.num_basis)
        throw std::invalid_argument("curvature_penalty: coefficient length mismatch");
    Eigen::VectorXd times(quad_points);
    for (int q = 0; q < quad_points; ++q)
        times(q) = bs.t_min + (bs.t_max - bs.t_min) * static_cast<double>(q) / (quad_points - 1);
    const Eigen::MatrixXd d2 = deriv_matrix(bs, times, 2);
    const Eigen::RowVectorXd curve_d2 = coeffs.transpose() * d2;
    return curve_d2.tail(quad_points - 1).squaredNorm();
}

double coeff_diff_penalty(const Eigen::VectorXd& coeffs) {
    if (coeffs.size() < 3)
        throw std::invalid_argument("coeff_diff_penalty: need at least 3 coefficients");
    double sum = 0.0;
    for (Eigen::Index k = 2; k < coeffs.size(); ++k) {
        const double d = coeffs(k) - 2.0 * coeffs(k - 1) + coeffs(k - 2);
        sum += d * d;
    }
    return sum;
}

Eigen::MatrixXd second_difference_matrix(int num_basis) {
    if (num_basis < 3)
        throw std::invalid_argument("second_difference_matrix: need at least 3 basis functions");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(num_basis - 2, num_basis);
    for (int k = 0; k < num_basis - 2; ++k) {
        d(k, k) = 1.0;
        d(k, k + 1) = -2.0;
        d(k, k + 2) = 1.0;
    }
    return d;
}

Eigen::VectorXd greville_abscissae(const BasisSystem& bs) {
    Eigen::VectorXd g(bs.num_basis);
    for (int k = 0; k < bs.num_basis; ++k)
        g(k) = bs.knots.segment(k + 1, bs.order - 1).mean();
    return g;
}

}  // namespace fosnet
