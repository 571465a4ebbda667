#include "fosnet/interp.hpp"

#include <stdexcept>

namespace fosnet {

CubicSpline::CubicSpline(const Eigen::VectorXd& x, const Eigen::VectorXd& y) : x_(x), y_(y) {
    const auto n = x.size();
    if (n < 2 || y.size() != n)
        throw std::invalid_argument("CubicSpline: need >= 2 matching nodes");
    m_ = Eigen::VectorXd::Zero(n);
    if (n == 2) return;

    // tridiagonal system for interior second derivatives, natural ends
    const auto k = n - 2;
    Eigen::VectorXd diag(k), off(k - 1 >= 0 ? k - 1 : 0), rhs(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double h0 = x(i + 1) - x(i);
        const double h1 = x(i + 2) - x(i + 1);
        diag(i) = 2.0 * (h0 + h1);
        if (i + 1 < k) off(i) = h1;
        rhs(i) = 6.0 * ((y(i + 2) - y(i + 1)) / h1 - (y(i + 1) - y(i)) / h0);
    }
    // Thomas algorithm
    for (Eigen::Index i = 1; i < k; ++i) {
        const double w = off(i - 1) / diag(i - 1);
        diag(i) -= w * off(i - 1);
        rhs(i) -= w * rhs(i - 1);
    }
    m_(k) = rhs(k - 1) / diag(k - 1);
    for (Eigen::Index i = k - 1; i >= 1; --i)
        m_(i) = (rhs(i - 1) - off(i - 1) * m_(i + 1)) / diag(i - 1);
}

Eigen::Index CubicSpline::segment(double t) const {
    if (t < x_(0) || t > x_(x_.size() - 1))
        throw std::invalid_argument("CubicSpline: query outside node range");
    Eigen::Index lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (x_(mid) <= t)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

double CubicSpline::value(double t) const {
    const auto i = segment(t);
    const double h = x_(i + 1) - x_(i);
    const double a = (x_(i + 1) - t) / h;
    const double b = (t - x_(i)) / h;
    return a * y_(i) + b * y_(i + 1) +
           ((a * a * a - a) * m_(i) + (b * b * b - b) * m_(i + 1)) * h * h / 6.0;
}

double CubicSpline::second_derivative(double t) const {
    const auto i = segment(t);
    const double h = x_(i + 1) - x_(i);
    const double a = (x_(i + 1) - t) / h;
    const double b = (t - x_(i)) / h;
    return a * m_(i) + b * m_(i + 1);
}

Eigen::MatrixXd interpolate_rows(const Eigen::MatrixXd& rows, const Eigen::VectorXd& from_grid,
                                 const Eigen::VectorXd& times) {
    Eigen::MatrixXd out(rows.rows(), times.size());
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        const CubicSpline spline(from_grid, rows.row(r).transpose());
        for (Eigen::Index j = 0; j < times.size(); ++j) out(r, j) = spline.value(times(j));
    }
    return out;
}

}  // namespace fosnet
