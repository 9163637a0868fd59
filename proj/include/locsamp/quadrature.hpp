#pragma once

// Adaptive Gauss-Kronrod quadrature in one and two dimensions, backed by
// Boost.Math, with a hard failure when the error estimate misses the target.

#include "locsamp/core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

namespace locsamp {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    unsigned max_depth = 20;
};

template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    require(a <= b, "integrate: lower limit exceeds upper limit");
    if (a == b) return 0.0;
    double error = 0.0;
    double l1 = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, opt.max_depth, opt.rel_tol, &error, &l1);
    if (!std::isfinite(value) || (error > opt.abs_tol && error > opt.rel_tol * l1)) {
        std::ostringstream msg;
        msg << "quadrature on [" << a << ", " << b << "] did not converge (value " << value
            << ", error estimate " << error << ")";
        throw NumericalError(msg.str());
    }
    return value;
}

/// Nested quadrature over the rectangle [ax,bx] x [ay,by].
template <class F>
double integrate2(F&& f, double ax, double bx, double ay, double by, const QuadratureOptions& opt = {}) {
    QuadratureOptions inner = opt;
    inner.abs_tol = opt.abs_tol / (10.0 * std::max(1.0, bx - ax));
    return integrate([&](double x) { return integrate([&](double y) { return f(x, y); }, ay, by, inner); },
                     ax, bx, opt);
}

/// Integral over [a, b] with 0 < a, taken in the variable u = log s; integrands
/// that behave like 1/s near a tiny lower limit stay smooth in u.
template <class F>
double integrate_log_scale(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    require(a > 0.0 && a <= b, "integrate_log_scale: need 0 < a <= b");
    if (a == b) return 0.0;
    return integrate([&](double u) {
        const double s = std::exp(u);
        return f(s) * s;
    }, std::log(a), std::log(b), opt);
}

}  // namespace locsamp
