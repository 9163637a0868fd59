#pragma once

// The identity battery behind `locsamp verify`: every analytic identity the
// sampler relies on, checked numerically on fixed grids.

#include "locsamp/diagnostics.hpp"
#include "locsamp/processes.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace locsamp {

inline GaussianMixture symmetric_mixture_1d() {
    return GaussianMixture({0.5, 0.5}, {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)},
                           Matrix::Identity(1, 1));
}

inline GaussianMixture skewed_mixture_2d() {
    Vector c1(2), c2(2);
    c1 << 1.0, 0.0;
    c2 << -0.5, 0.75;
    Matrix cov(2, 2);
    cov << 1.0, 0.3, 0.3, 0.8;
    return GaussianMixture({0.3, 0.7}, {c1, c2}, cov);
}

inline CheckReport to_check(const PoissonTailReport& p) {
    return {"poisson_tail", {{"lambda", p.lambda}, {"s", p.s}}, {p.exact}, {p.bound}, 0.0, p.pass};
}

/// chi^2 between N(x, s2) and N(y, s2) in closed form against quadrature,
/// compared on the Renyi-2 scale.
inline CheckReport chi2_consistency_check(double x, double y, double sigma2, double tol = 1e-6) {
    const double closed = chi2_gaussians(Vector::Constant(1, x), Vector::Constant(1, y), sigma2);
    const double sd = std::sqrt(sigma2);
    const auto pdf = [sigma2](double m) {
        return [m, sigma2](double t) { return std::exp(-(t - m) * (t - m) / (2.0 * sigma2)) / std::sqrt(2.0 * M_PI * sigma2); };
    };
    const double lo = std::min(x, y) - 12.0 * sd;
    const double hi = std::max(x, y) + 12.0 * sd;
    const DivergenceReport quad = chi2_quadrature(pdf(x), pdf(y), lo, hi);
    const double lhs = std::log1p(closed);
    const double rhs = renyi2_from_chi2(quad).value;
    return {"chi2_gaussian", {{"x", x}, {"y", y}, {"sigma2", sigma2}}, {lhs}, {rhs}, tol, std::abs(lhs - rhs) <= tol};
}

/// Runs every identity check; `seed` drives the random kernel-equivalence draws.
inline std::vector<CheckReport> identity_battery(std::uint64_t seed = 0) {
    std::vector<CheckReport> out;
    const GaussianMixture m1 = symmetric_mixture_1d();
    const GaussianMixture m2 = skewed_mixture_2d();

    for (double s : {0.1, 1.0, 5.0}) {
        for (double y : {-2.0, 0.0, 0.5, 3.0}) {
            const Vector yy = Vector::Constant(1, y * s);
            out.push_back(verify_tweedie(m1, SLTime(s), yy));
            out.push_back(verify_hessian_identity(m1, SLTime(s), yy));
            out.push_back(covariance_sandwich_check(mixture_ou_profile(m1), m1, SLTime(s), yy));
        }
    }
    for (double s : {0.5, 2.0}) {
        Vector y(2);
        y << 0.4 * s, -0.3 * s;
        out.push_back(verify_tweedie(m2, SLTime(s), y));
        out.push_back(verify_hessian_identity(m2, SLTime(s), y));
    }

    Rng gen = make_stream(seed, 0, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Potential gauss = standard_gaussian_potential(1);
    const Potential mix = mixture_potential(m1);
    for (const Potential* p : {&gauss, &mix}) {
        for (int i = 0; i < 20; ++i) {
            const double s0 = std::pow(10.0, -3.0 + 2.0 * unit(gen));
            const double T = 0.1 + 4.9 * unit(gen);
            const double x_s0 = std::sqrt(s0 * (1.0 + s0)) * std::normal_distribution<double>()(gen);
            const double x_T = std::sqrt(T * (1.0 + T)) * std::normal_distribution<double>()(gen);
            CheckReport r = verify_rgo_equivalence(*p, s0, T, x_s0, x_T);
            r.inputs.emplace_back(p->name() == "gaussian" ? "target_gaussian" : "target_mixture", 1.0);
            out.push_back(std::move(r));
        }
    }

    for (double gap : {0.5, 1.0, 1.5})
        out.push_back(chi2_consistency_check(0.0, gap, 1.0));
    out.push_back(chi2_consistency_check(0.3, -0.2, 0.5));

    for (double lambda : {1.0, 5.0, 20.0})
        for (double s : {1.0, 3.0, 10.0}) out.push_back(to_check(poisson_tail_check(lambda, s)));

    const std::vector<double> times{0.0, 0.1, 0.5, 1.0, 2.0, 5.0};
    out.push_back(ou_kl_decay_check(Vector::Constant(1, 2.0), 0.5, times));
    out.push_back(ou_kl_decay_check(Vector::Constant(1, 0.0), 3.0, times));
    Vector mean2(2);
    mean2 << 1.0, -1.0;
    out.push_back(ou_kl_decay_check(mean2, 2.0, times));

    std::vector<Vector> pts;
    for (double x : {-2.0, -0.5, 0.0, 1.0, 2.5}) pts.push_back(Vector::Constant(1, x));
    for (double t : {0.1, 1.0, 3.0}) out.push_back(sl_ou_marginal_check(m1, OUTime(t), pts));
    return out;
}

}  // namespace locsamp
