#pragma once

// Closed-form Poincare-constant bounds along the stochastic localization
// path, plus empirical Rayleigh-quotient lower bounds for 1D densities.

#include "locsamp/processes.hpp"
#include "locsamp/quadrature.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace locsamp {

enum class BoundFormula {
    rgd_kernel,              // restricted Gaussian dynamics kernel
    variance_conservation,   // exp(int theta)
    concatenation,           // from an initial bound at s0 up to 2L
    subgaussian_initial,     // short-time bound for sub-Gaussian targets
    subgaussian_final,       // minimized over s0
    subgaussian_simplified,  // the cruder closed form with ((s+1)/s)^(Lbar+1)
    mixture_identity,        // isotropic unit-covariance mixture
    mixture_general,         // general covariance mixture
};

inline std::string to_string(BoundFormula f) {
    switch (f) {
        case BoundFormula::rgd_kernel: return "rgd_kernel";
        case BoundFormula::variance_conservation: return "variance_conservation";
        case BoundFormula::concatenation: return "concatenation";
        case BoundFormula::subgaussian_initial: return "subgaussian_initial";
        case BoundFormula::subgaussian_final: return "subgaussian_final";
        case BoundFormula::subgaussian_simplified: return "subgaussian_simplified";
        case BoundFormula::mixture_identity: return "mixture_identity";
        case BoundFormula::mixture_general: return "mixture_general";
    }
    return "unknown";
}

/// A bound value; +inf is a legitimate answer and then `reason` says why.
struct PIBound {
    double value = kInf;
    BoundFormula formula = BoundFormula::rgd_kernel;
    std::vector<std::pair<std::string, double>> inputs;
    std::string reason;

    bool finite() const { return std::isfinite(value); }

    double input(const std::string& key) const {
        for (const auto& [k, v] : inputs)
            if (k == key) return v;
        throw ValidationError("PIBound: no input named '" + key + "'");
    }
};

namespace detail {
inline PIBound infinite_bound(BoundFormula f, std::vector<std::pair<std::string, double>> inputs, std::string reason) {
    return {kInf, f, std::move(inputs), std::move(reason)};
}
}  // namespace detail

/// exp(int_0^T theta_s ds). A profile with s * theta(s) bounded away from zero
/// near the origin is reported as divergent.
inline PIBound conservation_bound(const SmoothnessProfile& theta, double T) {
    require(T >= 0.0 && std::isfinite(T), "conservation_bound: T must be finite and >= 0");
    std::vector<std::pair<std::string, double>> in{{"T", T}};
    if (theta.is_constant()) {
        in.emplace_back("theta", theta.constant_value());
        return {std::exp(theta.constant_value() * T), BoundFormula::variance_conservation, in, ""};
    }
    if (T == 0.0) return {1.0, BoundFormula::variance_conservation, in, ""};
    const double probe = 1e-300;
    if (probe * theta(probe) > 1e-3)
        return detail::infinite_bound(BoundFormula::variance_conservation, in,
                                      "integral of theta diverges at s = 0 (theta grows like 1/s)");
    // tanh-sinh copes with integrable endpoint singularities such as s^(-1/2).
    double error = 0.0;
    double l1 = 0.0;
    const double integral = boost::math::quadrature::tanh_sinh<double>().integrate(
        [&](double s) { return theta(s); }, 0.0, T, 1e-12, &error, &l1);
    if (!std::isfinite(integral) || error > 1e-8 * std::max(1.0, l1))
        return detail::infinite_bound(BoundFormula::variance_conservation, in, "integral of theta did not converge");
    return {std::exp(integral), BoundFormula::variance_conservation, in, ""};
}

/// ((s0 + T)/s0) exp(int_{s0}^{T+s0} L_s/(s(1+s)) ds).
inline PIBound pi_rgd_bound(double s0, double T, const SmoothnessProfile& profile) {
    require(s0 > 0.0 && T > 0.0, "pi_rgd_bound: need s0 > 0 and T > 0");
    const double value = (s0 + T) / s0 * std::exp(profile.weighted_integral(s0, T + s0));
    return {value, BoundFormula::rgd_kernel, {{"s0", s0}, {"T", T}}, ""};
}

/// Largest s for which the short-time sub-Gaussian bound is finite.
inline double subgaussian_threshold(double lambda) {
    require(lambda >= 0.0 && std::isfinite(lambda), "sub-Gaussian parameter must be finite and >= 0");
    return lambda == 0.0 ? kInf : std::log(2.0) / (4.0 * lambda * lambda);
}

/// 1/(2 - exp(4 s lambda^2)).
inline PIBound pi_initial_subgaussian(double s, double lambda) {
    require(s >= 0.0, "pi_initial_subgaussian: s must be >= 0");
    std::vector<std::pair<std::string, double>> in{{"s", s}, {"lambda", lambda}};
    if (s >= subgaussian_threshold(lambda))
        return detail::infinite_bound(BoundFormula::subgaussian_initial, in, "s is at or above log(2)/(4 lambda^2)");
    const double denom = 1.0 - std::expm1(4.0 * s * lambda * lambda);
    if (!(denom > 0.0))
        return detail::infinite_bound(BoundFormula::subgaussian_initial, in, "2 - exp(4 s lambda^2) <= 0");
    return {1.0 / denom, BoundFormula::subgaussian_initial, in, ""};
}

/// (2/s0) c_init exp(int_{s0}^{2L} L_s/(s(1+s)) ds), valid for s0 <= 2L.
inline PIBound pi_concatenation(double L, double s0, const PIBound& c_init, const SmoothnessProfile& profile) {
    require(L > 0.0 && s0 > 0.0, "pi_concatenation: need L > 0 and s0 > 0");
    require(s0 <= 2.0 * L, "pi_concatenation: s0 must not exceed 2L");
    std::vector<std::pair<std::string, double>> in{{"L", L}, {"s0", s0}, {"c_init", c_init.value}};
    if (!c_init.finite())
        return detail::infinite_bound(BoundFormula::concatenation, in, "initial bound is infinite: " + c_init.reason);
    const double value = 2.0 / s0 * c_init.value * std::exp(profile.weighted_integral(s0, 2.0 * L));
    return {value, BoundFormula::concatenation, in, ""};
}

namespace detail {
inline double subgaussian_objective(double s0, double lambda, double L, const SmoothnessProfile& profile) {
    const PIBound init = pi_initial_subgaussian(s0, lambda);
    if (!init.finite()) return kInf;
    return pi_concatenation(L, s0, init, profile).value;
}
}  // namespace detail

/// min over s0 in (0, min(log 2/(4 lambda^2), 2L)] of the concatenated
/// bound; log-spaced grid then Brent refinement. The argmin is reported as
/// input "s0".
inline PIBound pi_subgaussian_final(double lambda, double L, const SmoothnessProfile& profile, std::size_t grid = 200) {
    require(lambda >= 0.0 && std::isfinite(lambda), "pi_subgaussian_final: lambda must be finite and >= 0");
    require(L > 0.0 && std::isfinite(L), "pi_subgaussian_final: L must be positive");
    require(grid >= 3, "pi_subgaussian_final: grid needs at least 3 points");
    const double upper = std::min(subgaussian_threshold(lambda), 2.0 * L);
    std::vector<std::pair<std::string, double>> in{{"lambda", lambda}, {"L", L}, {"upper", upper}};
    const double lo = std::log(upper) - std::log(1e8);
    const double hi = std::log(upper);
    std::vector<double> us(grid);
    std::vector<double> vals(grid);
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid; ++i) {
        us[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
        vals[i] = detail::subgaussian_objective(std::exp(us[i]), lambda, L, profile);
        if (vals[i] < vals[best]) best = i;
    }
    if (!std::isfinite(vals[best]))
        return detail::infinite_bound(BoundFormula::subgaussian_final, in, "objective infinite on the whole grid");
    double s_best = std::exp(us[best]);
    double v_best = vals[best];
    const double a = us[best == 0 ? 0 : best - 1];
    const double b = us[std::min(best + 1, grid - 1)];
    if (b > a) {
        const auto [u, v] = boost::math::tools::brent_find_minima(
            [&](double u) { return detail::subgaussian_objective(std::exp(u), lambda, L, profile); }, a, b, 40);
        if (v < v_best) {
            v_best = v;
            s_best = std::exp(u);
        }
    }
    in.emplace_back("s0", s_best);
    return {v_best, BoundFormula::subgaussian_final, in, ""};
}

/// 2/(2 - exp(4 s lambda^2)) ((s+1)/s)^(Lbar+1) for a constant profile Lbar;
/// dominates the concatenated bound at the same s.
inline PIBound pi_subgaussian_simplified(double s, double lambda, double Lbar) {
    require(s > 0.0 && Lbar >= 0.0, "pi_subgaussian_simplified: need s > 0 and Lbar >= 0");
    std::vector<std::pair<std::string, double>> in{{"s", s}, {"lambda", lambda}, {"Lbar", Lbar}};
    const PIBound init = pi_initial_subgaussian(s, lambda);
    if (!init.finite()) return detail::infinite_bound(BoundFormula::subgaussian_simplified, in, init.reason);
    const double value = 2.0 * init.value * std::pow((s + 1.0) / s, Lbar + 1.0);
    return {value, BoundFormula::subgaussian_simplified, in, ""};
}

/// (T+1) exp((1 - 1/(T+1)) R^2) / (T - max{1, R^2 - 1}) for T above the pole.
inline double mixture_internal_objective(double R, double T) {
    const double m = std::max(1.0, R * R - 1.0);
    if (!(T > m)) return kInf;
    return (T + 1.0) * std::exp((1.0 - 1.0 / (T + 1.0)) * R * R) / (T - m);
}

/// Grid minimum of mixture_internal_objective over T in (m, 100 max(1, m)].
inline std::pair<double, double> mixture_internal_minimum(double R, std::size_t grid = 4000) {
    const double m = std::max(1.0, R * R - 1.0);
    const double top = 100.0 * std::max(1.0, m);
    double best_t = top;
    double best = mixture_internal_objective(R, top);
    for (std::size_t i = 1; i <= grid; ++i) {
        const double T = m + (top - m) * std::pow(static_cast<double>(i) / static_cast<double>(grid), 2.0);
        const double v = mixture_internal_objective(R, T);
        if (v < best) {
            best = v;
            best_t = T;
        }
    }
    return {best, best_t};
}

/// Mixture of N(c_i, Id) with |c_i| <= R: min(e^{R^2}, internal grid minimum).
inline PIBound pi_mixture_identity(double R) {
    require(R >= 0.0 && std::isfinite(R), "pi_mixture_identity: R must be finite and >= 0");
    const auto [internal, at] = mixture_internal_minimum(R);
    const double value = std::min(std::exp(R * R), internal);
    return {value, BoundFormula::mixture_identity, {{"R", R}, {"internal_min", internal}, {"internal_argmin", at}}, ""};
}

/// Mixture of N(c_i, Sigma): |Sigma|_op exp(R^2 / lambda_min(Sigma)).
inline PIBound pi_mixture_general(double R, const Matrix& sigma) {
    require(R >= 0.0 && std::isfinite(R), "pi_mixture_general: R must be finite and >= 0");
    const SpdSpectrum spec = spd_spectrum(sigma, "Sigma");
    const double value = spec.lambda_max * std::exp(R * R / spec.lambda_min);
    return {value, BoundFormula::mixture_general,
            {{"R", R}, {"lambda_min", spec.lambda_min}, {"lambda_max", spec.lambda_max}}, ""};
}

/// Unnormalized 1D density on [lo, hi]; moments are precomputed by quadrature.
class Density1D {
public:
    Density1D(std::function<double(double)> log_density, double lo, double hi)
        : log_density_(std::move(log_density)), lo_(lo), hi_(hi) {
        require(lo < hi && std::isfinite(lo) && std::isfinite(hi), "Density1D: need finite lo < hi");
        double peak = -kInf;
        for (int i = 0; i <= 2000; ++i) peak = std::max(peak, log_density_(lo + (hi - lo) * i / 2000.0));
        require(std::isfinite(peak), "Density1D: log density is not finite anywhere on the grid");
        shift_ = peak;
        const double z = integrate([&](double x) { return std::exp(log_density_(x) - shift_); }, lo_, hi_);
        require(z > 0.0, "Density1D: zero mass");
        log_z_ = std::log(z) + shift_;
        mean_ = expect([](double x) { return x; });
        sd_ = std::sqrt(expect([&](double x) { return (x - mean_) * (x - mean_); }));
    }

    double pdf(double x) const { return std::exp(log_density_(x) - log_z_); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double mean() const { return mean_; }
    double sd() const { return sd_; }

    template <class F>
    double expect(F&& f) const {
        QuadratureOptions opt;
        opt.abs_tol = 1e-11;
        return integrate([&](double x) { return f(x) * pdf(x); }, lo_, hi_, opt);
    }

private:
    std::function<double(double)> log_density_;
    double lo_, hi_;
    double shift_ = 0.0;
    double log_z_ = 0.0;
    double mean_ = 0.0;
    double sd_ = 1.0;
};

/// Var f / E[f'^2]; a lower bound on the Poincare constant for any test f.
inline double rayleigh_quotient(const Density1D& rho, const std::function<double(double)>& f,
                                const std::function<double(double)>& fprime) {
    const double energy = rho.expect([&](double x) {
        const double g = fprime(x);
        return g * g;
    });
    if (!(energy > 1e-14)) throw ValidationError("rayleigh_quotient: test function has zero Dirichlet energy");
    const double m = rho.expect(f);
    const double var = rho.expect([&](double x) {
        const double v = f(x) - m;
        return v * v;
    });
    return var / energy;
}

enum class TestFamily { polynomial, sigmoid, all };

struct RayleighGrid {
    int max_degree = 6;
    int sigmoid_scales = 25;  // a log-spaced in [0.1, 10] / sd
    int sigmoid_shifts = 21;  // b evenly spaced in mean +- 2 sd
};

/// Largest Rayleigh quotient over span{((x-m)/sd)^k : 1 <= k <= max_degree}
/// (a generalized eigenproblem) and/or tanh(a (x - b)) over a grid.
inline double rayleigh_quotient_lb(const Density1D& rho, TestFamily family = TestFamily::all,
                                   const RayleighGrid& grid = {}) {
    double best = 0.0;
    const double m = rho.mean();
    const double sd = rho.sd();
    if (family != TestFamily::sigmoid) {
        const int n = grid.max_degree;
        require(n >= 1, "rayleigh_quotient_lb: max_degree must be >= 1");
        Vector means(n);
        for (int i = 0; i < n; ++i) means(i) = rho.expect([&](double x) { return std::pow((x - m) / sd, i + 1); });
        Matrix cov(n, n);
        Matrix energy(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                cov(i, j) = cov(j, i) = rho.expect([&](double x) {
                    const double z = (x - m) / sd;
                    return (std::pow(z, i + 1) - means(i)) * (std::pow(z, j + 1) - means(j));
                });
                energy(i, j) = energy(j, i) = rho.expect([&](double x) {
                    const double z = (x - m) / sd;
                    return (i + 1) * std::pow(z, i) * (j + 1) * std::pow(z, j) / (sd * sd);
                });
            }
        }
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(cov, energy);
        if (es.info() != Eigen::Success) throw NumericalError("rayleigh_quotient_lb: generalized eigensolver failed");
        best = std::max(best, es.eigenvalues().maxCoeff());
    }
    if (family != TestFamily::polynomial) {
        for (int i = 0; i < grid.sigmoid_scales; ++i) {
            const double t = grid.sigmoid_scales == 1 ? 0.5 : static_cast<double>(i) / (grid.sigmoid_scales - 1);
            const double a = 0.1 * std::pow(100.0, t) / sd;
            for (int j = 0; j < grid.sigmoid_shifts; ++j) {
                const double u = grid.sigmoid_shifts == 1 ? 0.5 : static_cast<double>(j) / (grid.sigmoid_shifts - 1);
                const double b = m + sd * (4.0 * u - 2.0);
                const double q = rayleigh_quotient(
                    rho, [a, b](double x) { return std::tanh(a * (x - b)); },
                    [a, b](double x) {
                        const double c = std::cosh(a * (x - b));
                        return a / (c * c);
                    });
                best = std::max(best, q);
            }
        }
    }
    return best;
}

}  // namespace locsamp
