#pragma once

// Stochastic-localization (SL) and Ornstein-Uhlenbeck (OU) time scales, SL
// forward sampling, tilted posteriors, and numerical checks of the score and
// covariance identities along the SL flow.

#include "locsamp/diagnostics.hpp"
#include "locsamp/potential.hpp"
#include "locsamp/quadrature.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace locsamp {

/// SL time s >= 0.
struct SLTime {
    double s;
    explicit SLTime(double value) : s(value) {
        require(std::isfinite(value) && value >= 0.0, "SL time must be finite and non-negative");
    }
};

/// OU time t >= 0.
struct OUTime {
    double t;
    explicit OUTime(double value) : t(value) {
        require(std::isfinite(value) && value >= 0.0, "OU time must be finite and non-negative");
    }
};

/// s = e^{-2t} / (1 - e^{-2t}).
inline SLTime sl_time_from_ou(OUTime t) {
    require(t.t > 0.0, "sl_time_from_ou: t = 0 maps to infinite s");
    return SLTime(1.0 / std::expm1(2.0 * t.t));
}

/// t = log sqrt((s + 1) / s).
inline OUTime ou_time_from_sl(SLTime s) {
    require(s.s > 0.0, "ou_time_from_sl: s = 0 maps to infinite t");
    return OUTime(0.5 * std::log1p(1.0 / s.s));
}

/// The map s -> L_s. Either a constant or an arbitrary non-negative function.
class SmoothnessProfile {
public:
    static SmoothnessProfile constant(double value) {
        require(value >= 0.0 && std::isfinite(value), "smoothness profile constant must be finite and >= 0");
        SmoothnessProfile p;
        p.constant_ = value;
        p.label_ = "constant";
        return p;
    }

    static SmoothnessProfile function(std::function<double(double)> f, std::string label = "function") {
        SmoothnessProfile p;
        p.fn_ = std::make_shared<const std::function<double(double)>>(std::move(f));
        p.label_ = std::move(label);
        return p;
    }

    double operator()(double s) const {
        if (!fn_) return constant_;
        const double v = (*fn_)(s);
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("smoothness profile '" + label_ + "' returned an invalid value");
        return v;
    }

    bool is_constant() const { return !fn_; }
    double constant_value() const { return constant_; }
    const std::string& label() const { return label_; }

    /// int_a^b L_s / (s (1 + s)) ds; closed form for constants.
    double weighted_integral(double a, double b) const {
        require(a > 0.0 && a <= b, "weighted_integral: need 0 < a <= b");
        if (is_constant()) return constant_ * ((std::log(b) - std::log1p(b)) - (std::log(a) - std::log1p(a)));
        return weighted_integral_quadrature(a, b);
    }

    double weighted_integral_quadrature(double a, double b) const {
        require(a > 0.0 && a <= b, "weighted_integral: need 0 < a <= b");
        QuadratureOptions opt;
        opt.abs_tol = 1e-13;
        opt.rel_tol = 1e-14;
        return integrate_log_scale([this](double s) { return (*this)(s) / (s * (1.0 + s)); }, a, b, opt);
    }

private:
    double constant_ = 0.0;
    std::shared_ptr<const std::function<double(double)>> fn_;
    std::string label_;
};

/// Analytic L_s for a Gaussian mixture: the OU marginal at t(s) is again a
/// mixture with centers scaled by a = sqrt(s/(1+s)) and covariance
/// a^2 Sigma + (1 - a^2) Id, whose smoothness follows mixture_smoothness.
inline SmoothnessProfile mixture_ou_profile(const GaussianMixture& m) {
    const double R = m.radius();
    const double lmin = m.lambda_min();
    return SmoothnessProfile::function([R, lmin](double s) {
        if (s <= 0.0) return std::max(1.0, R * R / lmin - 1.0) / lmin;
        const double a2 = s / (1.0 + s);
        const double lt = a2 * lmin + (1.0 - a2);
        return std::max(1.0, a2 * R * R / lt - 1.0) / lt;
    }, "mixture-ou");
}

/// X(s) = s x + B(s): returns s x + N(0, s Id).
template <std::uniform_random_bit_generator Gen>
Vector sl_forward_sample(const Vector& x, SLTime s, Gen& gen) {
    if (s.s == 0.0) return Vector::Zero(x.size());
    return s.s * x + std::sqrt(s.s) * standard_normal_vector(x.size(), gen);
}

/// log nu_s(x | y) up to a constant: -V(x) - |s x - y|^2 / (2 s).
inline double posterior_unnorm_logdensity(const Potential& p, SLTime s, const Vector& y, const Vector& x) {
    require(s.s > 0.0, "posterior_unnorm_logdensity: s must be positive");
    return -p.value(x) - (s.s * x - y).squaredNorm() / (2.0 * s.s);
}

/// log of the SL marginal xi_s: mixture of N(s c_i, s^2 Sigma + s Id).
inline double marginal_log_density_mixture(const GaussianMixture& m, SLTime s, const Vector& y) {
    require(s.s > 0.0, "marginal_density_mixture: s must be positive");
    return m.affine_noised(s.s, s.s).log_density(y);
}

inline double marginal_density_mixture(const GaussianMixture& m, SLTime s, const Vector& y) {
    return std::exp(marginal_log_density_mixture(m, s, y));
}

/// log of the OU marginal: mixture of N(e^{-t} c_i, e^{-2t} Sigma + (1 - e^{-2t}) Id).
inline double ou_marginal_log_density_mixture(const GaussianMixture& m, OUTime t, const Vector& x) {
    const double a = std::exp(-t.t);
    return m.affine_noised(a, -std::expm1(-2.0 * t.t)).log_density(x);
}

struct PosteriorMoments {
    Vector mean;
    Matrix covariance;
};

namespace detail {

// Axis-aligned box carrying essentially all posterior mass of nu_s(.|y) for a
// mixture target: each component's posterior is Gaussian with precision
// Sigma^{-1} + s Id.
inline std::pair<Vector, Vector> posterior_box(const GaussianMixture& m, double s, const Vector& y, double width) {
    const Eigen::Index d = m.dim();
    const Matrix prec_prior = m.covariance().inverse();
    const Matrix cov_post = (prec_prior + s * Matrix::Identity(d, d)).inverse();
    Vector lo = Vector::Constant(d, kInf);
    Vector hi = Vector::Constant(d, -kInf);
    for (const auto& c : m.centers()) {
        const Vector mu = cov_post * (prec_prior * c + y);
        for (Eigen::Index j = 0; j < d; ++j) {
            const double sd = std::sqrt(cov_post(j, j));
            lo[j] = std::min(lo[j], mu[j] - width * sd);
            hi[j] = std::max(hi[j], mu[j] + width * sd);
        }
    }
    return {lo, hi};
}

}  // namespace detail

/// Mean and covariance of nu_s(.|y) by quadrature of the unnormalized
/// posterior log-density (d <= 2).
inline PosteriorMoments posterior_moments_quadrature(const GaussianMixture& m, SLTime s, const Vector& y) {
    require(m.dim() <= 2, "posterior quadrature supports d <= 2");
    require(s.s > 0.0, "posterior quadrature: s must be positive");
    const Potential p = mixture_potential(m);
    const auto [lo, hi] = detail::posterior_box(m, s.s, y, 12.0);
    // Reference level: the largest log-density over component posterior means.
    double ref = -kInf;
    {
        const auto [clo, chi] = detail::posterior_box(m, s.s, y, 0.0);
        for (int k = 0; k < 5; ++k) {
            Vector probe = clo + (chi - clo) * (k / 4.0);
            ref = std::max(ref, posterior_unnorm_logdensity(p, s, y, probe));
        }
    }
    QuadratureOptions opt;
    opt.abs_tol = 1e-11;
    opt.rel_tol = 1e-13;
    PosteriorMoments out;
    if (m.dim() == 1) {
        Vector x(1);
        auto w = [&](double t) {
            x[0] = t;
            return std::exp(posterior_unnorm_logdensity(p, s, y, x) - ref);
        };
        const double z = integrate(w, lo[0], hi[0], opt);
        const double m1 = integrate([&](double t) { return t * w(t); }, lo[0], hi[0], opt) / z;
        const double m2 = integrate([&](double t) { return (t - m1) * (t - m1) * w(t); }, lo[0], hi[0], opt) / z;
        out.mean = Vector::Constant(1, m1);
        out.covariance = Matrix::Constant(1, 1, m2);
        return out;
    }
    Vector x(2);
    auto w = [&](double a, double b) {
        x << a, b;
        return std::exp(posterior_unnorm_logdensity(p, s, y, x) - ref);
    };
    opt.abs_tol = 1e-10;
    opt.rel_tol = 1e-12;
    const double z = integrate2(w, lo[0], hi[0], lo[1], hi[1], opt);
    Vector mean(2);
    mean[0] = integrate2([&](double a, double b) { return a * w(a, b); }, lo[0], hi[0], lo[1], hi[1], opt) / z;
    mean[1] = integrate2([&](double a, double b) { return b * w(a, b); }, lo[0], hi[0], lo[1], hi[1], opt) / z;
    Matrix cov(2, 2);
    cov(0, 0) = integrate2([&](double a, double b) { return (a - mean[0]) * (a - mean[0]) * w(a, b); },
                           lo[0], hi[0], lo[1], hi[1], opt) / z;
    cov(1, 1) = integrate2([&](double a, double b) { return (b - mean[1]) * (b - mean[1]) * w(a, b); },
                           lo[0], hi[0], lo[1], hi[1], opt) / z;
    cov(0, 1) = cov(1, 0) = integrate2([&](double a, double b) { return (a - mean[0]) * (b - mean[1]) * w(a, b); },
                                       lo[0], hi[0], lo[1], hi[1], opt) / z;
    out.mean = mean;
    out.covariance = cov;
    return out;
}

/// Central-difference gradient with step 1e-4 (1 + |y_j|).
template <class F>
Vector fd_gradient(F&& f, const Vector& y) {
    Vector g(y.size());
    for (Eigen::Index j = 0; j < y.size(); ++j) {
        const double h = 1e-4 * (1.0 + std::abs(y[j]));
        Vector a = y, b = y;
        a[j] += h;
        b[j] -= h;
        g[j] = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

/// Central-difference Hessian with step h (default 1e-3).
template <class F>
Matrix fd_hessian(F&& f, const Vector& y, double h = 1e-3) {
    const Eigen::Index d = y.size();
    Matrix H(d, d);
    const double f0 = f(y);
    for (Eigen::Index i = 0; i < d; ++i) {
        Vector a = y, b = y;
        a[i] += h;
        b[i] -= h;
        H(i, i) = (f(a) - 2.0 * f0 + f(b)) / (h * h);
        for (Eigen::Index j = 0; j < i; ++j) {
            Vector pp = y, pm = y, mp = y, mm = y;
            pp[i] += h; pp[j] += h;
            pm[i] += h; pm[j] -= h;
            mp[i] -= h; mp[j] += h;
            mm[i] -= h; mm[j] -= h;
            H(i, j) = H(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
        }
    }
    return H;
}

namespace detail {
inline std::vector<std::pair<std::string, double>> sl_inputs(double s, const Vector& y) {
    std::vector<std::pair<std::string, double>> in{{"s", s}};
    for (Eigen::Index j = 0; j < y.size(); ++j) in.emplace_back("y" + std::to_string(j), y[j]);
    return in;
}
inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }
inline std::vector<double> to_std(const Matrix& m) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}
}  // namespace detail

/// grad_y log xi_s(y) (finite differences of the closed-form marginal) against
/// E_{nu_s(.|y)}[X - y/s] (quadrature).
inline CheckReport verify_tweedie(const GaussianMixture& m, SLTime s, const Vector& y, double tol = 1e-5) {
    require(m.dim() <= 2, "verify_tweedie: d <= 2 only");
    const GaussianMixture marginal = m.affine_noised(s.s, s.s);
    const Vector lhs = fd_gradient([&](const Vector& z) { return marginal.log_density(z); }, y);
    const PosteriorMoments pm = posterior_moments_quadrature(m, s, y);
    const Vector rhs = pm.mean - y / s.s;
    CheckReport r{"tweedie", detail::sl_inputs(s.s, y), detail::to_std(lhs), detail::to_std(rhs), tol, false};
    r.pass = r.max_abs_error() <= tol;
    return r;
}

/// grad^2_y log xi_s(y) against Cov(nu_s(.|y)) - Id/s.
inline CheckReport verify_hessian_identity(const GaussianMixture& m, SLTime s, const Vector& y, double tol = 1e-5) {
    require(m.dim() <= 2, "verify_hessian_identity: d <= 2 only");
    const GaussianMixture marginal = m.affine_noised(s.s, s.s);
    const Matrix lhs = fd_hessian([&](const Vector& z) { return marginal.log_density(z); }, y);
    const PosteriorMoments pm = posterior_moments_quadrature(m, s, y);
    const Matrix rhs = pm.covariance - Matrix::Identity(m.dim(), m.dim()) / s.s;
    CheckReport r{"hessian_identity", detail::sl_inputs(s.s, y), detail::to_std(lhs), detail::to_std(rhs), tol, false};
    r.pass = r.max_abs_error() <= tol;
    return r;
}

/// Posterior covariance eigenvalues must lie in
/// [(1+s-L_s)/(s(1+s)), (1+s+L_s)/(s(1+s))]. lhs holds the eigenvalues, rhs the
/// two interval edges.
inline CheckReport covariance_sandwich_check(const SmoothnessProfile& profile, const GaussianMixture& m, SLTime s,
                                             const Vector& y, double slack = 1e-8) {
    require(m.dim() <= 2, "covariance_sandwich_check: d <= 2 only");
    require(s.s > 0.0, "covariance_sandwich_check: s must be positive");
    const double L = profile(s.s);
    const double denom = s.s * (1.0 + s.s);
    const double lower = (1.0 + s.s - L) / denom;
    const double upper = (1.0 + s.s + L) / denom;
    const PosteriorMoments pm = posterior_moments_quadrature(m, s, y);
    Eigen::SelfAdjointEigenSolver<Matrix> es(pm.covariance, Eigen::EigenvaluesOnly);
    const Vector ev = es.eigenvalues();
    auto inputs = detail::sl_inputs(s.s, y);
    inputs.emplace_back("L_s", L);
    CheckReport r{"covariance_sandwich", std::move(inputs), detail::to_std(ev), {lower, upper}, slack, true};
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        r.pass = r.pass && ev[i] >= lower - slack && ev[i] <= upper + slack;
    return r;
}

/// For a Gaussian start N(mean0, var0 Id) the OU marginal stays Gaussian; checks
/// KL(xi_t || N(0, Id)) <= e^{-2t} (L d + M) with L = 1/var0 and
/// M = |mean0|^2 + d var0. lhs holds KL values, rhs the bounds.
inline CheckReport ou_kl_decay_check(const Vector& mean0, double var0, const std::vector<double>& t_grid) {
    require(var0 > 0.0, "ou_kl_decay_check: var0 must be positive");
    const Eigen::Index d = mean0.size();
    const double L = 1.0 / var0;
    const double M = mean0.squaredNorm() + static_cast<double>(d) * var0;
    CheckReport r;
    r.check = "ou_kl_decay";
    r.inputs = {{"var0", var0}, {"mean0_norm", mean0.norm()}, {"d", static_cast<double>(d)}};
    r.tol = 0.0;
    r.pass = true;
    const Matrix I = Matrix::Identity(d, d);
    for (double t : t_grid) {
        require(t >= 0.0, "ou_kl_decay_check: times must be non-negative");
        const double decay = std::exp(-2.0 * t);
        const double vt = decay * var0 + (1.0 - decay);
        const double kl = kl_gaussians(Vector(std::exp(-t) * mean0), Matrix(vt * I), Vector::Zero(d), I);
        const double bound = decay * (L * static_cast<double>(d) + M);
        r.lhs.push_back(kl);
        r.rhs.push_back(bound);
        r.pass = r.pass && kl <= bound;
    }
    return r;
}

/// The OU marginal at t and the SL marginal at s(t), rescaled by sqrt(s(1+s)),
/// are the same law: compares the two densities pointwise.
inline CheckReport sl_ou_marginal_check(const GaussianMixture& m, OUTime t, const std::vector<Vector>& points,
                                        double tol = 1e-8) {
    const SLTime s = sl_time_from_ou(t);
    const double scale = std::sqrt(s.s * (1.0 + s.s));
    const double d = static_cast<double>(m.dim());
    CheckReport r;
    r.check = "sl_ou_marginal";
    r.inputs = {{"t", t.t}, {"s", s.s}};
    r.tol = tol;
    for (const auto& x : points) {
        r.lhs.push_back(std::exp(ou_marginal_log_density_mixture(m, t, x)));
        r.rhs.push_back(std::pow(scale, d) * marginal_density_mixture(m, s, Vector(scale * x)));
    }
    r.pass = r.max_abs_error() <= tol;
    return r;
}

/// max |d^2/dx^2 f| over a grid (second central differences), i.e. a numerically
/// measured smoothness constant of a one-dimensional potential.
inline double measure_smoothness_1d(const std::function<double(double)>& f, const Grid1D& grid, double h = 1e-3) {
    double best = 0.0;
    for (std::size_t i = 0; i < grid.points; ++i) {
        const double x = grid.at(i);
        best = std::max(best, std::abs((f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)));
    }
    return best;
}

}  // namespace locsamp
