#pragma once

// Restricted Gaussian oracle: exact samples from the density
// proportional to exp(-V(x) - |x - y|^2 / (2 sigma^2)), by an accelerated
// gradient search for a near-stationary point w followed by rejection
// sampling under the quadratic envelope h_y^w that L-smoothness provides.

#include "locsamp/potential.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>

namespace locsamp {

struct RGOQuery {
    Vector y;       // proximal center
    double sigma2;  // variance parameter
};

struct AgmOptions {
    std::size_t max_iterations = 1'000'000;
    /// Start at y / (1 + sigma^2 L) instead of the origin.
    bool warm_start = false;
    /// Explicit start point; overrides warm_start.
    std::optional<Vector> start;
};

struct AgmResult {
    Vector w;
    Vector grad_v;  // grad V(w), reused by the envelope
    double grad_norm = 0.0;
    std::size_t iterations = 0;
};

namespace detail {
inline void check_query(const Potential& p, const RGOQuery& q) {
    require(q.y.size() == p.dim(), "RGO: center dimension does not match the potential");
    require(q.sigma2 > 0.0 && std::isfinite(q.sigma2), "RGO: sigma2 must be positive");
    const double L = p.smoothness();
    require(1.0 / q.sigma2 > L, "RGO: need 1/sigma2 > L");
    if (L > 0.0) {
        const double hard = 1.0 / (L * static_cast<double>(p.dim()));
        require(q.sigma2 <= hard * (1.0 + 1e-12), "RGO: sigma2 exceeds 1/(L d)");
    }
}
}  // namespace detail

/// sigma2 <= 1/(2 L d): the regime with O(1) expected rejection rounds.
inline bool rgo_efficient_regime(const Potential& p, double sigma2) {
    const double L = p.smoothness();
    return L == 0.0 || sigma2 <= 1.0 / (2.0 * L * static_cast<double>(p.dim())) * (1.0 + 1e-12);
}

/// Accelerated gradient method on g(x) = V(x) + |x - y|^2 / (2 sigma^2); stops
/// at the first extrapolated point with |grad g| <= sqrt(L d). Both inner
/// argmins are quadratics and are solved in closed form, one gradient per
/// iteration.
inline AgmResult agm_minimize(const Potential& p, const RGOQuery& q, const AgmOptions& opt = {}) {
    detail::check_query(p, q);
    const double L = p.smoothness();
    const double inv_s2 = 1.0 / q.sigma2;
    const double step = inv_s2 + L;    // T in the method's notation
    const double modulus = inv_s2 - L;  // B: strong convexity of the model
    const double d = static_cast<double>(p.dim());
    // With L = 0 the threshold collapses to zero; a relative floor keeps the loop finite.
    const double tol = std::max(std::sqrt(L * d), 1e-12 * (1.0 + inv_s2 * (1.0 + q.y.norm())));

    Vector x;
    if (opt.start) {
        require(opt.start->size() == p.dim(), "AGM: start point has the wrong dimension");
        x = *opt.start;
    } else if (opt.warm_start) {
        x = q.y / (1.0 + q.sigma2 * L);
    } else {
        x = Vector::Zero(p.dim());
    }
    Vector y = x;
    double A = 0.0;
    double tau = 1.0;
    for (std::size_t k = 0;; ++k) {
        const double a = (tau + std::sqrt(tau * tau + 4.0 * tau * step * A)) / (2.0 * step);
        const double A_next = A + a;
        const Vector xt = (A * y + a * x) / A_next;
        Vector gv = p.gradient(xt);
        const Vector gg = gv + inv_s2 * (xt - q.y);
        const double gnorm = gg.norm();
        if (gnorm <= tol) return {xt, std::move(gv), gnorm, k};
        if (k >= opt.max_iterations) {
            std::ostringstream msg;
            msg << "AGM: iteration cap " << opt.max_iterations << " reached, |grad g| = " << gnorm;
            throw IterationLimitError(msg.str(), gnorm);
        }
        y = xt - gg / (modulus + step);
        x = (tau * x + a * modulus * xt - a * gg) / (tau + a * modulus);
        tau += a * modulus;
        A = A_next;
    }
}

/// The envelope exp(-h_y^w), with
/// h(x) = V(w) + <grad V(w), x - w> - L/2 |x - w|^2 + |x - y|^2 / (2 sigma^2).
/// It is a Gaussian with precision 1/sigma^2 - L.
struct Envelope {
    Vector y;
    double sigma2;
    double L;
    Vector w;
    double value_w;
    Vector grad_w;

    double precision() const { return 1.0 / sigma2 - L; }
    Vector mean() const { return (y / sigma2 - grad_w - L * w) / precision(); }
    /// -h(x)
    double log_density(const Vector& x) const {
        const Vector dx = x - w;
        return -(value_w + grad_w.dot(dx) - 0.5 * L * dx.squaredNorm() + (x - y).squaredNorm() / (2.0 * sigma2));
    }
    /// h(x) - V_y^sigma(x) given V(x); the sigma terms cancel exactly.
    double log_acceptance(const Vector& x, double value_x) const {
        const Vector dx = x - w;
        return value_w + grad_w.dot(dx) - 0.5 * L * dx.squaredNorm() - value_x;
    }
};

inline Envelope make_envelope(const Potential& p, const RGOQuery& q, const Vector& w) {
    detail::check_query(p, q);
    return {q.y, q.sigma2, p.smoothness(), w, p.value(w), p.gradient(w)};
}

/// -h_y^w(x).
inline double envelope_logdensity(const Potential& p, const RGOQuery& q, const Vector& w, const Vector& x) {
    return make_envelope(p, q, w).log_density(x);
}

struct RGOOptions {
    AgmOptions agm;
    std::size_t max_rejection_rounds = 100'000;
};

struct RGOResult {
    Vector sample;
    Vector stationary_point;
    std::size_t rejection_rounds = 0;  // rejected proposals before acceptance
    std::size_t agm_iterations = 0;
    std::uint64_t value_queries = 0;
    std::uint64_t gradient_queries = 0;
    bool efficient_regime = true;
};

/// Exact draw from mu_{y, sigma^2}. Queries per call: agm_iterations + 1
/// gradients and 2 + rejection_rounds values (V(w) plus one per proposal).
template <std::uniform_random_bit_generator Gen>
RGOResult rgo_sample(const Potential& p, const RGOQuery& q, Gen& gen, const RGOOptions& opt = {}) {
    const QuerySnapshot before = p.queries();
    AgmResult agm = agm_minimize(p, q, opt.agm);
    const Envelope env{q.y, q.sigma2, p.smoothness(), agm.w, p.value(agm.w), std::move(agm.grad_v)};
    const Vector mean = env.mean();
    const double sd = 1.0 / std::sqrt(env.precision());
    RGOResult out;
    out.stationary_point = agm.w;
    out.agm_iterations = agm.iterations;
    out.efficient_regime = rgo_efficient_regime(p, q.sigma2);
    for (std::size_t round = 0;; ++round) {
        Vector x = mean + sd * standard_normal_vector(p.dim(), gen);
        const double log_ratio = env.log_acceptance(x, p.value(x));
        if (std::log(uniform01(gen)) <= log_ratio) {
            out.sample = std::move(x);
            out.rejection_rounds = round;
            break;
        }
        if (round + 1 >= opt.max_rejection_rounds) {
            std::ostringstream msg;
            msg << "RGO: rejection cap " << opt.max_rejection_rounds << " reached";
            throw IterationLimitError(msg.str(), log_ratio);
        }
    }
    const QuerySnapshot used = p.queries() - before;
    out.value_queries = used.value_queries;
    out.gradient_queries = used.gradient_queries;
    return out;
}

}  // namespace locsamp
