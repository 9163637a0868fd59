#pragma once

// Restricted Gaussian dynamics on a Poisson clock, plain and with late
// initialization, together with the parameter formulas (s0, K) that drive them.

#include "locsamp/potential.hpp"
#include "locsamp/processes.hpp"
#include "locsamp/rgo.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <thread>
#include <vector>

namespace locsamp {

/// Exact Poisson(lambda) draw. Sequential-search inversion for lambda <= 30;
/// above that the gamma/binomial reduction (Ahrens-Dieter) peels off exact
/// Erlang waiting times until the remaining rate is small.
template <std::uniform_random_bit_generator Gen>
std::uint64_t poisson_sample(double lambda, Gen& gen) {
    require(lambda >= 0.0 && std::isfinite(lambda), "poisson_sample: lambda must be finite and >= 0");
    require(lambda <= 1e18, "poisson_sample: lambda too large for a 64-bit count");
    std::uint64_t count = 0;
    while (lambda > 30.0) {
        const auto m = static_cast<std::uint64_t>(std::floor(0.875 * lambda));
        const double g = std::gamma_distribution<double>(static_cast<double>(m), 1.0)(gen);
        if (g < lambda) {
            count += m;
            lambda -= g;
        } else {
            return count + std::binomial_distribution<std::uint64_t>(m - 1, lambda / g)(gen);
        }
    }
    if (lambda == 0.0) return count;
    const double u = uniform01(gen);
    double pk = std::exp(-lambda);
    double cdf = pk;
    std::uint64_t k = 0;
    while (u > cdf && pk > 0.0) {
        ++k;
        pk *= lambda / static_cast<double>(k);
        cdf += pk;
    }
    return count + k;
}

struct RunConfig {
    double epsilon = 0.1;
    std::optional<double> T;   // default 2 L d
    std::optional<double> s0;  // default derive_s0(epsilon, L, d, M)
    std::uint64_t K_cap = 100;
    std::uint64_t max_total_queries = 0;  // per chain; 0 = unlimited
    std::uint64_t seed = 0;
    std::size_t chains = 1;
    RGOOptions rgo;

    void validate() const {
        require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
        require(!T || (*T > 0.0 && std::isfinite(*T)), "T must be positive");
        require(!s0 || (*s0 > 0.0 && std::isfinite(*s0)), "s0 must be positive");
        require(K_cap >= 6, "K_cap must be >= 6");
        require(chains >= 1, "chains must be >= 1");
    }
};

struct ChainReport {
    Vector sample;            // Y_K
    Vector x_s0;              // late initialization point (empty for the plain chain)
    double K_formula = 0.0;   // iteration bound before the cap
    std::uint64_t K = 0;      // min(ceil(K_formula), K_cap)
    std::uint64_t K_prime = 0;
    std::uint64_t iterations_planned = 0;  // min(K, K')
    std::uint64_t iterations_done = 0;
    std::uint64_t rejection_rounds = 0;
    std::uint64_t agm_iterations = 0;
    QuerySnapshot queries;
    bool capped = false;     // K_formula exceeded K_cap
    bool truncated = false;  // query budget stopped the chain early
    bool efficient_regime = true;
};

struct RunReport {
    double epsilon = 0.0;
    double s0 = 0.0;
    double T = 0.0;
    double rgo_sigma2 = 0.0;
    std::vector<ChainReport> chains;
    QuerySnapshot queries;
    double wall_time_seconds = 0.0;

    std::vector<Vector> samples() const {
        std::vector<Vector> out;
        out.reserve(chains.size());
        for (const auto& c : chains) out.push_back(c.sample);
        return out;
    }
};

/// s0 = r^4 / (1 - r^4) with r = eps^2 / (2 (L d + M)); guarantees
/// TV(xi_{s0}, N(0, s0 (1 + s0) Id)) <= eps / 2.
inline double derive_s0(double epsilon, double L, Eigen::Index d, double M) {
    require(epsilon > 0.0 && epsilon < 1.0, "derive_s0: epsilon must lie in (0, 1)");
    const double scale = L * static_cast<double>(d) + M;
    require(scale > 0.0 && std::isfinite(scale), "derive_s0: need 0 < L d + M < inf");
    const double r = epsilon * epsilon / (2.0 * scale);
    require(r < 1.0, "derive_s0: eps^2 / (2 (L d + M)) must be < 1");
    const double r4 = r * r * r * r;
    return r4 / (1.0 - r4);
}

/// Upper bound on log chi^2(mu_0 || nu_{s0}(. | x_s0)) for the Gaussian start
/// of late_init_start.
inline double initialization_log_chi2_bound(const Potential& p, double s0, const Vector& x_s0) {
    require(s0 > 0.0, "initialization bound: s0 must be positive");
    const double d = static_cast<double>(p.dim());
    const double L = p.smoothness();
    const double M = p.second_moment_bound();
    return std::log(2.0 * std::numbers::e) + p.value_at_origin() - p.min_value_lower_bound() +
           0.5 * d * std::log((L + s0) * 16.0 * std::numbers::e * std::numbers::e * M) +
           (2.0 * d + 1.0) * x_s0.squaredNorm() / (2.0 * s0);
}

/// Iteration bound for the late-initialized chain:
/// max{8 log(8/eps), (s0+T)/(2 s0) exp(int_{s0}^{T+s0} L_s/(s(1+s)) ds) (chi2 term + log(4/eps^2))},
/// rounded up. The log term is kept signed when M is tiny.
inline double compute_K(const Vector& x_s0, double epsilon, double s0, double T, const SmoothnessProfile& profile,
                        const Potential& p) {
    require(s0 > 0.0 && T > 0.0, "compute_K: need s0 > 0 and T > 0");
    require(epsilon > 0.0 && epsilon < 1.0, "compute_K: epsilon must lie in (0, 1)");
    const double floor_term = 8.0 * std::log(8.0 / epsilon);
    const double prefactor = (s0 + T) / (2.0 * s0) * std::exp(profile.weighted_integral(s0, T + s0));
    const double bracket = initialization_log_chi2_bound(p, s0, x_s0) + std::log(4.0 / (epsilon * epsilon));
    const double chain_term = prefactor * bracket;
    return std::ceil(std::max(floor_term, std::isnan(chain_term) ? kInf : chain_term));
}

struct LateStart {
    Vector x_s0;
    Vector y0;
};

/// Y_0 ~ N(-grad U(0) / (2(L+s0)), Id / (2(L+s0))) for a given x_s0, where
/// U(x) = V(x) + |x_s0 - s0 x|^2 / (2 s0), so grad U(0) = grad V(0) - x_s0.
template <std::uniform_random_bit_generator Gen>
Vector late_init_y0(const Potential& p, double s0, const Vector& x_s0, Gen& gen) {
    require(s0 > 0.0, "late_init_start: s0 must be positive");
    const double prec = 2.0 * (p.smoothness() + s0);
    const Vector grad_u = p.gradient(Vector::Zero(p.dim())) - x_s0;
    return -grad_u / prec + standard_normal_vector(p.dim(), gen) / std::sqrt(prec);
}

/// x_s0 ~ N(0, s0 (1 + s0) Id), then Y_0 as in late_init_y0.
template <std::uniform_random_bit_generator Gen>
LateStart late_init_start(const Potential& p, double s0, Gen& gen) {
    require(s0 > 0.0, "late_init_start: s0 must be positive");
    Vector x = std::sqrt(s0 * (1.0 + s0)) * standard_normal_vector(p.dim(), gen);
    Vector y0 = late_init_y0(p, s0, x, gen);
    return {std::move(x), std::move(y0)};
}

/// One down-up step: Y^ ~ N(T y_prev, T Id), then RGO((Y^ + shift)/(T + s0), 1/(T + s0)).
/// The plain chain uses shift = 0 and s0 = 0.
template <std::uniform_random_bit_generator Gen>
RGOResult rgd_step(const Potential& p, double T, const Vector& y_prev, const Vector& shift, Gen& gen,
                   double s0 = 0.0, const RGOOptions& opt = {}) {
    require(T > 0.0 && s0 >= 0.0, "rgd_step: need T > 0 and s0 >= 0");
    const Vector down = T * y_prev + std::sqrt(T) * standard_normal_vector(p.dim(), gen);
    const double total = T + s0;
    return rgo_sample(p, RGOQuery{(down + shift) / total, 1.0 / total}, gen, opt);
}

namespace detail {

template <std::uniform_random_bit_generator Gen>
void run_chain_steps(const Potential& p, double T, double s0, const Vector& shift, std::uint64_t budget,
                     const RGOOptions& opt, ChainReport& rep, Vector y, Gen& gen) {
    const double k_lambda = static_cast<double>(rep.K) / 2.0;
    rep.K_prime = poisson_sample(k_lambda, gen);
    rep.iterations_planned = std::min(rep.K, rep.K_prime);
    for (std::uint64_t k = 0; k < rep.iterations_planned; ++k) {
        if (budget > 0 && p.queries().total() >= budget) {
            rep.truncated = true;
            break;
        }
        RGOResult r = rgd_step(p, T, y, shift, gen, s0, opt);
        rep.rejection_rounds += r.rejection_rounds;
        rep.agm_iterations += r.agm_iterations;
        rep.efficient_regime = rep.efficient_regime && r.efficient_regime;
        y = std::move(r.sample);
        ++rep.iterations_done;
    }
    rep.sample = std::move(y);
}

inline double default_T(const Potential& p) { return 2.0 * p.smoothness() * static_cast<double>(p.dim()); }

template <class Fn>
void for_each_index(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Plain chain: Y_0 from `initial`, K = K_cap, K' ~ Pois(K/2), min(K, K') steps.
template <std::uniform_random_bit_generator Gen, class Initial>
ChainReport run_rgd_chain(const Potential& p, const RunConfig& cfg, Initial&& initial, Gen& gen) {
    cfg.validate();
    const double T = cfg.T.value_or(detail::default_T(p));
    const Potential local = p.with_counter(std::make_shared<QueryCounter>());
    ChainReport rep;
    rep.K_formula = static_cast<double>(cfg.K_cap);
    rep.K = cfg.K_cap;
    Vector y0 = initial(gen);
    require(y0.size() == p.dim(), "run_rgd: initial point has the wrong dimension");
    detail::run_chain_steps(local, T, 0.0, Vector::Zero(p.dim()), cfg.max_total_queries, cfg.rgo, rep, std::move(y0), gen);
    rep.queries = local.queries();
    p.counter().add(rep.queries);
    return rep;
}

/// Late-initialized chain targeting nu_{s0}(. | x_s0), whose output is close
/// to mu in total variation once s0 and K follow the formulas above.
template <std::uniform_random_bit_generator Gen>
ChainReport run_late_init_chain(const Potential& p, const RunConfig& cfg, const SmoothnessProfile& profile, Gen& gen) {
    cfg.validate();
    const double T = cfg.T.value_or(detail::default_T(p));
    const double s0 = cfg.s0.value_or(derive_s0(cfg.epsilon, p.smoothness(), p.dim(), p.second_moment_bound()));
    const Potential local = p.with_counter(std::make_shared<QueryCounter>());
    ChainReport rep;
    LateStart start = late_init_start(local, s0, gen);
    rep.K_formula = compute_K(start.x_s0, cfg.epsilon, s0, T, profile, p);
    rep.capped = !(rep.K_formula <= static_cast<double>(cfg.K_cap));
    rep.K = rep.capped ? cfg.K_cap : static_cast<std::uint64_t>(rep.K_formula);
    rep.x_s0 = start.x_s0;
    detail::run_chain_steps(local, T, s0, start.x_s0, cfg.max_total_queries, cfg.rgo, rep, std::move(start.y0), gen);
    rep.queries = local.queries();
    p.counter().add(rep.queries);
    return rep;
}

/// Runs cfg.chains independent plain chains; chain i uses stream (seed, i, run_index).
template <class Initial>
RunReport run_rgd(const Potential& p, const RunConfig& cfg, Initial&& initial, std::uint64_t run_index = 0,
                  std::size_t threads = 1) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    rep.epsilon = cfg.epsilon;
    rep.T = cfg.T.value_or(detail::default_T(p));
    rep.rgo_sigma2 = 1.0 / rep.T;
    rep.chains.resize(cfg.chains);
    const QuerySnapshot before = p.queries();
    detail::for_each_index(cfg.chains, threads, [&](std::size_t i) {
        Rng gen = make_stream(cfg.seed, i, run_index);
        rep.chains[i] = run_rgd_chain(p, cfg, initial, gen);
    });
    rep.queries = p.queries() - before;
    rep.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// Runs cfg.chains independent late-initialized chains; chain i uses stream
/// (seed, i, run_index).
inline RunReport run_late_init_rgd(const Potential& p, const RunConfig& cfg, const SmoothnessProfile& profile,
                                   std::uint64_t run_index = 0, std::size_t threads = 1) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    rep.epsilon = cfg.epsilon;
    rep.T = cfg.T.value_or(detail::default_T(p));
    rep.s0 = cfg.s0.value_or(derive_s0(cfg.epsilon, p.smoothness(), p.dim(), p.second_moment_bound()));
    rep.rgo_sigma2 = 1.0 / (rep.T + rep.s0);
    rep.chains.resize(cfg.chains);
    const QuerySnapshot before = p.queries();
    detail::for_each_index(cfg.chains, threads, [&](std::size_t i) {
        Rng gen = make_stream(cfg.seed, i, run_index);
        rep.chains[i] = run_late_init_chain(p, cfg, profile, gen);
    });
    rep.queries = p.queries() - before;
    rep.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace locsamp
