#pragma once

// Statistical distances, closed-form divergences and goodness-of-fit helpers.

#include "locsamp/potential.hpp"
#include "locsamp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace locsamp {

/// Outcome of a numerical identity or inequality check.
struct CheckReport {
    std::string check;
    std::vector<std::pair<std::string, double>> inputs;
    std::vector<double> lhs;
    std::vector<double> rhs;
    double tol = 0.0;
    bool pass = false;

    double max_abs_error() const {
        double e = 0.0;
        for (std::size_t i = 0; i < lhs.size() && i < rhs.size(); ++i) e = std::max(e, std::abs(lhs[i] - rhs[i]));
        return e;
    }
};

struct Histogram {
    std::vector<double> edges;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;  // samples inside [edges.front(), edges.back())
    std::uint64_t below = 0;
    std::uint64_t above = 0;
};

inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
    require(bins >= 1 && hi > lo, "histogram: need bins >= 1 and hi > lo");
    std::vector<double> e(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    return e;
}

/// `bins` equal-width bins over [mean - width*sd, mean + width*sd] of the sample.
inline std::vector<double> default_edges(std::span<const double> samples, std::size_t bins = 100, double width = 5.0) {
    require(samples.size() >= 2, "histogram: need at least two samples");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / (n - 1.0));
    require(sd > 0.0, "histogram: samples have zero spread");
    return uniform_edges(mean - width * sd, mean + width * sd, bins);
}

inline Histogram make_histogram(std::span<const double> samples, std::vector<double> edges) {
    require(edges.size() >= 2 && std::is_sorted(edges.begin(), edges.end()), "histogram: edges must be sorted");
    Histogram h;
    h.counts.assign(edges.size() - 1, 0);
    for (double x : samples) {
        if (x < edges.front()) {
            ++h.below;
        } else if (x >= edges.back()) {
            ++h.above;
        } else {
            auto it = std::upper_bound(edges.begin(), edges.end(), x);
            ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
            ++h.total;
        }
    }
    h.edges = std::move(edges);
    return h;
}

enum class DivergenceKind { tv, kl, chi2, renyi2 };
enum class DivergenceMethod { analytic, quadrature, histogram };

inline const char* to_string(DivergenceKind k) {
    switch (k) {
        case DivergenceKind::tv: return "tv";
        case DivergenceKind::kl: return "kl";
        case DivergenceKind::chi2: return "chi2";
        case DivergenceKind::renyi2: return "renyi2";
    }
    return "?";
}
inline const char* to_string(DivergenceMethod m) {
    switch (m) {
        case DivergenceMethod::analytic: return "analytic";
        case DivergenceMethod::quadrature: return "quadrature";
        case DivergenceMethod::histogram: return "histogram";
    }
    return "?";
}

struct DivergenceReport {
    DivergenceKind kind;
    double value;
    DivergenceMethod method;
};

/// chi^2(N(x, s2 Id) || N(y, s2 Id)) = exp(|x-y|^2 / s2) - 1.
inline double chi2_gaussians(const Vector& x, const Vector& y, double sigma2) {
    require(sigma2 > 0.0, "chi2_gaussians: sigma2 must be positive");
    require(x.size() == y.size(), "chi2_gaussians: dimension mismatch");
    return std::expm1((x - y).squaredNorm() / sigma2);
}

/// int p1^2/p2 - 1 over [lo, hi] for one-dimensional densities.
inline DivergenceReport chi2_quadrature(const std::function<double(double)>& p1, const std::function<double(double)>& p2,
                                        double lo, double hi, const QuadratureOptions& opt = {}) {
    const double v = integrate([&](double x) {
        const double a = p1(x);
        return a == 0.0 ? 0.0 : a * a / p2(x);
    }, lo, hi, opt) - 1.0;
    return {DivergenceKind::chi2, std::max(0.0, v), DivergenceMethod::quadrature};
}

inline DivergenceReport renyi2_from_chi2(const DivergenceReport& chi2) {
    return {DivergenceKind::renyi2, std::log1p(chi2.value), chi2.method};
}

/// KL(N(m1, S1) || N(m2, S2)).
inline double kl_gaussians(const Vector& m1, const Matrix& S1, const Vector& m2, const Matrix& S2) {
    require(m1.size() == m2.size() && S1.rows() == m1.size() && S2.rows() == m2.size(), "kl_gaussians: shape mismatch");
    spd_spectrum(S1, "kl_gaussians: first covariance");
    spd_spectrum(S2, "kl_gaussians: second covariance");
    const double d = static_cast<double>(m1.size());
    Eigen::LLT<Matrix> l1(S1);
    Eigen::LLT<Matrix> l2(S2);
    const Vector diff = m2 - m1;
    const double logdet1 = 2.0 * l1.matrixLLT().diagonal().array().log().sum();
    const double logdet2 = 2.0 * l2.matrixLLT().diagonal().array().log().sum();
    const double trace = l2.solve(S1).trace();
    return 0.5 * (trace + diff.dot(l2.solve(diff)) - d + logdet2 - logdet1);
}

inline double kl_gaussians(double m1, double v1, double m2, double v2) {
    Vector a(1), b(1);
    a << m1;
    b << m2;
    return kl_gaussians(a, Matrix::Constant(1, 1, v1), b, Matrix::Constant(1, 1, v2));
}

/// Histogram TV estimate between samples and a normalized density: half the
/// L1 distance between binned masses, with the two tails as extra bins.
inline DivergenceReport tv_histogram(std::span<const double> samples, const std::function<double(double)>& density,
                                     std::vector<double> edges) {
    require(!samples.empty(), "tv_histogram: no samples");
    require(edges.size() >= 2, "tv_histogram: empty bin configuration");
    const Histogram h = make_histogram(samples, std::move(edges));
    const double n = static_cast<double>(samples.size());
    double inside = 0.0;
    double l1 = 0.0;
    QuadratureOptions opt;
    opt.abs_tol = 1e-12;
    for (std::size_t i = 0; i + 1 < h.edges.size(); ++i) {
        const double mass = integrate(density, h.edges[i], h.edges[i + 1], opt);
        inside += mass;
        l1 += std::abs(static_cast<double>(h.counts[i]) / n - mass);
    }
    // Left tail by quadrature, right tail by complement.
    const double below = integrate(density, h.edges.front() - 50.0 * (h.edges.back() - h.edges.front()), h.edges.front(), opt);
    const double above = std::max(0.0, 1.0 - inside - below);
    l1 += std::abs(static_cast<double>(h.below) / n - below);
    l1 += std::abs(static_cast<double>(h.above) / n - above);
    return {DivergenceKind::tv, 0.5 * l1, DivergenceMethod::histogram};
}

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    require(!samples.empty(), "ks_distance: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

inline double normal_cdf(double x, double mean = 0.0, double var = 1.0) {
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var));
}

/// Exact sampler for a one-dimensional density by inversion of its tabulated
/// CDF (cumulative Simpson on a fine grid, linear interpolation between nodes).
class InverseCdfSampler {
public:
    InverseCdfSampler(const std::function<double(double)>& log_density, double lo, double hi, std::size_t nodes = 40001)
        : lo_(lo), step_((hi - lo) / static_cast<double>(nodes - 1)) {
        require(hi > lo && nodes >= 3 && nodes % 2 == 1, "InverseCdfSampler: bad grid");
        std::vector<double> logp(nodes);
        for (std::size_t i = 0; i < nodes; ++i) logp[i] = log_density(lo + step_ * static_cast<double>(i));
        const double m = *std::max_element(logp.begin(), logp.end());
        require(std::isfinite(m), "InverseCdfSampler: density underflows on the whole grid");
        std::vector<double> p(nodes);
        for (std::size_t i = 0; i < nodes; ++i) p[i] = std::exp(logp[i] - m);
        cdf_.assign(nodes, 0.0);
        for (std::size_t i = 1; i < nodes; ++i) {
            // Simpson on [x_{i-1}, x_i] using the midpoint density.
            const double mid = std::exp(log_density(lo + step_ * (static_cast<double>(i) - 0.5)) - m);
            cdf_[i] = cdf_[i - 1] + step_ / 6.0 * (p[i - 1] + 4.0 * mid + p[i]);
        }
        const double total = cdf_.back();
        for (double& c : cdf_) c /= total;
    }

    double cdf(double x) const {
        if (x <= lo_) return 0.0;
        const double pos = (x - lo_) / step_;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= cdf_.size()) return 1.0;
        const double t = pos - static_cast<double>(i);
        return cdf_[i] + t * (cdf_[i + 1] - cdf_[i]);
    }

    double quantile(double u) const {
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.begin()) return lo_;
        if (it == cdf_.end()) return lo_ + step_ * static_cast<double>(cdf_.size() - 1);
        const auto i = static_cast<std::size_t>(it - cdf_.begin());
        const double c0 = cdf_[i - 1];
        const double c1 = cdf_[i];
        const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
        return lo_ + step_ * (static_cast<double>(i - 1) + t);
    }

    template <std::uniform_random_bit_generator Gen>
    double operator()(Gen& gen) const {
        return quantile(uniform01(gen));
    }

private:
    double lo_;
    double step_;
    std::vector<double> cdf_;
};

struct PoissonTailReport {
    double lambda;
    double s;
    double exact;  // P[X >= lambda + s]
    double bound;  // exp(-s^2 / (2 (lambda + s)))
    bool pass;
};

inline double poisson_log_pmf(std::uint64_t k, double lambda) {
    if (lambda == 0.0) return k == 0 ? 0.0 : -kInf;
    const double kk = static_cast<double>(k);
    return kk * std::log(lambda) - lambda - std::lgamma(kk + 1.0);
}

/// Exact upper tail by direct pmf summation, compared with exp(-s^2/(2(lambda+s))).
inline PoissonTailReport poisson_tail_check(double lambda, double s) {
    require(lambda >= 0.0 && s > 0.0, "poisson_tail_check: need lambda >= 0 and s > 0");
    const auto k0 = static_cast<std::uint64_t>(std::ceil(lambda + s));
    double tail = 0.0;
    for (std::uint64_t k = k0;; ++k) {
        const double term = std::exp(poisson_log_pmf(k, lambda));
        tail += term;
        if (static_cast<double>(k) > lambda && term < 1e-300 + 1e-18 * tail) break;
        if (k > k0 + 100000) break;
    }
    const double bound = std::exp(-s * s / (2.0 * (lambda + s)));
    return {lambda, s, tail, bound, tail <= bound};
}

struct Grid1D {
    double lo = -5.0;
    double hi = 5.0;
    std::size_t points = 201;

    double at(std::size_t i) const {
        return points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
};

/// Checks that log nu_{T+s0}(x | x_T + x_s0) and the log of the shifted-chain
/// posterior nu'_T(x | x_T) differ by a constant in x (one-dimensional targets).
inline CheckReport verify_rgo_equivalence(const Potential& p, double s0, double T, double x_s0, double x_T,
                                          const Grid1D& grid = {}, double tol = 1e-10) {
    require(p.dim() == 1, "verify_rgo_equivalence: one-dimensional targets only");
    require(s0 > 0.0 && T > 0.0, "verify_rgo_equivalence: need s0 > 0 and T > 0");
    std::vector<double> diffs;
    diffs.reserve(grid.points);
    Vector x(1);
    for (std::size_t i = 0; i < grid.points; ++i) {
        x[0] = grid.at(i);
        const double v = p.value(x);
        const double total = T + s0;
        const double z = x_T + x_s0 - total * x[0];
        const double direct = -v - z * z / (2.0 * total);
        const double a = x_s0 - s0 * x[0];
        const double b = x_T - T * x[0];
        const double shifted = -v - a * a / (2.0 * s0) - b * b / (2.0 * T);
        if (!std::isfinite(direct) || !std::isfinite(shifted))
            throw NumericalError("verify_rgo_equivalence: log-density underflow on grid");
        diffs.push_back(direct - shifted);
    }
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    var /= static_cast<double>(diffs.size());
    CheckReport r;
    r.check = "rgo_equivalence";
    r.inputs = {{"s0", s0}, {"T", T}, {"x_s0", x_s0}, {"x_T", x_T}};
    r.lhs = {var};
    r.rhs = {0.0};
    r.tol = tol;
    r.pass = var <= tol;
    return r;
}

}  // namespace locsamp
