#pragma once

// Target oracles mu ∝ exp(-V): value/gradient access with query accounting,
// plus the built-in analytic targets (standard Gaussian, shared-covariance
// Gaussian mixtures, quadratics).

#include "locsamp/core.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace locsamp {

struct QuerySnapshot {
    std::uint64_t value_queries = 0;
    std::uint64_t gradient_queries = 0;

    std::uint64_t total() const { return value_queries + gradient_queries; }
    friend QuerySnapshot operator-(const QuerySnapshot& a, const QuerySnapshot& b) {
        return {a.value_queries - b.value_queries, a.gradient_queries - b.gradient_queries};
    }
    friend QuerySnapshot operator+(const QuerySnapshot& a, const QuerySnapshot& b) {
        return {a.value_queries + b.value_queries, a.gradient_queries + b.gradient_queries};
    }
    friend bool operator==(const QuerySnapshot&, const QuerySnapshot&) = default;
};

/// Monotone oracle-call counters. Atomic so concurrent chains may share one.
class QueryCounter {
public:
    void count_value() { value_.fetch_add(1, std::memory_order_relaxed); }
    void count_gradient() { gradient_.fetch_add(1, std::memory_order_relaxed); }
    void add(const QuerySnapshot& q) {
        value_.fetch_add(q.value_queries, std::memory_order_relaxed);
        gradient_.fetch_add(q.gradient_queries, std::memory_order_relaxed);
    }
    QuerySnapshot snapshot() const {
        return {value_.load(std::memory_order_relaxed), gradient_.load(std::memory_order_relaxed)};
    }

private:
    std::atomic<std::uint64_t> value_{0};
    std::atomic<std::uint64_t> gradient_{0};
};

struct PotentialInfo {
    std::string name;
    Eigen::Index dim = 1;
    double smoothness = 1.0;           // L
    double second_moment_bound = 1.0;  // M
    std::optional<double> min_value_lower_bound;
};

/// Immutable oracle for V and grad V. Copies share the oracle functions; the
/// counter is shared too unless replaced with with_counter().
class Potential {
public:
    using ValueFn = std::function<double(const Vector&)>;
    using GradientFn = std::function<Vector(const Vector&)>;

    Potential(ValueFn value, GradientFn gradient, PotentialInfo info)
        : value_(std::make_shared<ValueFn>(std::move(value))),
          gradient_(std::make_shared<GradientFn>(std::move(gradient))),
          info_(std::move(info)),
          counter_(std::make_shared<QueryCounter>()) {
        require(info_.dim >= 1, "potential dimension must be >= 1");
        require(info_.smoothness >= 0.0 && std::isfinite(info_.smoothness), "smoothness L must be finite and >= 0");
        require(info_.second_moment_bound >= 0.0, "second moment bound M must be >= 0");
        value_at_origin_ = (*value_)(Vector::Zero(info_.dim));
    }

    double value(const Vector& x) const {
        counter_->count_value();
        return (*value_)(x);
    }
    Vector gradient(const Vector& x) const {
        counter_->count_gradient();
        return (*gradient_)(x);
    }

    Eigen::Index dim() const { return info_.dim; }
    double smoothness() const { return info_.smoothness; }
    double second_moment_bound() const { return info_.second_moment_bound; }
    /// V(0), computed once at construction outside the query ledger.
    double value_at_origin() const { return value_at_origin_; }
    bool has_min_value_lower_bound() const { return info_.min_value_lower_bound.has_value(); }
    double min_value_lower_bound() const {
        if (!info_.min_value_lower_bound)
            throw ValidationError("potential '" + info_.name + "' has no min_value_lower_bound");
        return *info_.min_value_lower_bound;
    }
    const std::string& name() const { return info_.name; }
    const PotentialInfo& info() const { return info_; }

    QueryCounter& counter() const { return *counter_; }
    QuerySnapshot queries() const { return counter_->snapshot(); }

    Potential with_counter(std::shared_ptr<QueryCounter> counter) const {
        Potential copy = *this;
        copy.counter_ = std::move(counter);
        return copy;
    }

private:
    std::shared_ptr<const ValueFn> value_;
    std::shared_ptr<const GradientFn> gradient_;
    PotentialInfo info_;
    std::shared_ptr<QueryCounter> counter_;
    double value_at_origin_ = 0.0;
};

/// V(x) = |x|^2 / 2.
inline Potential standard_gaussian_potential(Eigen::Index d) {
    require(d >= 1, "dimension must be >= 1");
    PotentialInfo info{"gaussian", d, 1.0, static_cast<double>(d), 0.0};
    return Potential([](const Vector& x) { return 0.5 * x.squaredNorm(); },
                     [](const Vector& x) { return Vector(x); }, std::move(info));
}

/// V(x) = x'Ax/2 + b'x + c. The smoothness is ||A||_op. For SPD A the
/// second moment and minimum are analytic; otherwise they must be supplied.
inline Potential quadratic_potential(const Matrix& A, const Vector& b, double c = 0.0,
                                     std::optional<double> min_value = std::nullopt,
                                     std::optional<double> second_moment = std::nullopt) {
    require(A.rows() == A.cols() && A.rows() == b.size() && b.size() >= 1, "quadratic: shape mismatch");
    require((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + A.cwiseAbs().maxCoeff()),
            "quadratic: A must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
    const double op = es.eigenvalues().cwiseAbs().maxCoeff();
    PotentialInfo info{"custom-quadratic", b.size(), op, kInf, min_value};
    if (es.eigenvalues().minCoeff() > 0.0) {
        Eigen::LLT<Matrix> llt(A);
        const Vector mean = -llt.solve(b);
        const Matrix cov = llt.solve(Matrix::Identity(b.size(), b.size()));
        info.second_moment_bound = mean.squaredNorm() + cov.trace();
        if (!info.min_value_lower_bound) info.min_value_lower_bound = c + 0.5 * b.dot(mean);
    }
    if (second_moment) info.second_moment_bound = *second_moment;
    return Potential([A, b, c](const Vector& x) { return 0.5 * x.dot(A * x) + b.dot(x) + c; },
                     [A, b](const Vector& x) { return Vector(A * x + b); }, std::move(info));
}

/// Mixture sum_i w_i N(c_i, Sigma) with one shared SPD covariance.
class GaussianMixture {
public:
    GaussianMixture(std::vector<double> weights, std::vector<Vector> centers, Matrix covariance,
                    std::optional<double> radius = std::nullopt)
        : weights_(std::move(weights)), centers_(std::move(centers)), covariance_(std::move(covariance)) {
        require(!weights_.empty() && weights_.size() == centers_.size(), "mixture: need one weight per center");
        const Eigen::Index d = covariance_.rows();
        double total = 0.0;
        for (double w : weights_) {
            require(w >= 0.0 && std::isfinite(w), "mixture: weights must be non-negative");
            total += w;
        }
        require(std::abs(total - 1.0) <= 1e-9, "mixture: weights must sum to 1");
        const auto spec = spd_spectrum(covariance_);
        lambda_min_ = spec.lambda_min;
        op_norm_ = spec.lambda_max;
        double r = 0.0;
        for (const auto& c : centers_) {
            require(c.size() == d, "mixture: center dimension does not match covariance");
            r = std::max(r, c.norm());
        }
        if (radius) {
            require(*radius >= r - 1e-12, "mixture: a center lies outside the declared radius");
            r = *radius;
        }
        radius_ = r;
        llt_ = covariance_.llt();
        log_norm_ = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) -
                    llt_.matrixLLT().diagonal().array().log().sum();
        log_weights_.resize(static_cast<Eigen::Index>(weights_.size()));
        for (std::size_t i = 0; i < weights_.size(); ++i)
            log_weights_[static_cast<Eigen::Index>(i)] = weights_[i] > 0.0 ? std::log(weights_[i]) : -kInf;
    }

    Eigen::Index dim() const { return covariance_.rows(); }
    std::size_t size() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<Vector>& centers() const { return centers_; }
    const Matrix& covariance() const { return covariance_; }
    double radius() const { return radius_; }
    double lambda_min() const { return lambda_min_; }
    double op_norm() const { return op_norm_; }
    /// log of max_x density of a single component.
    double log_peak() const { return log_norm_; }

    Vector component_log_densities(const Vector& x) const {
        Vector out(static_cast<Eigen::Index>(size()));
        for (std::size_t i = 0; i < size(); ++i) {
            const Vector z = llt_.matrixL().solve(x - centers_[i]);
            out[static_cast<Eigen::Index>(i)] = log_weights_[static_cast<Eigen::Index>(i)] + log_norm_ - 0.5 * z.squaredNorm();
        }
        return out;
    }

    double log_density(const Vector& x) const { return log_sum_exp(component_log_densities(x)); }

    /// grad log density = -sum_i r_i(x) Sigma^{-1} (x - c_i).
    Vector score(const Vector& x) const {
        const Vector lc = component_log_densities(x);
        const Vector resp = (lc.array() - log_sum_exp(lc)).exp();
        Vector mean_center = Vector::Zero(dim());
        for (std::size_t i = 0; i < size(); ++i) mean_center += resp[static_cast<Eigen::Index>(i)] * centers_[i];
        return -llt_.solve(x - mean_center);
    }

    Vector mean() const {
        Vector m = Vector::Zero(dim());
        for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * centers_[i];
        return m;
    }

    /// E|X|^2 = sum_i w_i (|c_i|^2 + tr Sigma).
    double second_moment() const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * (centers_[i].squaredNorm() + covariance_.trace());
        return m;
    }

    /// Law of a*X + N(0, b*Id) for X ~ this mixture.
    GaussianMixture affine_noised(double a, double b) const {
        std::vector<Vector> c;
        c.reserve(size());
        for (const auto& ci : centers_) c.push_back(a * ci);
        Matrix cov = a * a * covariance_ + b * Matrix::Identity(dim(), dim());
        return GaussianMixture(weights_, std::move(c), std::move(cov), std::abs(a) * radius_);
    }

    template <std::uniform_random_bit_generator Gen>
    Vector sample(Gen& gen) const {
        std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
        const std::size_t i = pick(gen);
        return centers_[i] + llt_.matrixL() * standard_normal_vector(dim(), gen);
    }

private:
    std::vector<double> weights_;
    std::vector<Vector> centers_;
    Matrix covariance_;
    double radius_ = 0.0;
    double lambda_min_ = 1.0;
    double op_norm_ = 1.0;
    Eigen::LLT<Matrix> llt_;
    double log_norm_ = 0.0;
    Vector log_weights_;
};

/// Smoothness of -log(nu * N(0, Sigma)) for nu supported on a ball of radius R:
/// max{1, R^2 - 1} for Sigma = Id, and through whitening
/// max{1, R^2/lambda_min - 1} / lambda_min in general.
inline double mixture_smoothness(double R, const Matrix& sigma) {
    require(R >= 0.0 && std::isfinite(R), "mixture_smoothness: R must be finite and >= 0");
    const double lmin = spd_spectrum(sigma).lambda_min;
    return std::max(1.0, R * R / lmin - 1.0) / lmin;
}

/// V = -log density (normalized, so V is fixed absolutely). The min-value bound
/// is -log of the largest single-component peak, which dominates the mixture.
inline Potential mixture_potential(const GaussianMixture& m) {
    PotentialInfo info{"mixture", m.dim(), mixture_smoothness(m.radius(), m.covariance()), m.second_moment(),
                       -m.log_peak()};
    auto shared = std::make_shared<const GaussianMixture>(m);
    return Potential([shared](const Vector& x) { return -shared->log_density(x); },
                     [shared](const Vector& x) { return Vector(-shared->score(x)); }, std::move(info));
}

}  // namespace locsamp
