#pragma once

// Shared vocabulary: vector types, error hierarchy and seeded random streams.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace locsamp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition or configuration constraint was violated (CLI exit code 1).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed to reach its tolerance (CLI exit code 2).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An iteration or rejection cap was hit (CLI exit code 2).
class IterationLimitError : public Error {
public:
    IterationLimitError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

inline void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

using Rng = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Independent stream for (seed, chain, run). Each coordinate is folded in
/// through splitmix64, so adding chains or runs never perturbs existing streams.
inline Rng make_stream(std::uint64_t seed, std::uint64_t chain = 0, std::uint64_t run = 0) {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ detail::splitmix64(chain + 0x632be59bd9b4e019ULL));
    h = detail::splitmix64(h ^ detail::splitmix64(run + 0x85157af5ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(chain),
                      static_cast<std::uint32_t>(run)};
    return Rng(seq);
}

template <std::uniform_random_bit_generator Gen>
Vector standard_normal_vector(Eigen::Index d, Gen& gen) {
    std::normal_distribution<double> normal;
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(gen);
    return z;
}

template <std::uniform_random_bit_generator Gen>
double uniform01(Gen& gen) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen);
}

inline double log_sum_exp(const Eigen::Ref<const Vector>& a) {
    const double m = a.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((a.array() - m).exp().sum());
}

/// Largest and smallest eigenvalues of a symmetric matrix; throws unless SPD.
struct SpdSpectrum {
    double lambda_min;
    double lambda_max;
};

inline SpdSpectrum spd_spectrum(const Matrix& sigma, const std::string& what = "covariance") {
    require(sigma.rows() == sigma.cols() && sigma.rows() > 0, what + " must be a non-empty square matrix");
    require(sigma.allFinite(), what + " has non-finite entries");
    require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + sigma.cwiseAbs().maxCoeff()),
            what + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    require(lo > 0.0, what + " must be positive definite (lambda_min = " + std::to_string(lo) + ")");
    return {lo, hi};
}

}  // namespace locsamp
