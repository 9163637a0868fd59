#include "locsamp/potential.hpp"
#include "locsamp/processes.hpp"
#include "locsamp/quadrature.hpp"
#include "locsamp/verify.hpp"

#include <gtest/gtest.h>

using namespace locsamp;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Vector central_difference(const Potential& p, const Vector& x, double h) {
    Vector g(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vector a = x, b = x;
        a[j] += h;
        b[j] -= h;
        g[j] = (p.value(a) - p.value(b)) / (2.0 * h);
    }
    return g;
}

std::vector<Potential> builtin_targets() {
    Matrix A(2, 2);
    A << 2.0, 0.5, 0.5, 1.0;
    return {standard_gaussian_potential(1), standard_gaussian_potential(3), mixture_potential(symmetric_mixture_1d()),
            mixture_potential(skewed_mixture_2d()), quadratic_potential(A, vec({1.0, -1.0}), 0.3)};
}

}  // namespace

TEST(StandardGaussian, OriginValueAndGradient) {
    const Potential p = standard_gaussian_potential(1);
    EXPECT_EQ(p.value(vec({0.0})), 0.0);
    EXPECT_EQ(p.gradient(vec({0.0}))[0], 0.0);
    EXPECT_EQ(p.smoothness(), 1.0);
    EXPECT_EQ(p.second_moment_bound(), 1.0);
    EXPECT_EQ(p.min_value_lower_bound(), 0.0);
}

TEST(StandardGaussian, DirectFormulaInTwoDimensions) {
    const Potential p = standard_gaussian_potential(2);
    EXPECT_DOUBLE_EQ(p.value(vec({3.0, 4.0})), 12.5);
    EXPECT_EQ(p.gradient(vec({3.0, 4.0})), vec({3.0, 4.0}));
    EXPECT_EQ(p.second_moment_bound(), 2.0);
}

TEST(StandardGaussian, RejectsZeroDimension) { EXPECT_THROW(standard_gaussian_potential(0), ValidationError); }

TEST(StandardGaussian, FiniteDifferenceGradient) {
    const Potential p = standard_gaussian_potential(3);
    Rng gen = make_stream(1);
    for (int i = 0; i < 20; ++i) {
        const Vector x = 2.0 * standard_normal_vector(3, gen);
        EXPECT_LE((central_difference(p, x, 1e-5) - p.gradient(x)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(BuiltinTargets, FiniteDifferenceGradientsAtRandomPoints) {
    Rng gen = make_stream(2);
    for (const Potential& p : builtin_targets()) {
        for (int i = 0; i < 100; ++i) {
            const Vector x = 2.0 * standard_normal_vector(p.dim(), gen);
            const Vector g = p.gradient(x);
            const Vector fd = central_difference(p, x, 1e-5);
            EXPECT_LE((fd - g).norm(), 1e-6 * std::max(1.0, g.norm())) << p.name();
        }
    }
}

TEST(BuiltinTargets, QuadraticUpperBoundFromSmoothness) {
    Rng gen = make_stream(3);
    for (const Potential& p : builtin_targets()) {
        for (int i = 0; i < 200; ++i) {
            const Vector x = 3.0 * standard_normal_vector(p.dim(), gen);
            const Vector h = standard_normal_vector(p.dim(), gen) * std::exp(-3.0 * uniform01(gen));
            const double gap = std::abs(p.value(x + h) - p.value(x) - p.gradient(x).dot(h));
            EXPECT_LE(gap, 0.5 * p.smoothness() * h.squaredNorm() + 1e-10) << p.name();
        }
    }
}

TEST(BuiltinTargets, GradientIsLipschitzOnSampledPairs) {
    Rng gen = make_stream(4);
    for (const Potential& p : builtin_targets()) {
        for (int i = 0; i < 200; ++i) {
            const Vector x = 3.0 * standard_normal_vector(p.dim(), gen);
            const Vector y = 3.0 * standard_normal_vector(p.dim(), gen);
            EXPECT_LE((p.gradient(x) - p.gradient(y)).norm(), p.smoothness() * (x - y).norm() * (1.0 + 1e-12) + 1e-12)
                << p.name();
        }
    }
}

TEST(BuiltinTargets, MinValueLowerBoundHolds) {
    Rng gen = make_stream(5);
    for (const Potential& p : builtin_targets()) {
        for (int i = 0; i < 500; ++i) {
            const Vector x = 3.0 * standard_normal_vector(p.dim(), gen);
            EXPECT_LE(p.min_value_lower_bound(), p.value(x)) << p.name();
        }
    }
}

TEST(QueryCounter, EveryCallIncrementsExactlyOneCounter) {
    const Potential p = standard_gaussian_potential(2);
    const QuerySnapshot start = p.queries();
    EXPECT_EQ(start.total(), 0u);
    p.value(vec({1.0, 2.0}));
    p.value(vec({1.0, 2.0}));
    p.gradient(vec({0.0, 0.0}));
    const QuerySnapshot now = p.queries() - start;
    EXPECT_EQ(now.value_queries, 2u);
    EXPECT_EQ(now.gradient_queries, 1u);
    EXPECT_EQ(p.value_at_origin(), 0.0);
    EXPECT_EQ((p.queries() - start).total(), 3u);
}

TEST(QueryCounter, CopiesShareAndWithCounterSeparates) {
    const Potential p = standard_gaussian_potential(1);
    const Potential same = p;
    same.value(vec({1.0}));
    EXPECT_EQ(p.queries().value_queries, 1u);
    auto own = std::make_shared<QueryCounter>();
    const Potential other = p.with_counter(own);
    other.gradient(vec({1.0}));
    EXPECT_EQ(own->snapshot().gradient_queries, 1u);
    EXPECT_EQ(p.queries().gradient_queries, 0u);
}

TEST(MixturePotential, SingleCenteredComponentIsGaussian) {
    const GaussianMixture m({1.0}, {Vector::Zero(2)}, Matrix::Identity(2, 2));
    const Potential p = mixture_potential(m);
    const Vector x = vec({0.7, -1.3});
    EXPECT_NEAR(p.value(x) - p.value(Vector::Zero(2)), 0.5 * x.squaredNorm(), 1e-12);
    EXPECT_NEAR(p.smoothness(), 1.0, 0.0);
}

TEST(MixturePotential, SecondMomentOfSymmetricPair) {
    const Potential p = mixture_potential(symmetric_mixture_1d());
    EXPECT_DOUBLE_EQ(p.second_moment_bound(), 2.0);
}

TEST(MixturePotential, DensityIntegratesToOne) {
    for (const GaussianMixture& m : {symmetric_mixture_1d(),
                                     GaussianMixture({0.2, 0.5, 0.3}, {Vector::Constant(1, -2.0), Vector::Constant(1, 0.5), Vector::Constant(1, 1.5)},
                                                     Matrix::Constant(1, 1, 0.7))}) {
        const Potential p = mixture_potential(m);
        Vector x(1);
        const double z = integrate([&](double t) {
            x[0] = t;
            return std::exp(-p.value(x));
        }, -10.0, 10.0);
        EXPECT_NEAR(z, 1.0, 1e-6);
    }
}

TEST(MixturePotential, TwoDimensionalDensityIntegratesToOne) {
    const GaussianMixture m = skewed_mixture_2d();
    Vector x(2);
    const double z = integrate2([&](double a, double b) {
        x << a, b;
        return std::exp(m.log_density(x));
    }, -9.0, 9.0, -9.0, 9.0);
    EXPECT_NEAR(z, 1.0, 1e-6);
}

TEST(MixturePotential, StableFarFromModes) {
    const Potential p = mixture_potential(symmetric_mixture_1d());
    const double v = p.value(vec({60.0}));
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(p.gradient(vec({60.0}))[0], 59.0, 1e-9);
}

TEST(MixturePotential, RejectsInvalidInputs) {
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(GaussianMixture({1.0}, {Vector::Zero(2)}, bad), ValidationError);
    EXPECT_THROW(GaussianMixture({0.4, 0.4}, {Vector::Zero(1), Vector::Zero(1)}, Matrix::Identity(1, 1)), ValidationError);
    EXPECT_THROW(GaussianMixture({-0.5, 1.5}, {Vector::Zero(1), Vector::Zero(1)}, Matrix::Identity(1, 1)), ValidationError);
    EXPECT_THROW(GaussianMixture({1.0}, {Vector::Constant(1, 3.0)}, Matrix::Identity(1, 1), 1.0), ValidationError);
}

TEST(MixtureInvariants, RadiusAndSpectrum) {
    const GaussianMixture m = skewed_mixture_2d();
    for (const auto& c : m.centers()) EXPECT_LE(c.norm(), m.radius() + 1e-15);
    EXPECT_GT(m.lambda_min(), 0.0);
    EXPECT_GE(m.op_norm(), m.lambda_min());
    double w = 0.0;
    for (double x : m.weights()) w += x;
    EXPECT_NEAR(w, 1.0, 1e-15);
}

TEST(MixtureSmoothness, IdentityCovariance) {
    EXPECT_DOUBLE_EQ(mixture_smoothness(2.0, Matrix::Identity(3, 3)), 3.0);
    EXPECT_DOUBLE_EQ(mixture_smoothness(0.0, Matrix::Identity(1, 1)), 1.0);
    EXPECT_DOUBLE_EQ(mixture_smoothness(1.0, Matrix::Identity(1, 1)), 1.0);
}

TEST(MixtureSmoothness, GeneralCovarianceViaWhitening) {
    // Radius R/sqrt(lambda) after whitening, scaled back by 1/lambda.
    EXPECT_DOUBLE_EQ(mixture_smoothness(2.0, 4.0 * Matrix::Identity(2, 2)), 0.25);
    EXPECT_DOUBLE_EQ(mixture_smoothness(3.0, 0.5 * Matrix::Identity(1, 1)), 17.0 / 0.5);
    Matrix bad = Matrix::Identity(2, 2);
    bad(1, 1) = -1.0;
    EXPECT_THROW(mixture_smoothness(1.0, bad), ValidationError);
}

TEST(MixtureSmoothness, NumericalSecondDerivativeOnGrid) {
    const Potential p = mixture_potential(symmetric_mixture_1d());
    Vector x(1);
    const double measured = measure_smoothness_1d([&](double t) {
        x[0] = t;
        return p.value(x);
    }, Grid1D{-6.0, 6.0, 2001});
    EXPECT_LE(measured, 1.0 + 1e-3);
}

TEST(MixtureSmoothness, HessianSpectrumWithinBoundOnGrid) {
    for (const GaussianMixture& m : {skewed_mixture_2d(),
                                     GaussianMixture({0.5, 0.5}, {vec({1.5, 0.0}), vec({-1.5, 0.0})}, Matrix::Identity(2, 2))}) {
        const Potential p = mixture_potential(m);
        const double L = p.smoothness();
        for (double a = -4.0; a <= 4.0; a += 0.25) {
            for (double b = -4.0; b <= 4.0; b += 0.25) {
                const Matrix H = fd_hessian([&](const Vector& z) { return p.value(z); }, vec({a, b}));
                Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
                EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), L + 1e-3);
            }
        }
    }
}

TEST(QuadraticPotential, AnalyticMomentsAndMinimum) {
    Matrix A(2, 2);
    A << 2.0, 0.0, 0.0, 0.5;
    const Potential p = quadratic_potential(A, vec({2.0, -1.0}), 1.0);
    EXPECT_DOUBLE_EQ(p.smoothness(), 2.0);
    // mean = (-1, 2), covariance diag(0.5, 2)
    EXPECT_NEAR(p.second_moment_bound(), 5.0 + 2.5, 1e-12);
    EXPECT_NEAR(p.min_value_lower_bound(), p.value(vec({-1.0, 2.0})), 1e-12);
}

TEST(QuadraticPotential, MissingMinimumIsAnError) {
    Matrix A(1, 1);
    A << -1.0;
    const Potential p = quadratic_potential(A, vec({0.0}));
    EXPECT_FALSE(p.has_min_value_lower_bound());
    EXPECT_THROW(p.min_value_lower_bound(), ValidationError);
}
