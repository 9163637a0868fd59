#include "locsamp/diagnostics.hpp"
#include "locsamp/rgo.hpp"
#include "locsamp/verify.hpp"

#include <gtest/gtest.h>

using namespace locsamp;

namespace {
Vector v1(double x) { return Vector::Constant(1, x); }

double stationarity_residual(const Potential& p, const RGOQuery& q, const Vector& w) {
    return (p.gradient(w) + (w - q.y) / q.sigma2).norm();
}
}  // namespace

TEST(Agm, QuadraticMinimizer) {
    const Potential p = standard_gaussian_potential(1);
    const RGOQuery q{v1(4.0), 0.1};
    const AgmResult r = agm_minimize(p, q);
    const double w_star = 40.0 / 11.0;
    EXPECT_LE(stationarity_residual(p, q, r.w), 1.0);
    // |grad g| <= 1 and g is (1/sigma2 + 1)-strongly convex.
    EXPECT_LE(std::abs(r.w[0] - w_star), 1.0 / 11.0 + 1e-12);
    EXPECT_NEAR(r.grad_norm, stationarity_residual(p, q, r.w), 1e-12);
}

TEST(Agm, StationaryStartReturnsImmediately) {
    const Potential p = standard_gaussian_potential(1);
    const RGOQuery q{v1(4.0), 0.1};
    AgmOptions opt;
    opt.start = v1(40.0 / 11.0);
    const AgmResult r = agm_minimize(p, q, opt);
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_NEAR(r.w[0], 40.0 / 11.0, 1e-15);
}

TEST(Agm, MixtureStoppingRuleCertified) {
    const Potential p = mixture_potential(symmetric_mixture_1d());
    for (double y : {0.5, -3.0, 10.0}) {
        const RGOQuery q{v1(y), 0.05};
        const AgmResult r = agm_minimize(p, q);
        EXPECT_LE(stationarity_residual(p, q, r.w), std::sqrt(p.smoothness() * p.dim()));
    }
}

TEST(Agm, ConvergesFromFarAwayInSeveralDimensions) {
    const Potential p = mixture_potential(skewed_mixture_2d());
    Rng gen = make_stream(9);
    const double sigma2 = 1.0 / (2.0 * p.smoothness() * 2.0);
    for (int i = 0; i < 50; ++i) {
        const RGOQuery q{50.0 * standard_normal_vector(2, gen), sigma2};
        const AgmResult r = agm_minimize(p, q);
        EXPECT_LE(stationarity_residual(p, q, r.w), std::sqrt(2.0 * p.smoothness()) * (1 + 1e-12));
    }
}

TEST(Agm, IterationCapReportsResidual) {
    const Potential p = standard_gaussian_potential(1);
    AgmOptions opt;
    opt.max_iterations = 0;
    try {
        agm_minimize(p, RGOQuery{v1(100.0), 0.1}, opt);
        FAIL() << "expected IterationLimitError";
    } catch (const IterationLimitError& e) {
        EXPECT_GT(e.last_residual(), 1.0);
    }
}

TEST(Agm, WarmStartIsExactForQuadratic) {
    const Potential p = standard_gaussian_potential(1);
    AgmOptions opt;
    opt.warm_start = true;
    const AgmResult r = agm_minimize(p, RGOQuery{v1(4.0), 0.1}, opt);
    EXPECT_EQ(r.iterations, 0u);
}

TEST(RgoPreconditions, VarianceLimits) {
    const Potential p = standard_gaussian_potential(2);
    EXPECT_THROW(agm_minimize(p, RGOQuery{Vector::Zero(2), 1.0}), ValidationError);
    EXPECT_THROW(agm_minimize(p, RGOQuery{Vector::Zero(2), 0.6}), ValidationError);
    EXPECT_THROW(agm_minimize(p, RGOQuery{Vector::Zero(2), 0.0}), ValidationError);
    EXPECT_THROW(agm_minimize(p, RGOQuery{Vector::Zero(3), 0.1}), ValidationError);
    EXPECT_TRUE(rgo_efficient_regime(p, 0.25));
    EXPECT_FALSE(rgo_efficient_regime(p, 0.4));
    Rng gen = make_stream(1);
    EXPECT_FALSE(rgo_sample(p, RGOQuery{Vector::Zero(2), 0.4}, gen).efficient_regime);
}

TEST(Envelope, TangentAtStationaryPoint) {
    const Potential p = mixture_potential(symmetric_mixture_1d());
    const RGOQuery q{v1(0.8), 0.2};
    const Vector w = v1(0.37);
    const double expected = -p.value(w) - (w - q.y).squaredNorm() / (2.0 * q.sigma2);
    EXPECT_NEAR(envelope_logdensity(p, q, w, w), expected, 1e-14);
}

TEST(Envelope, DominatesTargetExponent) {
    Rng gen = make_stream(2);
    for (const Potential& p : {mixture_potential(symmetric_mixture_1d()), standard_gaussian_potential(1),
                               mixture_potential(skewed_mixture_2d())}) {
        const double sigma2 = 1.0 / (2.0 * p.smoothness() * static_cast<double>(p.dim()));
        for (int k = 0; k < 5; ++k) {
            const RGOQuery q{3.0 * standard_normal_vector(p.dim(), gen), sigma2};
            const Envelope env = make_envelope(p, q, agm_minimize(p, q).w);
            for (int i = 0; i < 10000; ++i) {
                const Vector x = env.mean() + 4.0 * standard_normal_vector(p.dim(), gen);
                const double target = -p.value(x) - (x - q.y).squaredNorm() / (2.0 * q.sigma2);
                EXPECT_LE(target, env.log_density(x) + 1e-9 * (1.0 + std::abs(target)));
            }
        }
    }
}

TEST(Envelope, AcceptanceRatioInUnitIntervalForExactCurvature) {
    // V = x^2/2 with L = 1: h - V_y^sigma = -(x - w)^2, so the ratio lies in (0, 1].
    const Potential p = standard_gaussian_potential(1);
    const RGOQuery q{v1(1.0), 0.3};
    const Envelope env = make_envelope(p, q, v1(0.5));
    for (double x = -5.0; x <= 5.0; x += 0.1) {
        const double lr = env.log_acceptance(v1(x), p.value(v1(x)));
        EXPECT_LE(lr, 1e-15);
        EXPECT_NEAR(lr, -(x - 0.5) * (x - 0.5), 1e-12);
    }
}

TEST(Envelope, GaussianParameters) {
    const Potential p = standard_gaussian_potential(1);
    const RGOQuery q{v1(2.0), 0.2};
    const Vector w = v1(5.0 / 3.0);
    const Envelope env = make_envelope(p, q, w);
    EXPECT_DOUBLE_EQ(env.precision(), 4.0);
    // For a quadratic V with curvature L the envelope is centered at the exact minimizer.
    EXPECT_NEAR(env.mean()[0], 5.0 / 3.0, 1e-12);
    // The envelope log-density is a quadratic with that precision and mean.
    const double at_mean = env.log_density(env.mean());
    EXPECT_NEAR(env.log_density(env.mean() + v1(0.5)) - at_mean, -0.5 * 4.0 * 0.25, 1e-12);
}

TEST(EnvelopeMean, MaximizesEnvelopeForMixture) {
    const Potential p = mixture_potential(symmetric_mixture_1d());
    const RGOQuery q{v1(0.4), 0.25};
    const Envelope env = make_envelope(p, q, v1(-0.2));
    const double m = env.mean()[0];
    const double f0 = env.log_density(v1(m));
    EXPECT_GT(f0, env.log_density(v1(m + 1e-3)));
    EXPECT_GT(f0, env.log_density(v1(m - 1e-3)));
}

TEST(RgoSample, QuadraticTargetMoments) {
    const Potential p = standard_gaussian_potential(1);
    const RGOQuery q{v1(2.0), 0.2};
    Rng gen = make_stream(3);
    const int n = 100000;
    std::vector<double> xs(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        xs[i] = rgo_sample(p, q, gen).sample[0];
        sum += xs[i];
    }
    const double mean = sum / n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= (n - 1);
    const double true_var = 1.0 / 6.0;
    EXPECT_NEAR(mean, 5.0 / 3.0, 3.0 * std::sqrt(true_var / n));
    EXPECT_NEAR(var, true_var, 3.0 * true_var * std::sqrt(2.0 / (n - 1)));
    EXPECT_LE(ks_distance(xs, [&](double x) { return normal_cdf(x, 5.0 / 3.0, true_var); }), 0.01);
}

TEST(RgoSample, GeneralQuadraticMatchesAnalyticLaw) {
    Matrix A(1, 1);
    A << 0.8;
    const Potential p = quadratic_potential(A, v1(-0.4));
    const RGOQuery q{v1(-1.0), 0.5};
    // Precision 0.8 + 2 = 2.8, mean (-1/0.5 + 0.4)/2.8.
    const double prec = 2.8;
    const double mean = (-2.0 + 0.4) / prec;
    Rng gen = make_stream(4);
    std::vector<double> xs;
    for (int i = 0; i < 50000; ++i) xs.push_back(rgo_sample(p, q, gen).sample[0]);
    EXPECT_LE(ks_distance(xs, [&](double x) { return normal_cdf(x, mean, 1.0 / prec); }), 0.012);
}

TEST(RgoSample, MixtureTargetMatchesQuadratureLaw) {
    const Potential p = mixture_potential(symmetric_mixture_1d());
    const RGOQuery q{v1(0.3), 0.3};
    const InverseCdfSampler exact([&](double x) { return -p.value(v1(x)) - (x - 0.3) * (x - 0.3) / 0.6; }, -12.0, 12.0);
    Rng gen = make_stream(5);
    std::vector<double> xs;
    for (int i = 0; i < 50000; ++i) xs.push_back(rgo_sample(p, q, gen).sample[0]);
    EXPECT_LE(ks_distance(xs, [&](double x) { return exact.cdf(x); }), 0.012);
}

TEST(RgoSample, LinearPotentialNeverRejects) {
    Matrix A = Matrix::Zero(2, 2);
    Vector b(2);
    b << 1.0, -2.0;
    const Potential p = quadratic_potential(A, b, 0.0, 0.0, 1.0);
    EXPECT_EQ(p.smoothness(), 0.0);
    Rng gen = make_stream(6);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(rgo_sample(p, RGOQuery{standard_normal_vector(2, gen), 0.7}, gen).rejection_rounds, 0u);
}

TEST(RgoSample, MixtureRejectionRoundsStaySmall) {
    const Potential p = mixture_potential(symmetric_mixture_1d());
    const RGOQuery q{v1(0.0), 1.0 / 6.0};
    Rng gen = make_stream(7);
    double total = 0.0;
    for (int i = 0; i < 10000; ++i) total += static_cast<double>(rgo_sample(p, q, gen).rejection_rounds);
    EXPECT_LE(total / 10000.0, 10.0);
}

TEST(RgoSample, QueryLedgerMatchesCounter) {
    const Potential p = mixture_potential(skewed_mixture_2d());
    Rng gen = make_stream(8);
    for (int i = 0; i < 200; ++i) {
        const QuerySnapshot before = p.queries();
        const RGOResult r = rgo_sample(p, RGOQuery{2.0 * standard_normal_vector(2, gen), 0.2}, gen);
        const QuerySnapshot used = p.queries() - before;
        EXPECT_EQ(r.value_queries, used.value_queries);
        EXPECT_EQ(r.gradient_queries, used.gradient_queries);
        EXPECT_EQ(r.value_queries, 2u + r.rejection_rounds);
        EXPECT_EQ(r.gradient_queries, r.agm_iterations + 1u);
    }
}
