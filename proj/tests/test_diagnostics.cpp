#include "locsamp/diagnostics.hpp"
#include "locsamp/verify.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace locsamp;

namespace {
Vector v1(double x) { return Vector::Constant(1, x); }
auto normal_pdf(double m, double var) {
    return [m, var](double x) { return std::exp(-(x - m) * (x - m) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var); };
}
std::vector<double> normal_draws(std::size_t n, double mean, std::uint64_t seed) {
    Rng gen = make_stream(seed);
    std::normal_distribution<double> nd(mean, 1.0);
    std::vector<double> xs(n);
    for (auto& x : xs) x = nd(gen);
    return xs;
}
}  // namespace

TEST(Chi2Gaussians, Values) {
    EXPECT_EQ(chi2_gaussians(v1(0.3), v1(0.3), 1.0), 0.0);
    EXPECT_NEAR(chi2_gaussians(v1(0.0), v1(1.0), 1.0), std::numbers::e - 1.0, 1e-15);
    EXPECT_THROW(chi2_gaussians(v1(0.0), v1(1.0), 0.0), ValidationError);
}

TEST(Chi2Gaussians, MatchesQuadrature) {
    const double closed = chi2_gaussians(v1(0.0), v1(0.5), 1.0);
    const DivergenceReport q = chi2_quadrature(normal_pdf(0.0, 1.0), normal_pdf(0.5, 1.0), -15.0, 15.0);
    EXPECT_EQ(q.method, DivergenceMethod::quadrature);
    EXPECT_NEAR(q.value, closed, 1e-8);
}

TEST(Chi2Gaussians, RenyiConsistency) {
    for (double gap : {0.2, 0.8, 1.3}) {
        const CheckReport r = chi2_consistency_check(0.0, gap, 1.0);
        EXPECT_TRUE(r.pass);
        EXPECT_NEAR(r.lhs[0], r.rhs[0], 1e-6);
    }
}

TEST(TvHistogram, SelfConsistencyBias) {
    const auto xs = normal_draws(100000, 0.0, 1);
    const DivergenceReport tv = tv_histogram(xs, normal_pdf(0.0, 1.0), default_edges(xs));
    EXPECT_EQ(tv.method, DivergenceMethod::histogram);
    EXPECT_LE(tv.value, 0.02);
}

TEST(TvHistogram, SelfConsistencyOnMixture) {
    const GaussianMixture m = symmetric_mixture_1d();
    Rng gen = make_stream(2);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = m.sample(gen)[0];
    const DivergenceReport tv =
        tv_histogram(xs, [&](double x) { return std::exp(m.log_density(v1(x))); }, default_edges(xs));
    EXPECT_LE(tv.value, 0.02);
}

TEST(TvHistogram, DisjointSupports) {
    const auto xs = normal_draws(10000, 100.0, 3);
    const DivergenceReport tv = tv_histogram(xs, normal_pdf(0.0, 1.0), uniform_edges(-5.0, 5.0, 100));
    EXPECT_NEAR(tv.value, 1.0, 1e-6);
}

TEST(TvHistogram, ShiftedGaussian) {
    const auto xs = normal_draws(100000, 0.0, 4);
    const double analytic = 2.0 * normal_cdf(0.5) - 1.0;
    EXPECT_NEAR(analytic, 0.3829, 1e-4);
    const DivergenceReport tv = tv_histogram(xs, normal_pdf(1.0, 1.0), uniform_edges(-5.0, 6.0, 100));
    EXPECT_NEAR(tv.value, analytic, 0.02);
}

TEST(TvHistogram, RejectsEmptyConfiguration) {
    const auto xs = normal_draws(100, 0.0, 5);
    EXPECT_THROW(tv_histogram(xs, normal_pdf(0.0, 1.0), {1.0}), ValidationError);
    EXPECT_THROW(tv_histogram({}, normal_pdf(0.0, 1.0), uniform_edges(-1.0, 1.0, 4)), ValidationError);
}

TEST(Histogram, CountsAddUp) {
    const auto xs = normal_draws(5000, 0.0, 6);
    const Histogram h = make_histogram(xs, uniform_edges(-1.0, 1.0, 10));
    EXPECT_EQ(h.counts.size(), h.edges.size() - 1);
    std::size_t inside = 0;
    for (auto c : h.counts) inside += c;
    EXPECT_EQ(inside, h.total);
    EXPECT_EQ(h.total + h.below + h.above, xs.size());
}

TEST(KlGaussians, Values) {
    EXPECT_NEAR(kl_gaussians(1.0, 2.0, 1.0, 2.0), 0.0, 1e-15);
    EXPECT_NEAR(kl_gaussians(3.0, 1.0, 0.0, 1.0), 4.5, 1e-14);
    EXPECT_GT(std::abs(kl_gaussians(0.0, 1.0, 0.0, 3.0) - kl_gaussians(0.0, 3.0, 0.0, 1.0)), 1e-3);
    EXPECT_THROW(kl_gaussians(0.0, -1.0, 0.0, 1.0), ValidationError);
}

TEST(KlGaussians, MatchesQuadrature) {
    const auto p = normal_pdf(0.4, 0.7);
    const auto q = normal_pdf(-0.2, 1.9);
    const double quad = integrate([&](double x) { return p(x) * std::log(p(x) / q(x)); }, -15.0, 15.0);
    EXPECT_NEAR(kl_gaussians(0.4, 0.7, -0.2, 1.9), quad, 1e-9);
}

TEST(PoissonTail, Values) {
    const PoissonTailReport r = poisson_tail_check(1.0, 3.0);
    EXPECT_NEAR(r.exact, 0.018988, 1e-6);
    EXPECT_NEAR(r.bound, std::exp(-9.0 / 8.0), 1e-15);
    EXPECT_NEAR(r.bound, 0.32465, 1e-5);
    EXPECT_TRUE(r.pass);
    const PoissonTailReport tiny = poisson_tail_check(2.0, 1e-9);
    EXPECT_NEAR(tiny.bound, 1.0, 1e-9);
    EXPECT_TRUE(tiny.pass);
    EXPECT_TRUE(poisson_tail_check(20.0, 10.0).pass);
}

TEST(PoissonTail, Grid) {
    for (double lambda : {1.0, 5.0, 20.0})
        for (double s : {1.0, 3.0, 10.0}) EXPECT_TRUE(poisson_tail_check(lambda, s).pass) << lambda << " " << s;
}

TEST(RgoEquivalence, GaussianTarget) {
    const Potential p = standard_gaussian_potential(1);
    const CheckReport r = verify_rgo_equivalence(p, 0.3, 2.0, 0.4, -1.1, Grid1D{}, 1e-12);
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(verify_rgo_equivalence(p, 1e-12, 2.0, 0.0, 1.0).pass);
}

TEST(RgoEquivalence, MixtureTarget) {
    const Potential p = mixture_potential(symmetric_mixture_1d());
    EXPECT_TRUE(verify_rgo_equivalence(p, 0.01, 2.0, 0.05, 0.8).pass);
}

TEST(RgoEquivalence, RandomDraws) {
    Rng gen = make_stream(7);
    for (const Potential& p : {standard_gaussian_potential(1), mixture_potential(symmetric_mixture_1d())}) {
        for (int i = 0; i < 20; ++i) {
            const double s0 = std::pow(10.0, -4.0 + 3.0 * uniform01(gen));
            const double T = 0.05 + 5.0 * uniform01(gen);
            EXPECT_TRUE(verify_rgo_equivalence(p, s0, T, standard_normal_vector(1, gen)[0],
                                               3.0 * standard_normal_vector(1, gen)[0]).pass);
        }
    }
}

TEST(RgoEquivalence, RejectsHigherDimensions) {
    EXPECT_THROW(verify_rgo_equivalence(standard_gaussian_potential(2), 0.1, 1.0, 0.0, 0.0), ValidationError);
}

TEST(KsDistance, DetectsShift) {
    const auto xs = normal_draws(20000, 0.0, 8);
    EXPECT_LE(ks_distance(xs, [](double x) { return normal_cdf(x); }), 0.0115);
    EXPECT_GE(ks_distance(xs, [](double x) { return normal_cdf(x, 0.2); }), 0.06);
}

TEST(InverseCdfSampler, ReproducesGaussian) {
    const InverseCdfSampler s([](double x) { return -0.5 * x * x; }, -12.0, 12.0);
    for (double x : {-2.0, -0.3, 0.0, 1.7}) EXPECT_NEAR(s.cdf(x), normal_cdf(x), 1e-8);
    EXPECT_NEAR(s.quantile(normal_cdf(0.8)), 0.8, 1e-6);
    Rng gen = make_stream(9);
    std::vector<double> xs(50000);
    for (auto& x : xs) x = s(gen);
    EXPECT_LE(ks_distance(xs, [](double x) { return normal_cdf(x); }), 0.0073);
}

TEST(IdentityBattery, AllChecksPass) {
    const auto checks = identity_battery(0);
    EXPECT_GE(checks.size(), 90u);
    for (const auto& c : checks) EXPECT_TRUE(c.pass) << c.check << " error " << c.max_abs_error();
}
