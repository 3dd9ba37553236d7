#include "emrl/normal.hpp"
#include "emrl/truncnorm.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace emrl;

namespace {

const TruncNormParams sym{0.5, 0.2, 0.0, 1.0};

}

TEST(Normal, CdfMatchesQuadrature)
{
    for (double x : {-6.0, -2.5, -0.3, 0.0, 0.7, 3.1}) {
        double q = 0.5 - oracle::integrate([](double s) { return norm_pdf(s); }, x, 0.0);
        if (x > 0) q = 0.5 + oracle::integrate([](double s) { return norm_pdf(s); }, 0.0, x);
        EXPECT_NEAR(norm_cdf(x), q, 1e-12) << x;
    }
}

TEST(Normal, QuantileInvertsCdf)
{
    for (double p : {1e-300, 1e-20, 1e-8, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-12}) {
        double x = norm_quantile(p);
        double back = p < 0.5 ? norm_cdf(x) : 1.0 - 0.5 * std::erfc(x * M_SQRT1_2);
        EXPECT_LE(oracle::rel_err(back, p, 1e-300), 1e-9) << p;
    }
}

TEST(Normal, LogCdfDeepTail)
{
    for (double x : {-20.0, -29.0, -31.0, -45.0}) {
        // Mills ratio continued fraction as independent oracle
        double cf = 0.0;
        for (int k = 200; k >= 1; --k) cf = k / (-x + cf);
        double mills = 1.0 / (-x + cf);
        double want = norm_log_pdf(x) + std::log(mills);
        EXPECT_NEAR(norm_log_cdf(x), want, 1e-11 * std::fabs(want)) << x;
    }
}

TEST(Normal, LogQuantileRoundTrip)
{
    for (double lp : {-1e4, -2000.0, -701.0, -50.0, -1.0, -1e-6})
        EXPECT_NEAR(norm_log_cdf(norm_quantile_log(lp)), lp, 1e-9 * std::max(1.0, std::fabs(lp)));
}

TEST(TruncNorm, PdfOutsideSupportIsZero) { EXPECT_EQ(pdf(sym, 1.5), 0.0); }

TEST(TruncNorm, PdfNormalizes)
{
    double mass = oracle::integrate([](double x) { return pdf(sym, x); }, 0.0, 1.0);
    EXPECT_NEAR(mass, 1.0, 1e-10);
}

TEST(TruncNorm, PdfAtCenterMatchesParentQuadrature)
{
    oracle::TruncNormQuad q(0.5, 0.2, 0.0, 1.0);
    EXPECT_NEAR(pdf(sym, 0.5), norm_pdf(0.0) / (0.2 * std::exp(q.log_z())), 1e-12);
}

TEST(TruncNorm, InvalidParamsRejected)
{
    EXPECT_THROW(pdf({0.5, -1.0, 0.0, 1.0}, 0.5), std::domain_error);
    EXPECT_THROW(pdf({0.5, 0.2, 1.0, 0.0}, 0.5), std::domain_error);
    EXPECT_THROW(pdf(sym, std::nan("")), std::domain_error);
}

TEST(TruncNorm, SymmetricMeanAndVariance)
{
    auto m = moments(sym);
    EXPECT_EQ(m.mean, 0.5);
    oracle::TruncNormQuad q(0.5, 0.2, 0.0, 1.0);
    EXPECT_NEAR(m.variance, q.variance(), 1e-12);
    EXPECT_NEAR(m.variance, 0.03645, 1e-5);
}

TEST(TruncNorm, UniformLimit)
{
    TruncNormParams wide{0.5, 1000.0, 0.0, 1.0};
    auto m = moments(wide);
    EXPECT_NEAR(m.mean, 0.5, 1e-4);
    EXPECT_NEAR(m.variance, 1.0 / 12.0, 1e-4);
    EXPECT_NEAR(entropy(wide), 0.0, 1e-3);
}

TEST(TruncNorm, EntropyAgainstQuadrature)
{
    oracle::TruncNormQuad q(0.5, 0.2, 0.0, 1.0);
    EXPECT_NEAR(entropy(sym), q.entropy(), 1e-8);
    double A = -2.5, B = 2.5;
    double z = norm_cdf(B) - norm_cdf(A);
    double corr = (A * norm_pdf(A) - B * norm_pdf(B)) / (2.0 * z);
    EXPECT_LE(corr, 0.0);
    EXPECT_GE(corr, -0.5);
}

TEST(TruncNorm, SampleMedianAndBounds)
{
    EXPECT_NEAR(sample(sym, 0.5), 0.5, 1e-14);
    EXPECT_NEAR(sample(sym, 1e-15), 0.0, 1e-6);
    EXPECT_NEAR(sample(sym, 1.0 - 1e-15), 1.0, 1e-6);
    EXPECT_THROW(sample(sym, 0.0), std::domain_error);
    EXPECT_THROW(sample(sym, 1.0), std::domain_error);
}

TEST(TruncNorm, SampleInvertsCdf)
{
    for (TruncNormParams p : {sym, TruncNormParams{2.0, 0.3, 0.0, 1.0}, TruncNormParams{-40.0, 1.0, 0.0, 1.0},
                              TruncNormParams{0.9, 0.05, 0.0, 1.0}}) {
        for (double u : {0.01, 0.2, 0.5, 0.8, 0.99})
            EXPECT_NEAR(cdf(p, sample(p, u)), u, 1e-9) << p.alpha << " " << u;
    }
}

TEST(TruncNorm, SampleMeanMatchesMoments)
{
    TruncNormParams p{0.8, 0.4, 0.0, 1.0};
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double u;
        do u = unif(gen); while (u == 0.0);
        double x = sample(p, u);
        s += x;
        s2 += x * x;
    }
    double mean = s / n, var = s2 / n - mean * mean;
    auto m = moments(p);
    EXPECT_LE(std::fabs(mean - m.mean), 4.0 * std::sqrt(var / n));
}

TEST(TruncNorm, MeanGradExamples)
{
    EXPECT_NEAR(log_pdf_mean_grad(sym, 0.5), 0.0, 1e-14);
    EXPECT_NEAR(log_pdf_mean_grad(sym, 0.7), 5.0, 1e-12);
    EXPECT_THROW(log_pdf_mean_grad(sym, 1.2), std::domain_error);
}

TEST(TruncNorm, MeanGradMatchesFiniteDifference)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        double beta = 0.1 + 2.0 * u01(gen);
        double alpha = 0.5 + (u01(gen) - 0.5) * 6.0 * beta;
        double x = u01(gen);
        TruncNormParams p{alpha, beta, 0.0, 1.0};
        double fd = oracle::central_diff(
            [&](double al) { return log_pdf(TruncNormParams{al, beta, 0.0, 1.0}, x); }, alpha, 1e-6);
        EXPECT_LE(oracle::rel_err(log_pdf_mean_grad(p, x), fd, 1e-6), 1e-5) << i;
    }
}

TEST(TruncNorm, EntropyGradMatchesFiniteDifference)
{
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        double beta = 0.1 + 2.0 * u01(gen);
        double alpha = 0.5 + (u01(gen) - 0.5) * 6.0 * beta;
        TruncNormParams p{alpha, beta, 0.0, 1.0};
        double fd = oracle::central_diff(
            [&](double al) { return entropy(TruncNormParams{al, beta, 0.0, 1.0}); }, alpha, 1e-6);
        EXPECT_LE(oracle::rel_err(entropy_mean_grad(p).d_alpha, fd, 1e-6), 1e-5) << i;
    }
    EXPECT_NEAR(entropy_mean_grad(sym).d_alpha, 0.0, 1e-14);
}

TEST(TruncNorm, RandomizedAgainstQuadrature)
{
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
        double a = -1.0 + 2.0 * u01(gen);
        double b = a + 0.1 + 2.9 * u01(gen);
        double beta = 0.05 + 2.95 * u01(gen);
        double alpha = 0.5 * (a + b) + (2.0 * u01(gen) - 1.0) * 10.0 * beta;
        TruncNormParams p{alpha, beta, a, b};
        oracle::TruncNormQuad q(alpha, beta, a, b);
        auto m = moments(p);
        EXPECT_NEAR(m.mean, q.mean(), 1e-8) << i;
        EXPECT_NEAR(m.variance, q.variance(), 1e-8) << i;
        EXPECT_NEAR(entropy(p), q.entropy(), 1e-8) << i;
        EXPECT_NEAR(oracle::integrate([&](double x) { return pdf(p, x); }, a, b), 1.0, 1e-10) << i;
        EXPECT_LE(m.variance, beta * beta * (1.0 + 1e-12));
        EXPECT_GE(m.mean, a);
        EXPECT_LE(m.mean, b);
    }
}

TEST(TruncNorm, FarTailBranchAgainstQuadrature)
{
    for (double alpha : {-9.0, -15.0, 12.0, 40.0}) {
        TruncNormParams p{alpha, 1.0, 0.0, 1.0};
        oracle::TruncNormQuad q(alpha, 1.0, 0.0, 1.0);
        EXPECT_TRUE(standardized_moments(p).tail);
        auto m = moments(p);
        EXPECT_NEAR(m.mean, q.mean(), 1e-10) << alpha;
        EXPECT_NEAR(m.variance, q.variance(), 1e-10) << alpha;
        EXPECT_NEAR(entropy(p), q.entropy(), 1e-8) << alpha;
    }
    TruncNormParams deep{-1e4, 1.0, 0.0, 1.0};
    auto m = moments(deep);
    EXPECT_NEAR(m.mean, 1e-4, 1e-7);
    EXPECT_TRUE(std::isfinite(entropy(deep)));
}

TEST(TruncNorm, GibbsDensityMatchesPdf)
{
    // exp(h) with h(pi) = k1*pi - k2*pi^2 is a truncated normal with alpha = k1/(2 k2), beta^2 = 1/(2 k2)
    const double k1 = 0.9, k2 = 1.7;
    auto h = [&](double x) { return std::exp(k1 * x - k2 * x * x); };
    double norm = oracle::integrate(h, 0.0, 1.0);
    TruncNormParams p{k1 / (2.0 * k2), std::sqrt(1.0 / (2.0 * k2)), 0.0, 1.0};
    for (double x = 0.0; x <= 1.0; x += 0.05) EXPECT_NEAR(h(x) / norm, pdf(p, x), 1e-8);
}
