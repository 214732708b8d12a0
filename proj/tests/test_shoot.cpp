#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "toboggan/shoot.hpp"

using namespace toboggan;

namespace {

ModelSpec harmonic()
{
    ModelSpec m;
    m.coeffs[2] = 1.0;
    return m;
}

ModelSpec cubic()
{
    ModelSpec m;
    m.coeffs[3] = imag_unit;
    return m;
}

ContourSpec shift(double eps, int winding = 0)
{
    ContourSpec c;
    c.epsilon = eps;
    c.winding = winding;
    return c;
}

ShootConfig config(int steps = 20000, double gamma_max = 0.0)
{
    ShootConfig cfg;
    cfg.steps = steps;
    cfg.gamma_max = gamma_max;
    return cfg;
}

} // namespace

TEST(Mismatch, HarmonicGroundStateMatches)
{
    const auto m = shooting_mismatch(harmonic(), 0, 1.0, config(), shift(0.5));
    EXPECT_LT(std::abs(m.logderiv), 1e-6);
    EXPECT_FALSE(m.step_too_coarse);
}

TEST(Mismatch, HarmonicOffEigenvalueIsOrderOne)
{
    const auto m = shooting_mismatch(harmonic(), 0, 2.0, config(), shift(0.5));
    EXPECT_GT(std::abs(m.logderiv), 0.1);
}

TEST(HalfPath, FreeParticleStaysFinite)
{
    const cplx E{1.0, 0.5};
    for (auto side : {Side::left, Side::right}) {
        const auto r = integrate_halfpath(ModelSpec{}, 0, E, side, config(10000, 1.2), shift(1.0));
        EXPECT_TRUE(std::isfinite(std::abs(r.value)));
        EXPECT_TRUE(std::isfinite(std::abs(r.derivative)));
        EXPECT_TRUE(std::isfinite(r.log_scale));
        EXPECT_GT(std::abs(r.value), 0.0);
        EXPECT_FALSE(r.step_too_coarse);
    }
    // real positive E oscillates without decay, so no truncation can be chosen
    EXPECT_THROW(integrate_halfpath(ModelSpec{}, 0, 1.0, Side::right, config(10000), shift(1.0)), error);
}

TEST(HalfPath, FreeParticleLogDerivative)
{
    // the seeded branch exp(-q z) survives to the match point unchanged
    const cplx E{1.0, 0.5};
    const auto r = integrate_halfpath(ModelSpec{}, 0, E, Side::right, config(10000, 1.2), shift(1.0));
    const cplx q = std::sqrt(-E);
    const cplx want = q.real() > 0.0 ? -q : q;
    EXPECT_LT(std::abs(r.derivative / r.value - want), 1e-8);
}

TEST(FindEigenvalues, HarmonicLevels)
{
    const auto found = find_eigenvalues(harmonic(), 0, shift(0.5), config(), {0.8, 2.7, 5.2});
    ASSERT_EQ(found.roots.size(), 3u);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(found.roots[k].real(), 2 * k + 1, 1e-6);
        EXPECT_NEAR(found.roots[k].imag(), 0.0, 1e-6);
    }
}

TEST(FindEigenvalues, ShiftedOscillator)
{
    // x^2 + i x = (x + i/2)^2 + 1/4
    ModelSpec m = harmonic();
    m.coeffs[1] = imag_unit;
    const auto found = find_eigenvalues(m, 0, shift(1.0), config(), {1.0, 3.0, 5.5});
    ASSERT_EQ(found.roots.size(), 3u);
    for (int k = 0; k < 3; ++k)
        EXPECT_LT(std::abs(found.roots[k] - cplx(2 * k + 1.25)), 1e-5) << k;
}

TEST(FindEigenvalues, ImaginaryCubicAgainstOracle)
{
    const auto ref = oracle::sinc_lowest_real([](cplx r) { return imag_unit * r * r * r; }, 0.5, 0.07, 100, 1);
    ASSERT_EQ(ref.size(), 1u);
    const auto found = find_eigenvalues(cubic(), 0, shift(0.5), config(), {1.2});
    ASSERT_EQ(found.roots.size(), 1u);
    EXPECT_LT(std::abs(found.roots[0] - ref[0]) / ref[0].real(), 1e-4);
}

TEST(FindEigenvalues, IndependentOfShift)
{
    const auto a = find_eigenvalues(cubic(), 0, shift(0.5), config(), {1.2});
    const auto b = find_eigenvalues(cubic(), 0, shift(1.0), config(), {1.2});
    ASSERT_EQ(a.roots.size(), 1u);
    ASSERT_EQ(b.roots.size(), 1u);
    EXPECT_LT(std::abs(a.roots[0] - b.roots[0]), 1e-6);
}

TEST(FindEigenvalues, StepRefinementIsFourthOrder)
{
    // fixed truncation so only the step changes between runs
    auto root = [](int steps) {
        const auto found = find_eigenvalues(cubic(), 0, shift(0.5), config(steps, 1.35), {1.2});
        EXPECT_EQ(found.roots.size(), 1u);
        return found.roots.empty() ? cplx{} : found.roots[0];
    };
    const cplx e1 = root(400), e2 = root(800), e3 = root(1600);
    const double order = std::log2(std::abs(e1 - e2) / std::abs(e2 - e3));
    EXPECT_NEAR(order, 4.0, 0.3);
}

TEST(FindEigenvalues, RejectsCloseGuesses)
{
    try {
        find_eigenvalues(harmonic(), 0, shift(0.5), config(), {1.0, 1.0 + 1e-12});
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::config);
    }
}

TEST(FindEigenvalues, UnconvergedAttemptIsReported)
{
    ShootConfig cfg = config();
    cfg.max_iter = 1;
    const auto found = find_eigenvalues(harmonic(), 0, shift(0.5), cfg, {2.0});
    EXPECT_TRUE(found.roots.empty());
    ASSERT_EQ(found.attempts.size(), 1u);
    EXPECT_NE(found.attempts[0].status, RootStatus::converged);
    EXPECT_FALSE(found.attempts[0].message.empty());
}

TEST(ShootConfig, Validation)
{
    EXPECT_THROW(config(99).validate(), error);
    EXPECT_THROW(config(20000, pi / 2).validate(), error);
    ShootConfig bad_tol;
    bad_tol.root_tol = 0.0;
    EXPECT_THROW(bad_tol.validate(), error);
    EXPECT_NO_THROW(config(100).validate());
}

TEST(ShootConfig, ProfilesAreRejected)
{
    ContourSpec c;
    c.profile = [](double x) { return 0.5 + 0.01 * std::abs(x); };
    EXPECT_THROW(shooting_mismatch(harmonic(), 0, 1.0, config(), c), error);
}

TEST(MismatchScan, MinimaSitAtEigenvalues)
{
    const auto scan = mismatch_scan(harmonic(), 0, shift(0.5), config(4000), 0.0, 6.0, 61, -0.2, 0.2, 5);
    ASSERT_EQ(scan.size(), 61u * 5u);
    auto at = [&](int i, int j) { return scan[static_cast<std::size_t>(i * 5 + j)].abs_F; };
    std::vector<double> minima;
    for (int i = 1; i < 60; ++i)
        if (at(i, 2) < at(i - 1, 2) && at(i, 2) < at(i + 1, 2) && at(i, 2) < at(i, 1) && at(i, 2) < at(i, 3))
            minima.push_back(scan[static_cast<std::size_t>(i * 5 + 2)].re_E);
    ASSERT_EQ(minima.size(), 3u);
    for (int k = 0; k < 3; ++k)
        EXPECT_NEAR(minima[k], 2 * k + 1, 0.051);
}

TEST(MismatchScan, Validation)
{
    EXPECT_THROW(mismatch_scan(harmonic(), 0, shift(0.5), config(), 0.0, 1.0, 0, 0.0, 0.0, 1), error);
}
