#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "toboggan/contour.hpp"
#include "toboggan/model.hpp"

using namespace toboggan;

namespace {

ModelSpec cubic_with_quadratic(double ell, double omega)
{
    ModelSpec m;
    m.ell = ell;
    m.set_omega(omega);
    m.coeffs[3] = imag_unit;
    return m;
}

cplx coefficient(const RectifiedModel& rm, Rational power)
{
    const auto it = rm.rect_coeffs.find(power);
    return it == rm.rect_coeffs.end() ? cplx{} : it->second;
}

} // namespace

TEST(Rational, ExactArithmetic)
{
    const Rational a{3, 6};
    EXPECT_EQ(a.num(), 1);
    EXPECT_EQ(a.den(), 2);
    EXPECT_EQ(a + Rational(1, 3), Rational(5, 6));
    EXPECT_EQ(Rational(2, -4), Rational(-1, 2));
    EXPECT_TRUE(Rational(4, 2).is_integer());
    EXPECT_LT(Rational(1, 3), Rational(1, 2));
    EXPECT_THROW(Rational(1, 0), error);
}

TEST(RectifyModel, SingleWindingCubicPrinted)
{
    const double ell = 0.3, omega = 1.7;
    const auto rm = rectify_model(cubic_with_quadratic(ell, omega), 1, BranchConvention::printed);
    EXPECT_DOUBLE_EQ(rm.L, 3 * ell + 1);
    EXPECT_DOUBLE_EQ(rm.weight_prefactor, 9.0);
    EXPECT_EQ(rm.weight_power, Rational{4});
    ASSERT_EQ(rm.rect_coeffs.size(), 2u);
    EXPECT_EQ(coefficient(rm, Rational{10}), cplx(9.0 * omega * omega));
    EXPECT_EQ(coefficient(rm, Rational{13}), cplx(0.0, 9.0));
}

TEST(RectifyModel, SingleWindingCubicSubstitution)
{
    const double omega = 0.5;
    const auto rm = rectify_model(cubic_with_quadratic(0.0, omega), 1, BranchConvention::substitution);
    EXPECT_DOUBLE_EQ(rm.L, 1.0);
    EXPECT_EQ(coefficient(rm, Rational{10}), cplx(9.0 * omega * omega));
    EXPECT_EQ(coefficient(rm, Rational{13}), cplx(0.0, -9.0));
}

TEST(RectifyModel, SubstitutionIsTheDefault)
{
    const auto rm = rectify_model(cubic_with_quadratic(0.0, 0.0), 1);
    EXPECT_EQ(rm.convention, BranchConvention::substitution);
    EXPECT_EQ(coefficient(rm, Rational{13}), cplx(0.0, -9.0));
}

TEST(RectifyModel, ZeroWindingIsIdentity)
{
    ModelSpec m = cubic_with_quadratic(0.4, 1.2);
    m.coeffs[1] = {0.3, -0.2};
    for (auto conv : {BranchConvention::printed, BranchConvention::substitution}) {
        const auto rm = rectify_model(m, 0, conv);
        EXPECT_DOUBLE_EQ(rm.L, 0.4);
        EXPECT_DOUBLE_EQ(rm.weight_prefactor, 1.0);
        EXPECT_EQ(rm.weight_power, Rational{0});
        ASSERT_EQ(rm.rect_coeffs.size(), m.coeffs.size());
        for (const auto& [k, c] : m.coeffs)
            EXPECT_EQ(coefficient(rm, Rational{k}), c);
    }
}

TEST(RectifyModel, DoubleWindingQuadratic)
{
    ModelSpec m;
    m.coeffs[2] = 1.0;
    const auto rm = rectify_model(m, 2);
    EXPECT_DOUBLE_EQ(rm.weight_prefactor, 25.0);
    EXPECT_EQ(rm.weight_power, Rational{8});
    ASSERT_EQ(rm.rect_coeffs.size(), 1u);
    EXPECT_EQ(rm.rect_coeffs.begin()->first, Rational{18});
    EXPECT_EQ(rm.rect_coeffs.begin()->second, cplx(25.0));
}

TEST(RectifyModel, SubstitutionMatchesChainRule)
{
    // V_rect(r) - L(L+1)/r^2 = (dz/dr)^2 sum c_k z(r)^k with z = -i (i r)^(2N+1)
    ModelSpec m;
    m.coeffs = {{1, {0.0, 0.7}}, {2, 1.3}, {3, {0.0, -0.4}}, {4, 0.25}, {5, {0.1, 0.2}}};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int n = 0; n <= 3; ++n) {
        const auto rm = rectify_model(m, n);
        for (int t = 0; t < 50; ++t) {
            const cplx r{u(rng), u(rng)};
            const cplx z = unrectify_point(r, n);
            cplx direct{};
            for (const auto& [k, c] : m.coeffs)
                direct += c * ipow(z, k);
            const cplx dz = static_cast<double>(2 * n + 1) * ipow(imag_unit * r, 2 * n);
            direct *= dz * dz;
            const cplx rect = rm.potential(r) - rm.centrifugal() / (r * r);
            ASSERT_LT(std::abs(rect - direct), 1e-12 * std::max(1.0, std::abs(direct))) << n << " " << t;
            ASSERT_LT(std::abs(rm.weight(r) - dz * dz), 1e-12 * std::max(1.0, std::abs(dz * dz)));
        }
    }
}

TEST(RectifyModel, RectifiedAngularMomentum)
{
    EXPECT_DOUBLE_EQ(rectified_ell(0.0, 1), 1.0);
    for (double ell : {-0.3, 0.0, 0.25, 2.0})
        EXPECT_DOUBLE_EQ(rectified_ell(ell, 0), ell);
    for (int n = 0; n <= 4; ++n) {
        const double slope = rectified_ell(1.0, n) - rectified_ell(0.0, n);
        EXPECT_DOUBLE_EQ(slope, 2 * n + 1);
        EXPECT_NEAR(rectified_ell(0.7, n) - rectified_ell(0.2, n), 0.5 * (2 * n + 1), 1e-14);
    }
}

TEST(RectifyModel, PtFlagPreserved)
{
    for (double omega : {0.0, 0.8})
        for (double ell : {0.0, 0.3})
            for (int n = 0; n <= 3; ++n)
                for (auto conv : {BranchConvention::printed, BranchConvention::substitution}) {
                    const ModelSpec m = cubic_with_quadratic(ell, omega);
                    ASSERT_TRUE(m.pt_symmetric());
                    EXPECT_TRUE(rectify_model(m, n, conv).pt_symmetric()) << omega << " " << ell << " " << n;
                }
    ModelSpec broken;
    broken.coeffs = {{1, 1.0}, {2, 1.0}};
    EXPECT_FALSE(broken.pt_symmetric());
    EXPECT_FALSE(rectify_model(broken, 0).pt_symmetric());
}

TEST(RectifyModel, Validation)
{
    ModelSpec m;
    m.coeffs[0] = 1.0;
    EXPECT_THROW(rectify_model(m, 1), error);
    ModelSpec ok;
    EXPECT_THROW(rectify_model(ok, -1), error);
    ModelSpec nan_coeff;
    nan_coeff.coeffs[2] = std::nan("");
    EXPECT_THROW(rectify_model(nan_coeff, 0), error);
    EXPECT_EQ(parse_branch_convention("printed"), BranchConvention::printed);
    EXPECT_THROW(parse_branch_convention("other"), error);
}

TEST(Pullback, ZeroWindingIsIdentity)
{
    ContourSpec c;
    c.epsilon = 0.5;
    const auto path = sample_spiral(c, 21, 1.3);
    std::vector<cplx> phi;
    for (std::size_t j = 0; j < path.size(); ++j)
        phi.push_back({std::cos(0.3 * j), std::sin(0.7 * j)});
    const auto psi = wavefunction_pullback(path, phi, 0);
    for (std::size_t j = 0; j < phi.size(); ++j)
        EXPECT_EQ(psi[j], phi[j]);
}

TEST(Pullback, LowestPointOfSingleWinding)
{
    ContourSpec c;
    c.epsilon = 1.0;
    c.winding = 1;
    const std::vector<ContourPoint> path{spiral_point(0.0, c)};
    const std::vector<cplx> phi{1.0};
    const auto psi = wavefunction_pullback(path, phi, 1);
    const cplx want = std::polar(1.0, pi / 6);
    EXPECT_LT(std::abs(psi[0] - want), 1e-15);
}

TEST(Pullback, RoundTrip)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int n = 0; n <= 3; ++n) {
        ContourSpec c;
        c.epsilon = 0.3;
        c.winding = n;
        const auto path = sample_spiral(c, 301, 1.4);
        std::vector<cplx> phi;
        for (std::size_t j = 0; j < path.size(); ++j)
            phi.push_back({g(rng), g(rng)});
        const auto back = wavefunction_pushforward(path, wavefunction_pullback(path, phi, n), n);
        for (std::size_t j = 0; j < phi.size(); ++j)
            ASSERT_LT(std::abs(back[j] - phi[j]), 1e-12 * std::abs(phi[j])) << n << " " << j;
    }
}

TEST(Pullback, SizeMismatch)
{
    ContourSpec c;
    const auto path = sample_spiral(c, 5, 1.0);
    const std::vector<cplx> phi(4, 1.0);
    EXPECT_THROW(wavefunction_pullback(path, phi, 1), error);
    EXPECT_THROW(wavefunction_pushforward(path, phi, 1), error);
}
