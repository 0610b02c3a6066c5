#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <nldp/polarization.hpp>
#include <nldp/units.hpp>
#include <random>
#include <vector>

using namespace nldp;

namespace {

double matrix_distance(const JonesMatrix& a, const JonesMatrix& b) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += std::norm(a.m[i] - b.m[i]);
    return std::sqrt(s);
}

}  // namespace

TEST(Waveplate, ZeroAnglesGiveIdentity) {
    EXPECT_LT(matrix_distance(waveplate_matrix(0.0, 0.0), JonesMatrix::identity()), 1e-15);
}

TEST(Waveplate, QuarterTurnSwapsAxes) {
    const JonesMatrix m = waveplate_matrix(units::pi / 2.0, 0.0);
    JonesMatrix want;
    want(0, 0) = 0.0;
    want(0, 1) = 1.0;
    want(1, 0) = -1.0;
    want(1, 1) = 0.0;
    EXPECT_LT(matrix_distance(m, want), 1e-15);
    const JonesVector v = m * JonesVector{1.0, 0.0};
    EXPECT_NEAR(std::abs(v.ex), 0.0, 1e-15);
    EXPECT_NEAR(v.ey.real(), -1.0, 1e-15);
}

TEST(Waveplate, UnitaryWithUnitDeterminant) {
    const JonesMatrix m = waveplate_matrix(0.3, 1.2);
    EXPECT_LT(unitarity_error(m), 1e-12);
    EXPECT_NEAR(std::abs(det(m) - 1.0), 0.0, 1e-12);
}

TEST(Waveplate, RandomAnglesStayUnitary) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int i = 0; i < 10000; ++i) {
        const JonesMatrix m = waveplate_matrix(u(rng), u(rng));
        ASSERT_LT(unitarity_error(m), 1e-12);
        ASSERT_LT(std::abs(det(m) - 1.0), 1e-12);
    }
}

TEST(Waveplate, NonFiniteInputRejected) {
    EXPECT_THROW(waveplate_matrix(std::nan(""), 0.0), invalid_argument);
    EXPECT_THROW(waveplate_matrix(0.0, std::numeric_limits<double>::infinity()), invalid_argument);
}

TEST(Waveplate, CascadePreservesPower) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 6.3);
    JonesMatrix c;
    for (int i = 0; i < 2000; ++i) c = waveplate_matrix(u(rng), u(rng)) * c;
    EXPECT_LT(unitarity_error(c), 1e-12);
    const JonesVector v{cplx(0.3, -0.2), cplx(0.7, 0.1)};
    EXPECT_NEAR((c * v).power(), v.power(), 1e-12);
}

TEST(Stokes, CanonicalStates) {
    const double r = 1.0 / std::sqrt(2.0);
    const StokesVector h = jones_to_stokes({1.0, 0.0});
    EXPECT_DOUBLE_EQ(h.s0, 1.0);
    EXPECT_DOUBLE_EQ(h.s1, 1.0);
    EXPECT_DOUBLE_EQ(h.s2, 0.0);
    EXPECT_DOUBLE_EQ(h.s3, 0.0);
    const StokesVector d = jones_to_stokes({r, r});
    EXPECT_NEAR(d.s0, 1.0, 1e-15);
    EXPECT_NEAR(d.s1, 0.0, 1e-15);
    EXPECT_NEAR(d.s2, 1.0, 1e-15);
    EXPECT_NEAR(d.s3, 0.0, 1e-15);
    const StokesVector c = jones_to_stokes({r, cplx(0.0, r)});
    EXPECT_NEAR(c.s1, 0.0, 1e-15);
    EXPECT_NEAR(c.s2, 0.0, 1e-15);
    // s3 = 2 Im(ex ey*) with ey = j/sqrt2 gives -1 under this sign convention.
    EXPECT_NEAR(std::abs(c.s3), 1.0, 1e-15);
}

TEST(Stokes, FullyPolarizedIdentityAndPower) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 10000; ++i) {
        const JonesVector v{cplx(g(rng), g(rng)), cplx(g(rng), g(rng))};
        const StokesVector s = jones_to_stokes(v);
        ASSERT_EQ(s.s0, std::norm(v.ex) + std::norm(v.ey));
        ASSERT_NEAR(s.reduced_norm(), s.s0, 1e-9 * s.s0);
    }
}

TEST(Dop, FullyPolarizedSet) {
    std::vector<StokesVector> v(50, StokesVector{1.0, 1.0, 0.0, 0.0});
    EXPECT_DOUBLE_EQ(dop(v), 1.0);
}

TEST(Dop, OrthogonalMixIsUnpolarized) {
    std::vector<StokesVector> v;
    for (int i = 0; i < 10; ++i) {
        v.push_back({1.0, 1.0, 0.0, 0.0});
        v.push_back({1.0, -1.0, 0.0, 0.0});
    }
    EXPECT_DOUBLE_EQ(dop(v), 0.0);
}

TEST(Dop, EmptyInputRejected) {
    std::vector<StokesVector> v;
    EXPECT_THROW(dop(v), invalid_argument);
}

TEST(Dop, IsotropicSamplesBelowOnePercent) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    std::vector<StokesVector> v;
    v.reserve(1000000);
    for (int i = 0; i < 1000000; ++i)
        v.push_back(jones_to_stokes({cplx(g(rng), g(rng)), cplx(g(rng), g(rng))}).normalized());
    EXPECT_LT(dop(v), 0.01);
}

TEST(Dop, InvariantUnderCommonUnitary) {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    std::vector<JonesVector> j;
    for (int i = 0; i < 200; ++i) j.push_back({cplx(g(rng) + 1.0, g(rng)), cplx(0.3 * g(rng), g(rng))});
    const JonesMatrix u = haar_random_rotation(std::uint64_t{99});
    std::vector<StokesVector> a, b;
    for (const auto& v : j) {
        a.push_back(jones_to_stokes(v));
        b.push_back(jones_to_stokes(u * v));
    }
    EXPECT_NEAR(dop(a), dop(b), 1e-9);
}

TEST(Haar, UnitaryAndDeterministic) {
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const JonesMatrix m = haar_random_rotation(s);
        ASSERT_LT(unitarity_error(m), 1e-12);
        ASSERT_LT(std::abs(det(m) - 1.0), 1e-12);
    }
    EXPECT_EQ(matrix_distance(haar_random_rotation(std::uint64_t{42}), haar_random_rotation(std::uint64_t{42})), 0.0);
    EXPECT_GT(matrix_distance(haar_random_rotation(std::uint64_t{42}), haar_random_rotation(std::uint64_t{43})), 1e-3);
}

TEST(Haar, RotatedStatesAreIsotropic) {
    std::vector<StokesVector> v;
    for (std::uint64_t s = 0; s < 100000; ++s) v.push_back(jones_to_stokes(haar_random_rotation(s) * JonesVector{1.0, 0.0}));
    EXPECT_LT(dop(v), 0.02);
}
