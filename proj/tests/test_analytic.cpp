#include <gtest/gtest.h>

#include <cmath>
#include <nldp/analytic.hpp>
#include <nldp/field.hpp>
#include <nldp/units.hpp>

using namespace nldp;

namespace {

CombSpectrum test_loading(std::uint64_t seed) {
    CombGrid g;
    g.pitch = units::two_pi * 1e9;
    g.n_min = -40;
    g.n_max = 40;
    return make_loading(1e-2, g, g.center_frequency, units::two_pi * 20e9, seed);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(PerturbationPhasor, ZeroNonlinearityGivesZero) {
    FiberParams p;
    p.gamma = 0.0;
    const auto r = perturbation_phasor_span(test_loading(1), {1.0, 0.0}, 2, 20, p, 93e3);
    EXPECT_EQ(std::abs(r.symmetric.ex) + std::abs(r.antisymmetric.ex), 0.0);
    LinkConfig l;
    EXPECT_EQ(symmetric_phase_variance(l, p), 0.0);
    EXPECT_EQ(nldp_autocorrelation(l, p, PolarimeterBand{}, 0.0), 0.0);
    EXPECT_EQ(sop_speed_prediction(l, p, PolarimeterBand{}).rms, 0.0);
}

TEST(PerturbationPhasor, HalfIntegerIndicesOnGrid) {
    const FiberParams p;
    EXPECT_NO_THROW(perturbation_phasor_span(test_loading(1), {1.0, 0.0}, 3, 20.5, p, 93e3));
    EXPECT_THROW(perturbation_phasor_span(test_loading(1), {1.0, 0.0}, 3, 20, p, 93e3), invalid_argument);
    EXPECT_THROW(perturbation_phasor_span(test_loading(1), {1.0, 0.0}, 2, 40, p, 93e3), invalid_argument);
}

TEST(PerturbationPhasor, AntisymmetricBranchFlipsWithProbeAxis) {
    const FiberParams p;
    const auto c = test_loading(2);
    const auto x = perturbation_phasor_span(c, {1.0, 0.0}, 4, 25, p, 93e3);
    const auto y = perturbation_phasor_span(c, {0.0, 1.0}, 4, 25, p, 93e3);
    EXPECT_EQ(x.antisymmetric.ey, cplx(0.0));
    EXPECT_EQ(y.antisymmetric.ex, cplx(0.0));
    EXPECT_NEAR(std::abs(x.antisymmetric.ex + y.antisymmetric.ey), 0.0, 1e-15 * std::abs(x.antisymmetric.ex));
    EXPECT_NEAR(std::abs(x.symmetric.ex - y.symmetric.ey), 0.0, 1e-15 * std::abs(x.symmetric.ex));
    const JonesVector a0{cplx(0.6, 0.1), cplx(0.2, -0.7)};
    const auto g = perturbation_phasor_span(c, a0, 4, 25, p, 93e3);
    EXPECT_NEAR(std::abs(g.antisymmetric.ey + g.antisymmetric.ex * (a0.ey / a0.ex)), 0.0, 1e-15);
}

TEST(PerturbationPhasor, ConjugateSidebandsGivePhaseNoise) {
    const FiberParams p;
    const auto c = test_loading(3);
    const double L0 = 93e3;
    for (double l : {2.0, 6.0, 10.0}) {
        const auto a = perturbation_phasor_span(c, {1.0, 0.0}, l, 24, p, L0);
        const auto b = perturbation_phasor_span(c, {1.0, 0.0}, -l, 24, p, L0);
        // Strip the common e^{j k_l L0} factor, then the -l phasor is the
        // negated conjugate of the +l phasor.
        const double kl = 0.5 * p.beta2 * l * l * c.grid.pitch * c.grid.pitch;
        const cplx u = a.symmetric.ex * std::polar(1.0, -kl * L0);
        const cplx v = b.symmetric.ex * std::polar(1.0, -kl * L0);
        EXPECT_LT(std::abs(v + std::conj(u)), 1e-12 * std::abs(u)) << l;
    }
}

TEST(PerturbationPhasor, PlateSumMatchesSpanIntegral) {
    const FiberParams p;
    const auto c = test_loading(4);
    const double L0 = 20e3, dz = 10.0;
    const JonesVector a0{1.0, 0.0};
    cplx sum = 0.0;
    for (double z = 0.5 * dz; z < L0; z += dz) sum += perturbation_phasor_plate(c, a0, 6, 18, p, z, dz, L0).ex;
    const auto span = perturbation_phasor_span(c, a0, 6, 18, p, L0, PhasorForm::exact);
    EXPECT_LT(std::abs(sum - span.antisymmetric.ex), 1e-5 * std::abs(span.antisymmetric.ex));
}

TEST(PerturbationPhasor, AsymptoticFormApproachesExactForLongSpans) {
    const FiberParams p;
    const auto c = test_loading(5);
    const auto a = perturbation_phasor_span(c, {1.0, 0.0}, 2, 30, p, 93e3, PhasorForm::asymptotic);
    const auto e = perturbation_phasor_span(c, {1.0, 0.0}, 2, 30, p, 93e3, PhasorForm::exact);
    EXPECT_LT(std::abs(a.symmetric.ex - e.symmetric.ex) / std::abs(e.symmetric.ex), 0.05);
}

TEST(SpanSum, SingleSpanAndResonance) {
    EXPECT_NEAR(std::abs(span_phase_sum(0.7, 1)), 1.0, 1e-15);
    for (int ns : {1, 11, 110})
        for (int k : {0, 1, 3}) EXPECT_NEAR(std::abs(span_phase_sum(units::two_pi * k, ns)), ns, 1e-9 * ns);
    EXPECT_THROW(span_phase_sum(0.1, 0), invalid_argument);
    const cplx a{0.3, -0.1};
    EXPECT_NEAR(std::abs(perturbation_link_sum(a, 2, 5, 1.0, 0.0, 1.0, 7) - 7.0 * a), 0.0, 1e-14);
}

TEST(SpanSum, LorentzAreaMatchesGeometricSum) {
    for (int ns : {11, 110}) {
        const int n = 200000;
        double exact = 0.0, lorentz = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = -units::pi + units::two_pi * (i + 0.5) / n;
            exact += std::norm(span_phase_sum(t, ns));
            lorentz += span_sum_lorentz(t, ns);
        }
        EXPECT_LT(rel(lorentz, exact), 0.10) << ns;
    }
}

TEST(SymmetricVariance, ScalingLaws) {
    LinkConfig l;
    const FiberParams p;
    const double base = symmetric_phase_variance(l, p);
    LinkConfig l2 = l;
    l2.p_rep *= 2.0;
    EXPECT_NEAR(symmetric_phase_variance(l2, p) / base, 4.0, 4e-15);
    for (int ns : {1, 2, 4, 8}) {
        LinkConfig a = l, b = l;
        a.n_spans = ns;
        b.n_spans = 2 * ns;
        EXPECT_NEAR(symmetric_phase_variance(b, p) / symmetric_phase_variance(a, p), 2.0, 2e-15);
    }
    LinkConfig bad = l;
    bad.omega_min = 0.0;
    EXPECT_THROW(symmetric_phase_variance(bad, p), invalid_argument);
}

TEST(SymmetricVariance, GoldenValue) {
    // 20.9 dBm over a 5 THz band with a 100 GHz gap, 110 spans of 93 km.
    EXPECT_NEAR(symmetric_phase_variance(LinkConfig{}, FiberParams{}), 4.1836195475e-04, 1e-9 * 4.18e-4);
}

TEST(SymmetricVariance, DiscretePhasorSumMatchesClosedForm) {
    // Sum of per-tone phasor variances over (l, m) on a grid against the
    // log-law closed form, single span.
    LinkConfig l;
    l.n_spans = 1;
    l.omega_min = units::two_pi * 5e9;
    l.omega_max = units::two_pi * 50e9;
    const FiberParams p;
    const double pitch = units::two_pi * 50e6;
    const double s = l.p_rep / (l.omega_max - l.omega_min);
    // Per-tone, per-polarization power s w / 4; two polarizations in the G-wave.
    const double v = s * pitch / 4.0;
    double total = 0.0;
    const long mmax = static_cast<long>(l.omega_max / pitch);
    for (long m = -mmax; m <= mmax; ++m) {
        if (std::abs(m * pitch) < l.omega_min) continue;
        for (long ll = -20000; ll <= 20000; ++ll) {
            if (ll == 0) continue;
            total += phasor_variance_link(2.0 * v * v, m, ll, pitch, p, l.span_length, 1);
        }
    }
    // The closed form drops the 1/(1 + r^2) factor; for a single span the
    // product of the two Lorentzians keeps 1/(1 + 2/(alpha L0)) of the area.
    const double keep = 1.0 / (1.0 + 2.0 / (p.alpha * l.span_length));
    EXPECT_LT(rel(total, keep * symmetric_phase_variance(l, p)), 0.02);
}

TEST(Autocorrelation, ZeroAtZeroNonlinearityAndDecorrelates) {
    const LinkConfig l;
    const FiberParams p;
    const PolarimeterBand b;
    const double a0 = nldp_autocorrelation(l, p, b, 0.0);
    const double a1 = nldp_autocorrelation(l, p, b, 10e-9);
    EXPECT_GT(a0, 0.0);
    EXPECT_GT(a0 - a1, 0.0);
    EXPECT_NEAR(nldp_decorrelation(l, p, b, 10e-9), a0 - a1, 2e-3 * (a0 - a1));
    EXPECT_THROW(nldp_autocorrelation(l, p, b, -1.0), invalid_argument);
}

TEST(Autocorrelation, QuadraticInPower) {
    LinkConfig l;
    const FiberParams p;
    const double a = nldp_autocorrelation(l, p, PolarimeterBand{}, 5e-9);
    l.p_rep *= units::db_to_lin(-1.0);
    EXPECT_NEAR(nldp_autocorrelation(l, p, PolarimeterBand{}, 5e-9) / a, units::db_to_lin(-2.0), 1e-14);
}

TEST(Autocorrelation, GoldenValue) {
    EXPECT_NEAR(nldp_autocorrelation(LinkConfig{}, FiberParams{}, PolarimeterBand{}, 0.0), 3.1307291776e-05, 1e-8 * 3.13e-5);
}

TEST(Autocorrelation, ReducesToSymmetricStructureWithoutPmdAndFilter) {
    // Antisymmetric branch: coefficient (1/2)^2 of the symmetric one and a
    // decorrelation factor 1/2, hence 1/8 once the span-sum edge term fades.
    LinkConfig l;
    l.n_spans = 1000;
    FiberParams p;
    p.tau_p = 0.0;
    AutocorrelationOptions o;
    o.electrical_filter = false;
    const double r = nldp_autocorrelation(l, p, PolarimeterBand{}, 0.0, o) / symmetric_phase_variance(l, p);
    EXPECT_NEAR(r, 0.125, 0.01 * 0.125);
}

TEST(Autocorrelation, GridMatchesContinuumAndIsPitchIndependent) {
    const LinkConfig l;
    const FiberParams p;
    const PolarimeterBand b;
    const double c = nldp_autocorrelation(l, p, b, 10e-9);
    const double g1 = nldp_autocorrelation_grid(l, p, b, 10e-9, units::two_pi * 200e6);
    const double g2 = nldp_autocorrelation_grid(l, p, b, 10e-9, units::two_pi * 100e6);
    EXPECT_LT(rel(g2, g1), 0.01);
    EXPECT_LT(rel(g2, c), 0.01);
}

TEST(Autocorrelation, DecorrelatedSpanSumLorentzArea) {
    for (double d : {0.0, 0.01, 0.2}) {
        const int ns = 110, n = 100000;
        double exact = 0.0, lor = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = -units::pi + units::two_pi * (i + 0.5) / n;
            exact += decorrelated_span_sum(t, d, ns);
            lor += decorrelated_span_sum_lorentz(t, d, ns);
        }
        // Both carry the 1/2 decorrelation factor; exact area is pi N_s.
        EXPECT_LT(rel(lor, exact), 0.10) << d;
    }
}

TEST(Halfwidth, NearTenMegahertzAtTenMegameters) {
    const double hw = perturbation_halfwidth(LinkConfig{}, FiberParams{});
    EXPECT_NEAR(hw, 8.367411e6, 1e-5 * 8.37e6);
}

TEST(SopSpeed, GoldenValues) {
    const auto s = sop_speed_prediction(LinkConfig{}, FiberParams{}, PolarimeterBand{});
    EXPECT_NEAR(s.rms, 7.4553390575e6, 1e-9 * 7.46e6);
    EXPECT_NEAR(s.rms_as_printed, 6.9334653235e11, 1e-9 * 6.93e11);
    EXPECT_NEAR(s.rms_as_printed / s.rms, 93e3, 1e-6);
}

TEST(SopSpeed, ScalingAndLimits) {
    LinkConfig l;
    FiberParams p;
    PolarimeterBand b;
    const double base = sop_speed_prediction(l, p, b).rms;
    LinkConfig l1 = l;
    l1.p_rep *= units::db_to_lin(-1.0);
    EXPECT_NEAR(units::lin_to_db(sop_speed_prediction(l1, p, b).rms / base), -1.0, 1e-12);
    for (int ns : {1, 2, 4, 8}) {
        LinkConfig a = l, c = l;
        a.n_spans = ns;
        c.n_spans = 2 * ns;
        EXPECT_NEAR(sop_speed_prediction(c, p, b).term_pmd / sop_speed_prediction(a, p, b).term_pmd, 2.0, 1e-14);
    }
    p.tau_p = 0.0;
    b.omega_e = 1e-9;
    EXPECT_LT(sop_speed_prediction(l, p, b).rms, 1e-6 * base);
}

TEST(SopSpeed, NegativeLogArgumentIsDomainError) {
    FiberParams p;
    PolarimeterBand b;
    b.omega_e = -1.0;
    // A negative cutoff is rejected by the band itself.
    EXPECT_THROW(sop_speed_prediction(LinkConfig{}, p, b), invalid_argument);
}

TEST(SopSpeed, AutocorrelationPathIsConsistentInSign) {
    const double v = sop_speed_from_autocorrelation(LinkConfig{}, FiberParams{}, PolarimeterBand{}, 10e-9);
    EXPECT_GT(v, 0.0);
    EXPECT_NEAR(v, 7.019666e5, 1e-5 * 7.02e5);
}

TEST(RolloffTable, DefaultRows) {
    const auto t = rolloff_table(FiberParams{}, LinkConfig{}, PolarimeterBand{});
    EXPECT_NEAR(t.thz[0], 0.0787, 0.0005);
    EXPECT_NEAR(t.thz[1], 0.5835, 0.0005);
    EXPECT_NEAR(t.thz[2], 0.00761, 0.00005);
    EXPECT_NEAR(t.thz[3], 1.792, 0.001);
    EXPECT_NEAR(t.row2_as_printed, 177.94, 0.01);
    EXPECT_NEAR(t.row2_as_printed / t.thz[1], std::sqrt(93e3), 1e-6);
}
