#include <gtest/gtest.h>

#include <cmath>
#include <nldp/field.hpp>
#include <nldp/link.hpp>
#include <nldp/ssfm.hpp>
#include <nldp/units.hpp>
#include <random>
#include <vector>

using namespace nldp;

namespace {

CombGrid grid(long n_min, long n_max, double pitch_hz) {
    CombGrid g;
    g.pitch = units::two_pi * pitch_hz;
    g.n_min = n_min;
    g.n_max = n_max;
    return g;
}

WaveplateRealization single_plate(double length) {
    WaveplateRealization r;
    r.plates.push_back({length, 0.5 * length, 0.0, 0.0, 0.0});
    return r;
}

CombSpectrum random_comb(const CombGrid& g, double power, std::uint64_t seed) {
    CombSpectrum s(g);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    for (std::size_t i = 0; i < g.size(); ++i) {
        s.ax[i] = {n(rng), n(rng)};
        s.ay[i] = {n(rng), n(rng)};
    }
    const double k = std::sqrt(power / s.power());
    for (std::size_t i = 0; i < g.size(); ++i) {
        s.ax[i] *= k;
        s.ay[i] *= k;
    }
    return s;
}

double rms_difference(const ComplexEnvelope& a, const ComplexEnvelope& b) {
    double d = 0.0, r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += std::norm(a.ex[i] - b.ex[i]) + std::norm(a.ey[i] - b.ey[i]);
        r += std::norm(b.ex[i]) + std::norm(b.ey[i]);
    }
    return std::sqrt(d / r);
}

}  // namespace

TEST(PropagateSpan, LinearLosslessIsUnitary) {
    FiberParams p;
    p.gamma = 0.0;
    p.beta2 = 0.0;
    p.alpha = 1e-30;
    const auto g = grid(-32, 31, 1e9);
    const auto env = comb_to_time(random_comb(g, 1e-3, 1), units::two_pi / g.pitch);
    const auto span = realize_span(p, 2e3, 4);
    const auto out = propagate_span(env, span, p, PropagationSettings{});
    EXPECT_NEAR(out.mean_power(), env.mean_power(), 1e-10 * env.mean_power());
    // With zero birefringence the output is the input rotated by the chain matrix.
    FiberParams q = p;
    q.tau_p = 0.0;
    const auto s0 = realize_span(q, 2e3, 4);
    auto want = env;
    apply_jones(want, s0.jones(0.0));
    EXPECT_LT(rms_difference(propagate_span(env, s0, q, PropagationSettings{}), want), 1e-12);
}

TEST(PropagateSpan, AttenuationLaw) {
    FiberParams p;
    p.gamma = 0.0;
    const auto g = grid(-32, 31, 1e9);
    const auto env = comb_to_time(random_comb(g, 1e-3, 2), units::two_pi / g.pitch);
    const auto out = propagate_span(env, realize_span(p, 93e3, 5), p, PropagationSettings{});
    EXPECT_NEAR(out.mean_power() / env.mean_power(), std::pow(10.0, -1.86), 1e-9 * std::pow(10.0, -1.86));
}

TEST(PropagateSpan, CwCrossPhaseMatchesClosedForm) {
    FiberParams p;
    const double pump = 10e-3, probe = 1e-9, L = 20e3;
    // 1 THz spacing keeps four-wave mixing feedback below the tolerance.
    const auto g = grid(0, 100, 10e9);
    CombSpectrum s(g);
    s.x(0) = std::sqrt(pump);
    s.x(100) = std::sqrt(probe);
    const auto env = comb_to_time(s, units::two_pi / g.pitch);
    PropagationSettings set;
    set.min_steps_per_plate = 1000;
    const auto out = propagate_span(env, single_plate(L), p, set);
    FiberParams lin = p;
    lin.gamma = 0.0;
    const auto ref = propagate_span(env, single_plate(L), lin, set);
    const double phase = std::arg(time_to_comb(out, g).x(100) / time_to_comb(ref, g).x(100));
    // Co-polarized cw pump: d(phi)/dz = 2 gamma P e^{-alpha z}.
    const double leff = (1.0 - std::exp(-p.alpha * L)) / p.alpha;
    const double want = 2.0 * p.gamma * pump * leff;
    EXPECT_NEAR(phase, want, 1e-4 * want);
}

TEST(PropagateSpan, CwCrossPhaseOrthogonalPump) {
    FiberParams p;
    const double pump = 10e-3, probe = 1e-9, L = 20e3;
    const auto g = grid(0, 100, 10e9);
    CombSpectrum s(g);
    s.y(0) = std::sqrt(pump);
    s.x(100) = std::sqrt(probe);
    const auto env = comb_to_time(s, units::two_pi / g.pitch);
    PropagationSettings set;
    set.min_steps_per_plate = 1000;
    const auto out = propagate_span(env, single_plate(L), p, set);
    FiberParams lin = p;
    lin.gamma = 0.0;
    const auto ref = propagate_span(env, single_plate(L), lin, set);
    const double phase = std::arg(time_to_comb(out, g).x(100) / time_to_comb(ref, g).x(100));
    // Orthogonal pump: cross coefficient 2/3.
    const double leff = (1.0 - std::exp(-p.alpha * L)) / p.alpha;
    const double want = (2.0 / 3.0) * p.gamma * pump * leff;
    EXPECT_NEAR(phase, want, 1e-4 * want);
}

TEST(KerrStep, CircularBasisMatchesRk4) {
    PropagationSettings s;
    s.include_coherent_coupling_term = true;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    std::vector<cplx> x(64), y(64);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = {n(rng), n(rng)};
        y[i] = {n(rng), n(rng)};
    }
    auto ax = x, ay = y;
    const double gamma = 1.3e-3, h = 10.0;
    detail::kerr_step(ax, ay, gamma, h, s);
    const auto f = detail::kerr_rhs(s);
    for (std::size_t i = 0; i < x.size(); ++i) {
        cplx bx = x[i], by = y[i];
        detail::kerr_step_rk4(bx, by, gamma, h, f, 200);
        ASSERT_LT(std::abs(ax[i] - bx) + std::abs(ay[i] - by), 1e-10 * (std::abs(bx) + std::abs(by)));
    }
}

TEST(KerrStep, ConservesPowerInEveryMode) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n;
    for (int mode = 0; mode < 4; ++mode) {
        PropagationSettings s;
        s.include_antisymmetric_term = (mode & 1) != 0;
        s.include_coherent_coupling_term = (mode & 2) != 0;
        std::vector<cplx> x(128), y(128);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = 0.05 * cplx{n(rng), n(rng)};
            y[i] = 0.05 * cplx{n(rng), n(rng)};
        }
        auto ax = x, ay = y;
        detail::kerr_step(ax, ay, 1.3e-3, 50.0, s);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double p0 = std::norm(x[i]) + std::norm(y[i]);
            ASSERT_NEAR(std::norm(ax[i]) + std::norm(ay[i]), p0, 1e-9 * p0) << "mode " << mode;
        }
    }
}

TEST(PropagateSpan, NonlinearLosslessConservesPower) {
    FiberParams p;
    p.alpha = 1e-30;
    const auto g = grid(-32, 31, 1e9);
    const auto env = comb_to_time(random_comb(g, 20e-3, 3), units::two_pi / g.pitch, 512);
    const auto out = propagate_span(env, realize_span(p, 5e3, 6), p, PropagationSettings{});
    EXPECT_NEAR(out.mean_power(), env.mean_power(), 1e-9 * env.mean_power());
}

TEST(PropagateSpan, StepHalvingConverges) {
    const FiberParams p;
    const auto g = grid(-32, 31, 1e9);
    // Loading density of the desk scenario (4 dBm over 200 GHz).
    const auto env = comb_to_time(random_comb(g, 0.8e-3, 4), units::two_pi / g.pitch, 512);
    const auto span = realize_span(p, 93e3, 7);
    PropagationSettings a;
    PropagationSettings b;
    b.max_nl_phase_per_step = 0.5 * a.max_nl_phase_per_step;
    b.min_steps_per_plate = 2;
    EXPECT_LT(rms_difference(propagate_span(env, span, p, a), propagate_span(env, span, p, b)), 1e-6);
}

TEST(PropagateSpan, AliasingDetected) {
    const FiberParams p;
    const auto g = grid(-60, 60, 1e9);
    CombSpectrum s(g);
    s.x(60) = 0.1;
    s.x(0) = 0.1;
    const auto env = comb_to_time(s, units::two_pi / g.pitch, 128);
    EXPECT_THROW(propagate_span(env, single_plate(1e3), p, PropagationSettings{}), aliasing_error);
}

TEST(PropagateSpan, SettingsValidated) {
    const auto g = grid(-4, 4, 1e9);
    const auto env = comb_to_time(random_comb(g, 1e-3, 1), units::two_pi / g.pitch);
    PropagationSettings s;
    s.max_nl_phase_per_step = 0.2;
    EXPECT_THROW(propagate_span(env, single_plate(1e3), FiberParams{}, s), invalid_argument);
}

TEST(PropagateLink, SingleSpanIsSpanPlusRepeater) {
    const FiberParams p;
    const auto g = grid(-32, 31, 1e9);
    const auto env = comb_to_time(random_comb(g, 5e-3, 5), units::two_pi / g.pitch);
    LinkConfig link;
    link.n_spans = 1;
    link.span_length = 2e3;
    link.kicker_enabled = false;
    const std::vector<WaveplateRealization> spans{realize_span(p, 2e3, 9)};
    const auto out = propagate_link(env, link, spans, p, PropagationSettings{});
    auto want = propagate_span(env, spans[0], p, PropagationSettings{});
    const double a = std::sqrt(env.mean_power() / want.mean_power());
    for (auto& v : want.ex) v *= a;
    for (auto& v : want.ey) v *= a;
    EXPECT_LT(rms_difference(out, want), 1e-14);
    EXPECT_NEAR(out.mean_power(), env.mean_power(), 1e-12 * env.mean_power());
}

TEST(PropagateLink, LinearLinkLeavesProbeSopStatic) {
    FiberParams p;
    p.gamma = 0.0;
    const auto g = grid(-64, 63, 1e9);
    CombSpectrum s(g);
    s.x(3) = {0.01, 0.004};
    s.y(3) = {-0.002, 0.008};
    const auto env = comb_to_time(s, units::two_pi / g.pitch);
    LinkConfig link;
    link.n_spans = 11;
    link.spans_per_circulation = 3;
    link.span_length = 5e3;
    std::vector<WaveplateRealization> spans;
    for (int i = 0; i < 4; ++i) spans.push_back(realize_span(p, 5e3, 20 + i));
    int taps = 0;
    const auto out = propagate_link(env, link, spans, p, PropagationSettings{}, [&](int, const ComplexEnvelope&) { ++taps; });
    EXPECT_EQ(taps, 11);
    const StokesVector s0 = jones_to_stokes({out.ex[0], out.ey[0]}).normalized();
    for (std::size_t i = 1; i < out.size(); ++i) {
        const StokesVector si = jones_to_stokes({out.ex[i], out.ey[i]}).normalized();
        ASSERT_NEAR(si.s1, s0.s1, 1e-10);
        ASSERT_NEAR(si.s2, s0.s2, 1e-10);
        ASSERT_NEAR(si.s3, s0.s3, 1e-10);
    }
}

TEST(PropagateLink, NonlinearProbeTraceVaries) {
    const FiberParams p;
    const auto g = grid(-40, 39, 1e9);
    auto s = make_loading(50e-3, g, g.center_frequency, units::two_pi * 20e9, 3);
    s = s + make_probe(0.3e-3, g.center_frequency, {1.0, 0.0}, s);
    const auto env = comb_to_time(s, units::two_pi / g.pitch, 512);
    LinkConfig link;
    link.n_spans = 2;
    link.span_length = 20e3;
    std::vector<WaveplateRealization> spans{realize_span(p, 20e3, 1), realize_span(p, 20e3, 2)};
    const auto out = propagate_link(env, link, spans, p, PropagationSettings{});
    const auto c = time_to_comb(out, g);
    // Energy leaks into the gap neighbours of the probe through NLI.
    double in_gap = 0.0;
    for (long n = s.gap_lo; n <= s.gap_hi; ++n)
        if (n != 0) in_gap += std::norm(c.x(n)) + std::norm(c.y(n));
    EXPECT_GT(in_gap, 0.0);
}
