#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "link.hpp"
#include "polarization.hpp"
#include "units.hpp"

namespace nldp {

// Evenly spaced tones n*pitch around center_frequency, n in [n_min, n_max].
struct CombGrid {
    double pitch = units::two_pi * 100e6;  // rad/s
    long n_min = 0;
    long n_max = 0;
    double center_frequency = 193.4e12;  // Hz

    std::size_t size() const { return static_cast<std::size_t>(n_max - n_min + 1); }
    double omega(long n) const { return static_cast<double>(n) * pitch; }
    bool contains(long n) const { return n >= n_min && n <= n_max; }

    void validate() const {
        if (!(pitch > 0.0) || !std::isfinite(pitch)) throw invalid_argument("grid: pitch must be > 0");
        if (n_max < n_min) throw invalid_argument("grid: indices out of order");
    }
};

struct CombSpectrum {
    CombGrid grid;
    std::vector<cplx> ax;
    std::vector<cplx> ay;
    long gap_lo = 1;  // inclusive index range held at zero; empty when gap_lo > gap_hi
    long gap_hi = 0;

    explicit CombSpectrum(const CombGrid& g = {}) : grid(g), ax(g.size()), ay(g.size()) {}

    cplx& x(long n) { return ax[static_cast<std::size_t>(n - grid.n_min)]; }
    cplx& y(long n) { return ay[static_cast<std::size_t>(n - grid.n_min)]; }
    cplx x(long n) const { return ax[static_cast<std::size_t>(n - grid.n_min)]; }
    cplx y(long n) const { return ay[static_cast<std::size_t>(n - grid.n_min)]; }
    JonesVector tone(long n) const { return {x(n), y(n)}; }

    bool in_gap(long n) const { return n >= gap_lo && n <= gap_hi; }

    double power() const {
        double s = 0.0;
        for (std::size_t i = 0; i < ax.size(); ++i) s += std::norm(ax[i]) + std::norm(ay[i]);
        return s;
    }
};

inline CombSpectrum operator+(const CombSpectrum& a, const CombSpectrum& b) {
    if (a.grid.pitch != b.grid.pitch) throw invalid_argument("comb sum: pitch mismatch");
    CombGrid g = a.grid;
    g.n_min = std::min(a.grid.n_min, b.grid.n_min);
    g.n_max = std::max(a.grid.n_max, b.grid.n_max);
    CombSpectrum r(g);
    for (long n = a.grid.n_min; n <= a.grid.n_max; ++n) {
        r.x(n) += a.x(n);
        r.y(n) += a.y(n);
    }
    for (long n = b.grid.n_min; n <= b.grid.n_max; ++n) {
        r.x(n) += b.x(n);
        r.y(n) += b.y(n);
    }
    r.gap_lo = a.gap_lo <= a.gap_hi ? a.gap_lo : b.gap_lo;
    r.gap_hi = a.gap_lo <= a.gap_hi ? a.gap_hi : b.gap_hi;
    return r;
}

// Periodic sampled Jones envelope E(t) = sum_n A^n e^{-j n w t}.
struct ComplexEnvelope {
    double sample_period = 0.0;  // s
    std::vector<cplx> ex;
    std::vector<cplx> ey;
    double center_frequency = 193.4e12;

    std::size_t size() const { return ex.size(); }
    double duration() const { return sample_period * static_cast<double>(ex.size()); }

    // Angular offset of FFT bin k under the e^{-j w t} convention.
    double bin_omega(std::size_t k) const {
        const auto n = static_cast<long>(ex.size());
        long kk = static_cast<long>(k);
        if (kk > n / 2) kk -= n;
        return units::two_pi * static_cast<double>(kk) / duration();
    }

    double mean_power() const {
        double s = 0.0;
        for (std::size_t i = 0; i < ex.size(); ++i) s += std::norm(ex[i]) + std::norm(ey[i]);
        return s / static_cast<double>(ex.size());
    }
};

// Unpolarized circular Gaussian loading filling the grid except a gap.
// Per-tone, per-polarization variance is P w / (4 (W_max - W_min)) with
// W_max - W_min = (B - gap) / 2 for grid bandwidth B, so the expected launch
// power is P.
inline CombSpectrum make_loading(double p_rep, const CombGrid& grid, double gap_center_hz, double gap_width,
                                 std::uint64_t seed) {
    grid.validate();
    if (!(p_rep > 0.0)) throw invalid_argument("make_loading: power must be > 0");
    if (!(gap_width >= 0.0)) throw invalid_argument("make_loading: negative gap width");
    const double band = grid.pitch * static_cast<double>(grid.size());
    if (gap_width >= band) throw invalid_argument("make_loading: gap wider than band");
    const double gap_offset = units::hz_to_rad_s(gap_center_hz - grid.center_frequency);
    const double lo = grid.omega(grid.n_min) - 0.5 * grid.pitch, hi = grid.omega(grid.n_max) + 0.5 * grid.pitch;
    if (gap_offset - 0.5 * gap_width < lo || gap_offset + 0.5 * gap_width > hi)
        throw invalid_argument("make_loading: gap outside band");

    CombSpectrum s(grid);
    // Tones strictly inside the open gap interval are zero; edges on the grid
    // are judged with a small tolerance so they stay loaded.
    constexpr double edge_tol = 1e-9;
    s.gap_lo = static_cast<long>(std::floor((gap_offset - 0.5 * gap_width) / grid.pitch + edge_tol)) + 1;
    s.gap_hi = static_cast<long>(std::ceil((gap_offset + 0.5 * gap_width) / grid.pitch - edge_tol)) - 1;

    const double var = p_rep * grid.pitch / (2.0 * (band - gap_width));
    std::normal_distribution<double> g(0.0, std::sqrt(0.5 * var));
    auto rng = detail::make_rng(seed, 0x4c4f4144u);
    for (long n = grid.n_min; n <= grid.n_max; ++n) {
        const double xr = g(rng), xi = g(rng), yr = g(rng), yi = g(rng);
        if (s.in_gap(n)) continue;
        s.x(n) = {xr, xi};
        s.y(n) = {yr, yi};
    }
    return s;
}

// Single cw tone at `frequency_hz`, which must sit on the grid inside the
// loading gap.
inline CombSpectrum make_probe(double power, double frequency_hz, const JonesVector& sop,
                               const CombSpectrum& loading) {
    if (!(power > 0.0)) throw invalid_argument("make_probe: power must be > 0");
    const double off = units::hz_to_rad_s(frequency_hz - loading.grid.center_frequency);
    const double nf = off / loading.grid.pitch;
    const long n = std::lround(nf);
    if (std::abs(nf - static_cast<double>(n)) > 1e-6) throw invalid_argument("make_probe: frequency not on grid");
    if (loading.gap_lo > loading.gap_hi || !loading.in_gap(n))
        throw invalid_argument("make_probe: frequency outside the loading gap");
    const double p = sop.power();
    if (!(p > 0.0)) throw invalid_argument("make_probe: zero SOP vector");
    CombGrid g = loading.grid;
    g.n_min = g.n_max = n;
    CombSpectrum s(g);
    const double k = std::sqrt(power / p);
    s.x(n) = k * sop.ex;
    s.y(n) = k * sop.ey;
    return s;
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Smallest size 2^a, 3*2^a or 5*2^a not below n.
inline std::size_t next_fft_size(std::size_t n) {
    std::size_t best = next_pow2(n);
    for (std::size_t f : {3u, 5u}) {
        std::size_t p = f;
        while (p < n) p <<= 1;
        best = std::min(best, p);
    }
    return best;
}

// Smallest FFT-friendly sample count keeping the comb within 80% of Nyquist.
inline std::size_t default_sample_count(const CombGrid& g, long period_multiple = 1) {
    const long nmax = std::max(std::abs(g.n_min), std::abs(g.n_max)) * period_multiple;
    return next_fft_size(static_cast<std::size_t>(std::ceil(2.0 * static_cast<double>(nmax) / 0.8)) + 1);
}

// Sample the comb over `duration`, which must be a whole number of periods
// 2 pi / pitch.
inline ComplexEnvelope comb_to_time(const CombSpectrum& comb, double duration, std::size_t n_samples = 0) {
    comb.grid.validate();
    const double periods = duration * comb.grid.pitch / units::two_pi;
    const long k = std::lround(periods);
    if (k < 1 || std::abs(periods - static_cast<double>(k)) > 1e-9 * std::max(1.0, periods))
        throw invalid_argument("comb_to_time: duration is not a whole number of comb periods");
    if (n_samples == 0) n_samples = default_sample_count(comb.grid, k);
    const long nmax = std::max(std::abs(comb.grid.n_min), std::abs(comb.grid.n_max)) * k;
    if (2 * nmax >= static_cast<long>(n_samples)) throw aliasing_error("comb_to_time: too few samples for comb");

    ComplexEnvelope e;
    e.sample_period = duration / static_cast<double>(n_samples);
    e.center_frequency = comb.grid.center_frequency;
    e.ex.assign(n_samples, {});
    e.ey.assign(n_samples, {});
    const auto N = static_cast<long>(n_samples);
    for (long n = comb.grid.n_min; n <= comb.grid.n_max; ++n) {
        const long b = ((n * k) % N + N) % N;
        e.ex[static_cast<std::size_t>(b)] = comb.x(n);
        e.ey[static_cast<std::size_t>(b)] = comb.y(n);
    }
    fft_forward(e.ex);
    fft_forward(e.ey);
    return e;
}

// Inverse of comb_to_time onto the given grid.
inline CombSpectrum time_to_comb(const ComplexEnvelope& env, const CombGrid& grid) {
    grid.validate();
    const double periods = env.duration() * grid.pitch / units::two_pi;
    const long k = std::lround(periods);
    if (k < 1 || std::abs(periods - static_cast<double>(k)) > 1e-9 * std::max(1.0, periods))
        throw invalid_argument("time_to_comb: envelope duration is not a whole number of comb periods");
    std::vector<cplx> fx = env.ex, fy = env.ey;
    fft_backward(fx);
    fft_backward(fy);
    const auto N = static_cast<long>(env.size());
    const double inv = 1.0 / static_cast<double>(N);
    CombSpectrum s(grid);
    for (long n = grid.n_min; n <= grid.n_max; ++n) {
        const long b = ((n * k) % N + N) % N;
        s.x(n) = fx[static_cast<std::size_t>(b)] * inv;
        s.y(n) = fy[static_cast<std::size_t>(b)] * inv;
    }
    return s;
}

// Spectrum of an envelope: bin k holds the phasor at bin_omega(k).
inline void envelope_spectrum(const ComplexEnvelope& env, std::vector<cplx>& fx, std::vector<cplx>& fy) {
    fx = env.ex;
    fy = env.ey;
    fft_backward(fx);
    fft_backward(fy);
    const double inv = 1.0 / static_cast<double>(env.size());
    for (auto& v : fx) v *= inv;
    for (auto& v : fy) v *= inv;
}

}  // namespace nldp
