#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "field.hpp"
#include "link.hpp"
#include "polarization.hpp"

namespace nldp {

struct PropagationSettings {
    double max_nl_phase_per_step = 0.01;  // rad
    int min_steps_per_plate = 1;
    bool include_antisymmetric_term = true;
    bool include_coherent_coupling_term = false;
    double guard_fraction = 0.8;        // usable share of Nyquist
    double aliasing_tolerance = 1e-5;   // energy share allowed beyond the guard

    void validate() const {
        if (!(max_nl_phase_per_step > 0.0 && max_nl_phase_per_step <= 0.1))
            throw invalid_argument("settings: max_nl_phase_per_step must be in (0, 0.1]");
        if (min_steps_per_plate < 1) throw invalid_argument("settings: min_steps_per_plate must be >= 1");
    }
};

namespace detail {

inline cplx cmul(cplx a, cplx b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// e^{j phi} by truncated series; error below 1e-12 for |phi| < 0.1.
inline cplx cis_taylor(double phi) {
    const double p2 = phi * phi;
    const double c = 1.0 - p2 * (0.5 - p2 * (1.0 / 24.0 - p2 * (1.0 / 720.0 - p2 * (1.0 / 40320.0))));
    const double s = phi * (1.0 - p2 * (1.0 / 6.0 - p2 * (1.0 / 120.0 - p2 * (1.0 / 5040.0))));
    return {c, s};
}

inline cplx cis(double phi) {
    if (std::abs(phi) < 0.1) return cis_taylor(phi);
    return {std::cos(phi), std::sin(phi)};
}

// out[k] = scale * exp(j (c w_k^2 + d w_k)) on the FFT bin grid w_k = k dw
// (k wrapped to negative above n/2), by recurrence reseeded every block.
inline void fill_bin_phase(cplx* out, std::size_t n, double dw, double c, double d, double scale) {
    constexpr long block = 32;
    const long half = static_cast<long>(n / 2);
    const long nn = static_cast<long>(n);
    const double a = c * dw * dw, b = d * dw;
    const cplx rr = std::polar(1.0, 2.0 * a);
    auto phase = [&](long k) {
        const double w = dw * static_cast<double>(k);
        return c * w * w + d * w;
    };
    for (long k0 = 0; k0 <= half; k0 += block) {
        cplx v = std::polar(scale, phase(k0));
        cplx r = std::polar(1.0, a * (2.0 * static_cast<double>(k0) + 1.0) + b);
        const long k1 = std::min(k0 + block, half + 1);
        for (long k = k0; k < k1; ++k) {
            out[k] = v;
            v = cmul(v, r);
            r = cmul(r, rr);
        }
    }
    for (long k0 = -1; k0 > half - nn; k0 -= block) {
        cplx v = std::polar(scale, phase(k0));
        cplx r = std::polar(1.0, a * (-2.0 * static_cast<double>(k0) + 1.0) - b);
        const long k1 = std::max(k0 - block, half - nn);
        for (long k = k0; k > k1; --k) {
            out[k + nn] = v;
            v = cmul(v, r);
            r = cmul(r, rr);
        }
    }
}

inline void fill_bin_phase(std::vector<cplx>& out, std::size_t n, double dw, double c, double d, double scale) {
    out.resize(n);
    fill_bin_phase(out.data(), n, dw, c, d, scale);
}

// Energy share of bins beyond guard * Nyquist.
inline double out_of_guard_fraction(const cplx* fx, const cplx* fy, std::size_t n, double guard) {
    const double lim = guard * 0.5 * static_cast<double>(n);
    double in = 0.0, out = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k <= n / 2 ? k : n - k);
        const double e = std::norm(fx[k]) + std::norm(fy[k]);
        (kk > lim ? out : in) += e;
    }
    const double tot = in + out;
    return tot > 0.0 ? out / tot : 0.0;
}

inline void check_guard(const cplx* fx, const cplx* fy, std::size_t n, const PropagationSettings& s,
                        const char* where) {
    const double f = out_of_guard_fraction(fx, fy, n, s.guard_fraction);
    if (f > s.aliasing_tolerance) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: spectral occupancy beyond Nyquist guard band (energy share %.3e)",
                      where, f);
        throw aliasing_error(buf);
    }
}

inline double peak_power(const cplx* x, const cplx* y, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::norm(x[i]) + std::norm(y[i]));
    return m;
}

// Full Kerr right-hand side with the fast birefringence phase dropped.
struct KerrRhs {
    double c_self, c_cross, c_coh;
    void operator()(cplx x, cplx y, double g, cplx& dx, cplx& dy) const {
        const double px = std::norm(x), py = std::norm(y);
        const cplx j{0.0, 1.0};
        dx = j * g * ((c_self * px + c_cross * py) * x + c_coh * y * y * std::conj(x));
        dy = j * g * ((c_self * py + c_cross * px) * y + c_coh * x * x * std::conj(y));
    }
};

inline KerrRhs kerr_rhs(const PropagationSettings& s) {
    const double a = s.include_antisymmetric_term ? 1.0 / 6.0 : 0.0;
    return {5.0 / 6.0 + a, 5.0 / 6.0 - a, s.include_coherent_coupling_term ? 1.0 / 3.0 : 0.0};
}

// Pointwise RK4 integration of the Kerr step; reference path for any
// coefficient combination.
inline void kerr_step_rk4(cplx& x, cplx& y, double gamma, double h, const KerrRhs& f, int substeps) {
    const double dh = h / substeps;
    for (int i = 0; i < substeps; ++i) {
        cplx k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
        f(x, y, gamma, k1x, k1y);
        f(x + 0.5 * dh * k1x, y + 0.5 * dh * k1y, gamma, k2x, k2y);
        f(x + 0.5 * dh * k2x, y + 0.5 * dh * k2y, gamma, k3x, k3y);
        f(x + dh * k3x, y + dh * k3y, gamma, k4x, k4y);
        x += dh / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += dh / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    }
}

// Kerr step on time samples; exact phase rotations whenever the active
// terms allow it.
inline void kerr_step(cplx* x, cplx* y, std::size_t n, double gamma, double h, const PropagationSettings& s) {
    const KerrRhs f = kerr_rhs(s);
    if (f.c_coh == 0.0) {
        const double g1 = gamma * h * f.c_self, g2 = gamma * h * f.c_cross;
        if (g1 * peak_power(x, y, n) < 0.1) {
            for (std::size_t i = 0; i < n; ++i) {
                const double px = std::norm(x[i]), py = std::norm(y[i]);
                x[i] = cmul(x[i], cis_taylor(g1 * px + g2 * py));
                y[i] = cmul(y[i], cis_taylor(g1 * py + g2 * px));
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double px = std::norm(x[i]), py = std::norm(y[i]);
                x[i] = cmul(x[i], cis(g1 * px + g2 * py));
                y[i] = cmul(y[i], cis(g1 * py + g2 * px));
            }
        }
    } else if (s.include_antisymmetric_term) {
        // Circular components decouple into pure phase rotations:
        // dA/dz = j (2/3) gamma (|A+-|^2 + 2 |A-+|^2) A+-.
        const double g = gamma * h * 2.0 / 3.0;
        const double r = 1.0 / std::sqrt(2.0);
        const cplx j{0.0, 1.0};
        for (std::size_t i = 0; i < n; ++i) {
            cplx p = r * (x[i] + j * y[i]), m = r * (x[i] - j * y[i]);
            const double pp = std::norm(p), pm = std::norm(m);
            p = cmul(p, cis(g * (pp + 2.0 * pm)));
            m = cmul(m, cis(g * (pm + 2.0 * pp)));
            x[i] = r * (p + m);
            y[i] = -j * r * (p - m);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double pk = gamma * h * (std::norm(x[i]) + std::norm(y[i]));
            const int sub = std::max(1, static_cast<int>(std::ceil(pk / 1e-3)));
            kerr_step_rk4(x[i], y[i], gamma, h, f, sub);
        }
    }
}

inline void kerr_step(std::vector<cplx>& x, std::vector<cplx>& y, double gamma, double h,
                      const PropagationSettings& s) {
    kerr_step(x.data(), y.data(), x.size(), gamma, h, s);
}

}  // namespace detail

// Symmetric split-step through every plate of one span. Plate Jones matrices
// act per frequency bin at plate entry; each plate is split into at least
// min_steps_per_plate steps, more if the nonlinear phase bound requires it.
inline ComplexEnvelope propagate_span(const ComplexEnvelope& env, const WaveplateRealization& span,
                                      const FiberParams& params, const PropagationSettings& settings) {
    params.validate();
    settings.validate();
    const std::size_t n = env.size();
    if (n < 2 || env.ey.size() != n) throw invalid_argument("propagate_span: malformed envelope");
    if (span.plates.empty()) throw invalid_argument("propagate_span: empty span");

    const double inv_n = 1.0 / static_cast<double>(n);
    const double dw = units::two_pi / env.duration();
    const double wc = span.carrier_omega;
    const auto& plan = FftPlans::get(n, true);

    AlignedBuffer X(n), Y(n), fx(n), fy(n), lin(n);
    cplx* x = X.data();
    cplx* y = Y.data();
    auto fwd = [&] {
        fftw_execute_dft(plan.fwd, as_fftw(x), as_fftw(x));
        fftw_execute_dft(plan.fwd, as_fftw(y), as_fftw(y));
    };
    auto bwd = [&] {
        fftw_execute_dft(plan.bwd, as_fftw(x), as_fftw(x));
        fftw_execute_dft(plan.bwd, as_fftw(y), as_fftw(y));
    };

    std::copy(env.ex.begin(), env.ex.end(), x);
    std::copy(env.ey.begin(), env.ey.end(), y);
    double peak = detail::peak_power(x, y, n);
    bwd();
    for (std::size_t k = 0; k < n; ++k) {
        x[k] *= inv_n;
        y[k] *= inv_n;
    }
    detail::check_guard(x, y, n, settings, "propagate_span input");

    const double c_disp = 0.5 * params.beta2;
    const double c_self = settings.include_antisymmetric_term ? 1.0 : 5.0 / 6.0;
    double prev_half = 0.0;      // pending half step from the previous plate
    double pending_scale = 1.0;  // 1/N owed after a backward transform
    bool in_time = false;

    for (const Waveplate& p : span.plates) {
        int steps = settings.min_steps_per_plate;
        if (params.gamma > 0.0) {
            const double need = params.gamma * c_self * peak * p.length / settings.max_nl_phase_per_step;
            steps = std::max(steps, static_cast<int>(std::ceil(need)));
        }
        const double h = p.length / steps;

        if (in_time) bwd();
        // Close the previous plate's last half step, rotate into this plate
        // and open its first half step in a single frequency-domain pass.
        const double zlin = prev_half + 0.5 * h;
        const double sc = std::exp(-0.5 * params.alpha * zlin) * pending_scale;
        detail::fill_bin_phase(fx.data(), n, dw, c_disp * zlin, 0.5 * p.tau, sc);
        detail::fill_bin_phase(fy.data(), n, dw, c_disp * zlin, -0.5 * p.tau, sc);
        const cplx e0 = std::polar(1.0, 0.5 * p.tau * wc);
        const cplx e1 = std::conj(e0);
        const double cs = std::cos(p.xi), sn = std::sin(p.xi);
        for (std::size_t k = 0; k < n; ++k) {
            const cplx rx = cs * x[k] + sn * y[k];
            const cplx ry = cs * y[k] - sn * x[k];
            x[k] = detail::cmul(detail::cmul(e0, fx[k]), rx);
            y[k] = detail::cmul(detail::cmul(e1, fy[k]), ry);
        }

        if (steps > 1) detail::fill_bin_phase(lin.data(), n, dw, c_disp * h, 0.0, std::exp(-0.5 * params.alpha * h) * inv_n);
        for (int s = 0; s < steps; ++s) {
            if (s > 0) {
                bwd();
                for (std::size_t k = 0; k < n; ++k) {
                    x[k] = detail::cmul(x[k], lin[k]);
                    y[k] = detail::cmul(y[k], lin[k]);
                }
            }
            fwd();
            if (params.gamma > 0.0) detail::kerr_step(x, y, n, params.gamma, h, settings);
        }
        in_time = true;
        peak = detail::peak_power(x, y, n);
        prev_half = 0.5 * h;
        pending_scale = inv_n;
    }

    if (in_time) bwd();
    detail::fill_bin_phase(fx.data(), n, dw, c_disp * prev_half, 0.0, std::exp(-0.5 * params.alpha * prev_half) * pending_scale);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = detail::cmul(x[k], fx[k]);
        y[k] = detail::cmul(y[k], fx[k]);
    }
    detail::check_guard(x, y, n, settings, "propagate_span output");
    fwd();

    ComplexEnvelope out;
    out.sample_period = env.sample_period;
    out.center_frequency = env.center_frequency;
    out.ex.assign(x, x + n);
    out.ey.assign(y, y + n);
    return out;
}

// Called after each span's repeater (and kicker, when it fires); span_index
// counts from 1.
using SpanTap = std::function<void(int span_index, const ComplexEnvelope&)>;

inline void apply_jones(ComplexEnvelope& e, const JonesMatrix& m) {
    for (std::size_t i = 0; i < e.size(); ++i) {
        const JonesVector v = m * JonesVector{e.ex[i], e.ey[i]};
        e.ex[i] = v.ex;
        e.ey[i] = v.ey;
    }
}

// Zero every spectral component farther than half_width from the carrier.
inline void band_limit(ComplexEnvelope& e, double half_width) {
    const std::size_t n = e.size();
    AlignedBuffer x(n), y(n);
    std::copy(e.ex.begin(), e.ex.end(), x.data());
    std::copy(e.ey.begin(), e.ey.end(), y.data());
    x.backward();
    y.backward();
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = std::abs(e.bin_omega(k)) > half_width * (1.0 + 1e-12) ? 0.0 : inv;
        x[k] *= s;
        y[k] *= s;
    }
    x.forward();
    y.forward();
    std::copy(x.data(), x.data() + n, e.ex.begin());
    std::copy(y.data(), y.data() + n, e.ey.begin());
}

// N_s spans, each followed by a flat-gain repeater restoring the launch
// power (plus optional ASE) and, at circulation boundaries, an optional
// kicker rotation. Spans are reused cyclically, as in a recirculating loop.
inline ComplexEnvelope propagate_link(const ComplexEnvelope& env, const LinkConfig& link,
                                      const std::vector<WaveplateRealization>& spans, const FiberParams& params,
                                      const PropagationSettings& settings, const SpanTap& tap = {}) {
    link.validate();
    if (spans.empty()) throw invalid_argument("propagate_link: no span realizations");
    const double target = env.mean_power();
    if (!(target > 0.0)) throw invalid_argument("propagate_link: zero launch power");

    auto rng = detail::make_rng(link.seed, 0x4b49434bu);
    auto ase_rng = detail::make_rng(link.seed, 0x41534530u);
    ComplexEnvelope cur = env;
    for (int s = 1; s <= link.n_spans; ++s) {
        cur = propagate_span(cur, spans[static_cast<std::size_t>(s - 1) % spans.size()], params, settings);
        const double g = repeater_gain(cur.mean_power(), target);
        const double a = std::sqrt(g);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            cur.ex[i] *= a;
            cur.ey[i] *= a;
        }
        if (link.repeater_band > 0.0) band_limit(cur, 0.5 * link.repeater_band);
        if (link.repeater_ase_enabled) {
            const double rho = ase_density_per_pol(g, link.nf_db, env.center_frequency);
            const double var = rho / cur.sample_period;  // per complex sample
            std::normal_distribution<double> nd(0.0, std::sqrt(0.5 * var));
            for (std::size_t i = 0; i < cur.size(); ++i) {
                cur.ex[i] += cplx{nd(ase_rng), nd(ase_rng)};
                cur.ey[i] += cplx{nd(ase_rng), nd(ase_rng)};
            }
        }
        if (link.kicker_enabled && s % link.spans_per_circulation == 0)
            apply_jones(cur, haar_random_rotation(rng));
        if (tap) tap(s, cur);
    }
    return cur;
}

}  // namespace nldp
