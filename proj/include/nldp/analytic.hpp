#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "link.hpp"
#include "polarization.hpp"
#include "units.hpp"

namespace nldp {

// First-order perturbation of the probe at tone l driven by the G-wave
// A^{m+l/2} A^{m-l/2*}. Indices are relative to the probe, which sits at
// grid index 0. Both branches are returned per polarization.
struct PerturbationPhasor {
    double l = 0.0;
    double m = 0.0;
    JonesVector symmetric;      // coefficient 4/3, polarization independent
    JonesVector antisymmetric;  // coefficient 2/3, diag(1, -1)
};

enum class PhasorForm { asymptotic, exact };

struct GWave {
    cplx sum;         // A_x^p A_x^q* + A_y^p A_y^q*
    cplx difference;  // A_x^p A_x^q* - A_y^p A_y^q*
};

inline GWave gwave(const CombSpectrum& comb, double l, double m) {
    const double pf = m + 0.5 * l, qf = m - 0.5 * l;
    const long p = std::lround(pf), q = std::lround(qf);
    if (std::abs(pf - static_cast<double>(p)) > 1e-9 || std::abs(qf - static_cast<double>(q)) > 1e-9)
        throw invalid_argument("perturbation: m +- l/2 must be integer tone indices");
    if (!comb.grid.contains(p) || !comb.grid.contains(q))
        throw invalid_argument("perturbation: tone index outside the comb grid");
    const cplx xx = comb.x(p) * std::conj(comb.x(q));
    const cplx yy = comb.y(p) * std::conj(comb.y(q));
    return {xx + yy, xx - yy};
}

namespace detail {
// Span integral of e^{(j dk - alpha) z} from 0 to L.
inline cplx span_integral(double dk, double alpha, double L, PhasorForm form) {
    const cplx d{-alpha, dk};
    if (form == PhasorForm::asymptotic) return -1.0 / d;
    return (std::exp(d * L) - 1.0) / d;
}
}  // namespace detail

// Single-span phasor at the span output (length L0).
inline PerturbationPhasor perturbation_phasor_span(const CombSpectrum& loading, const JonesVector& a0, double l,
                                                   double m, const FiberParams& params, double L0,
                                                   PhasorForm form = PhasorForm::asymptotic) {
    params.validate();
    const GWave g = gwave(loading, l, m);
    const double w = loading.grid.pitch;
    const double kl = 0.5 * params.beta2 * l * l * w * w;
    const double dk = form == PhasorForm::asymptotic ? params.beta2 * m * l * w * w
                                                     : params.beta2 * w * w * (m * l - 0.5 * l * l);
    const cplx prop = std::exp(cplx(-0.5 * params.alpha * L0, kl * L0));
    const cplx k = cplx(0.0, params.gamma) * detail::span_integral(dk, params.alpha, L0, form) * prop;
    PerturbationPhasor r;
    r.l = l;
    r.m = m;
    const cplx s = (4.0 / 3.0) * k * g.sum;
    const cplx d = (2.0 / 3.0) * k * g.difference;
    r.symmetric = {s * a0.ex, s * a0.ey};
    r.antisymmetric = {d * a0.ex, -d * a0.ey};
    return r;
}

// Antisymmetric contribution of one non-birefringent plate of length dz
// centered at z, observed at the span output L0.
inline JonesVector perturbation_phasor_plate(const CombSpectrum& loading, const JonesVector& a0, double l,
                                             double m, const FiberParams& params, double z, double dz, double L0) {
    const GWave g = gwave(loading, l, m);
    const double w = loading.grid.pitch;
    const double kl = 0.5 * params.beta2 * l * l * w * w;
    const double dk = params.beta2 * w * w * (m * l - 0.5 * l * l);
    const cplx k = cplx(0.0, params.gamma) * (2.0 / 3.0) * g.difference * std::exp(cplx(-params.alpha * z, dk * z)) *
                   dz * std::exp(cplx(-0.5 * params.alpha * L0, kl * L0));
    return {k * a0.ex, -k * a0.ey};
}

// Coherent span sum sum_{n=1}^{N_s} e^{j theta n}, theta = beta2 l m w^2 L0.
inline cplx span_phase_sum(double theta, int n_spans) {
    if (n_spans < 1) throw invalid_argument("span sum: n_spans must be >= 1");
    cplx s = 0.0;
    for (int n = 1; n <= n_spans; ++n) s += std::polar(1.0, theta * n);
    return s;
}

inline cplx perturbation_link_sum(cplx span_phasor, double l, double m, double pitch, double beta2, double L0,
                                  int n_spans) {
    return span_phasor * span_phase_sum(beta2 * l * m * pitch * pitch * L0, n_spans);
}

// Lorentzian stand-in for |sum|^2 with the same total area over one period.
inline double span_sum_lorentz(double theta, int n_spans) {
    const double x = 0.5 * n_spans * theta;
    return static_cast<double>(n_spans) * n_spans / (1.0 + x * x);
}

// Per-tone variance of the coherent link sum for flat loading, both branches
// folded into the symmetric coefficient as in the phase-noise picture.
inline double phasor_variance_link(double gwave_power, double m, double l, double pitch, const FiberParams& p,
                                   double L0, int n_spans, double probe_power = 1.0) {
    const double c = 4.0 * p.gamma / (3.0 * p.alpha);
    const double r = p.beta2 * m * l * pitch * pitch / p.alpha;
    const double le = L0 * n_spans;
    const double x = 0.5 * p.beta2 * le * m * l * pitch * pitch;
    return c * c * n_spans * n_spans * std::exp(-p.alpha * L0) * gwave_power / (1.0 + r * r) / (1.0 + x * x) *
           probe_power;
}

// Symmetric phase variance for flat loading of total power p_rep spread over
// omega_min < |Omega| < omega_max, probe power normalized to probe_power.
inline double symmetric_phase_variance(const LinkConfig& link, const FiberParams& p, double probe_power = 1.0) {
    if (!(link.omega_min > 0.0)) throw invalid_argument("symmetric_phase_variance: omega_min must be > 0");
    if (!(link.omega_max > link.omega_min)) throw invalid_argument("symmetric_phase_variance: omega_max <= omega_min");
    const double ga = p.gamma / p.alpha;
    const double s = link.p_rep / (link.omega_max - link.omega_min);
    return 8.0 / 9.0 * units::pi * ga * ga * std::exp(-p.alpha * link.span_length) /
           (std::abs(p.beta2) * link.span_length) * link.n_spans * s * s *
           std::log(link.omega_max / link.omega_min) * probe_power;
}

struct PolarimeterBand {
    double omega_e = units::two_pi * 30e6;  // rad/s

    void validate() const {
        if (!(omega_e > 0.0)) throw invalid_argument("polarimeter band: omega_e must be > 0");
    }
};

// Double sum over span pairs with PMD decorrelation,
// sum_{n,p} e^{j theta (n-p)} (1/2) e^{-d |n-p|}.
inline double decorrelated_span_sum(double theta, double d, int n_spans) {
    double s = 0.0;
    for (int k = -(n_spans - 1); k <= n_spans - 1; ++k)
        s += (n_spans - std::abs(k)) * std::cos(theta * k) * 0.5 * std::exp(-d * std::abs(k));
    return s;
}

// Exponential replacement of the triangular window.
inline double decorrelated_span_sum_lorentz(double theta, double d, int n_spans) {
    const double c = d + 2.0 / n_spans;
    return n_spans / c / (1.0 + (theta / c) * (theta / c));
}

struct AutocorrelationOptions {
    bool electrical_filter = true;
    int omega_points = 257;      // log grid over the G-wave band
    int nu_points_per_decade = 400;
};

namespace detail {

struct NldpKernel {
    double alpha, beta2, tau_p, L0;
    int n_spans;
    double omega_e;
    bool filter;

    double c(double og) const { return 0.5 * og * og * tau_p * tau_p * L0 + 2.0 / n_spans; }
    // Lorentzian half-widths in nu for a G-wave at og.
    std::array<double, 3> widths(double og) const {
        const double b = std::abs(beta2) * og;
        return {alpha / b, c(og) / (b * L0), filter ? omega_e : std::numeric_limits<double>::infinity()};
    }
    double profile(double og, double nu) const {
        const auto w = widths(og);
        double v = static_cast<double>(n_spans) / c(og);
        for (double wi : w)
            if (std::isfinite(wi)) v /= 1.0 + (nu / wi) * (nu / wi);
        return v;
    }
};

// Composite Simpson over u = ln(x) on [ln a, ln b] of x f(x).
template <class F>
double log_simpson(F&& f, double a, double b, int points_per_decade) {
    const double la = std::log(a), lb = std::log(b);
    int n = std::max(8, static_cast<int>(std::ceil((lb - la) / std::log(10.0) * points_per_decade)));
    if (n % 2) ++n;
    const double h = (lb - la) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = std::exp(la + h * i);
        const double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += wgt * x * f(x);
    }
    return s * h / 3.0;
}

inline NldpKernel kernel(const LinkConfig& link, const FiberParams& p, const PolarimeterBand& band, bool filter) {
    return {p.alpha, p.beta2, p.tau_p, link.span_length, link.n_spans, band.omega_e, filter};
}

inline double prefactor(const LinkConfig& link, const FiberParams& p) {
    const double g = 2.0 * p.gamma / (3.0 * p.alpha);
    const double s = link.p_rep / (4.0 * (link.omega_max - link.omega_min));
    // Two G-wave sidebands (+-Omega_G), G-wave density 2 s^2 per (rad/s)^2.
    return g * g * std::exp(-p.alpha * link.span_length) * 2.0 * 2.0 * s * s;
}

}  // namespace detail

// Field-normalized antisymmetric autocorrelation sigma^2_NLDP(L_e, tau),
// evaluated as a continuum over G-wave offset Omega_G = m w and tone
// offset nu = l w.
inline double nldp_autocorrelation(const LinkConfig& link, const FiberParams& p, const PolarimeterBand& band,
                                   double tau, const AutocorrelationOptions& opt = {}) {
    if (!(tau >= 0.0)) throw invalid_argument("nldp_autocorrelation: tau must be >= 0");
    link.validate();
    band.validate();
    const auto k = detail::kernel(link, p, band, opt.electrical_filter);
    auto over_nu = [&](double og) {
        const auto w = k.widths(og);
        const double lo = 1e-5 * std::min({w[0], w[1], w[2]});
        const double hi = 1e5 * std::min({w[0], w[1], w[2]});
        // Both signs of nu.
        return 2.0 * detail::log_simpson([&](double nu) { return std::cos(nu * tau) * k.profile(og, nu); }, lo, hi,
                                         opt.nu_points_per_decade);
    };
    const double inner = detail::log_simpson(over_nu, link.omega_min, link.omega_max, opt.omega_points / 2);
    return detail::prefactor(link, p) * inner;
}

// sigma^2(0) - sigma^2(tau), integrated with 1 - cos directly.
inline double nldp_decorrelation(const LinkConfig& link, const FiberParams& p, const PolarimeterBand& band,
                                 double tau, const AutocorrelationOptions& opt = {}) {
    if (!(tau > 0.0)) throw invalid_argument("nldp_decorrelation: tau must be > 0");
    link.validate();
    band.validate();
    const auto k = detail::kernel(link, p, band, opt.electrical_filter);
    auto over_nu = [&](double og) {
        const auto w = k.widths(og);
        const double wm = std::min({w[0], w[1], w[2]});
        return 2.0 * detail::log_simpson(
                         [&](double nu) {
                             const double h = 0.5 * nu * tau;
                             const double s = std::sin(h);
                             return 2.0 * s * s * k.profile(og, nu);
                         },
                         1e-5 * wm, 1e5 * wm, opt.nu_points_per_decade);
    };
    return detail::prefactor(link, p) * detail::log_simpson(over_nu, link.omega_min, link.omega_max, opt.omega_points / 2);
}

// Same quantity with the G-wave offset summed over the comb grid tones
// Omega_G = m w and the tone offset nu kept continuous.
inline double nldp_autocorrelation_grid(const LinkConfig& link, const FiberParams& p, const PolarimeterBand& band,
                                        double tau, double pitch, const AutocorrelationOptions& opt = {}) {
    if (!(pitch > 0.0)) throw invalid_argument("nldp_autocorrelation_grid: pitch must be > 0");
    link.validate();
    band.validate();
    const auto k = detail::kernel(link, p, band, opt.electrical_filter);
    const long m_lo = static_cast<long>(std::ceil(link.omega_min / pitch));
    const long m_hi = static_cast<long>(std::floor(link.omega_max / pitch));
    if (m_hi < m_lo) throw invalid_argument("nldp_autocorrelation_grid: no grid tone inside the band");
    double total = 0.0;
    for (long m = m_lo; m <= m_hi; ++m) {
        const double og = m * pitch;
        const auto w = k.widths(og);
        const double wm = std::min({w[0], w[1], w[2]});
        total += 2.0 * detail::log_simpson([&](double nu) { return std::cos(nu * tau) * k.profile(og, nu); },
                                           1e-5 * wm, 1e5 * wm, opt.nu_points_per_decade);
    }
    return detail::prefactor(link, p) * total * pitch;
}

// Half width at half maximum (Hz) of the perturbation tone profile summed over
// G-waves, without the electrical filter.
inline double perturbation_halfwidth(const LinkConfig& link, const FiberParams& p, int omega_points = 257) {
    const auto k = detail::kernel(link, p, PolarimeterBand{}, false);
    auto prof = [&](double nu) {
        return detail::log_simpson([&](double og) { return k.profile(og, nu); }, link.omega_min, link.omega_max,
                                   omega_points / 2);
    };
    const double p0 = prof(0.0);
    double lo = 1.0, hi = 1e13;
    if (prof(hi) > 0.5 * p0) throw numerical_error("perturbation_halfwidth: profile does not fall off");
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        (prof(mid) > 0.5 * p0 ? lo : hi) = mid;
        if (hi / lo - 1.0 < 1e-9) break;
    }
    return units::rad_s_to_hz(std::sqrt(lo * hi));
}

// Mean square SOP speed from the Jones-space decorrelation: with the probe
// SOP averaged over the sphere, <|dS|^2> = (16/3) (sigma^2(0) - sigma^2(tau)).
inline double sop_speed_from_autocorrelation(const LinkConfig& link, const FiberParams& p,
                                             const PolarimeterBand& band, double tau_s,
                                             const AutocorrelationOptions& opt = {}) {
    const double d = nldp_decorrelation(link, p, band, tau_s, opt);
    return std::sqrt(16.0 / 3.0 * d) / tau_s;
}

struct SopSpeedPrediction {
    double rms = 0.0;          // rad/s, dimensionally consistent
    double rms_as_printed = 0.0;  // closed form without the 1/L0^2 factor
    double term_pmd_free = 0.0;   // first bracket term
    double term_pmd = 0.0;        // second bracket term
};

// Closed-form mean-square SOP speed for flat loading. The printed closed form
// lacks a 1/L0^2 needed for units of (rad/s)^2; `rms` carries it.
inline SopSpeedPrediction sop_speed_prediction(const LinkConfig& link, const FiberParams& p,
                                               const PolarimeterBand& band) {
    link.validate();
    band.validate();
    const double b2 = std::abs(p.beta2);
    const double t1 = band.omega_e / (p.alpha * link.span_length) * units::pi / link.omega_min;
    const double arg = 1.0 + b2 * band.omega_e / p.alpha * link.omega_max;
    if (!(arg > 0.0)) throw domain_error("sop_speed_prediction: log argument " + std::to_string(arg) + " <= 0");
    const double t2 = 0.25 * p.tau_p * p.tau_p / b2 * link.n_spans * units::pi * std::log(arg);
    if (t1 + t2 < 0.0) throw domain_error("sop_speed_prediction: negative bracket");
    const double s = link.p_rep / (link.omega_max - link.omega_min);
    const double pre = 20.0 / 27.0 * p.gamma * p.gamma / (b2 * b2 * p.alpha * p.alpha) * s * s;
    SopSpeedPrediction r;
    r.term_pmd_free = t1;
    r.term_pmd = t2;
    r.rms_as_printed = std::sqrt(pre * (t1 + t2));
    r.rms = r.rms_as_printed / link.span_length;
    return r;
}

struct RolloffTable {
    std::array<double, 4> thz{};       // rows 1..4, row 2 with the sqrt(L0) factor
    double row2_as_printed = 0.0;      // 1/(pi sqrt2 tau_p), units Hz sqrt(m) / 1e12
};

inline RolloffTable rolloff_table(const FiberParams& p, const LinkConfig& link, const PolarimeterBand& band) {
    const double L0 = link.span_length;
    const double ns = link.n_spans;
    const double b2 = std::abs(p.beta2);
    RolloffTable t;
    const double inf = std::numeric_limits<double>::infinity();
    t.thz[0] = p.tau_p > 0.0 ? 1.0 / (units::pi * p.tau_p * std::sqrt(L0 * ns)) * 1e-12 : inf;
    t.thz[1] = p.tau_p > 0.0 ? 1.0 / (units::pi * std::sqrt(2.0) * p.tau_p * std::sqrt(L0)) * 1e-12 : inf;
    t.thz[2] = 1.0 / (units::pi * ns * b2 * band.omega_e * L0) * 1e-12;
    t.thz[3] = p.alpha / (2.0 * units::pi * b2 * band.omega_e) * 1e-12;
    t.row2_as_printed = p.tau_p > 0.0 ? 1.0 / (units::pi * std::sqrt(2.0) * p.tau_p) * 1e-12 : inf;
    return t;
}

struct NldpPrediction {
    double sigma2_sym = 0.0;                          // rad^2
    std::vector<std::pair<double, double>> sigma2_nldp_tau;  // (tau s, value)
    double second_moment = 0.0;                       // (rad/s)^2 from the autocorrelation path
    double sop_speed_rms = 0.0;                       // rad/s, closed form
};

inline NldpPrediction predict(const LinkConfig& link, const FiberParams& p, const PolarimeterBand& band,
                              double tau_s, const std::vector<double>& taus = {}) {
    NldpPrediction r;
    r.sigma2_sym = symmetric_phase_variance(link, p);
    for (double t : taus) r.sigma2_nldp_tau.emplace_back(t, nldp_autocorrelation(link, p, band, t));
    const double s = sop_speed_from_autocorrelation(link, p, band, tau_s);
    r.second_moment = s * s;
    r.sop_speed_rms = sop_speed_prediction(link, p, band).rms;
    return r;
}

}  // namespace nldp
