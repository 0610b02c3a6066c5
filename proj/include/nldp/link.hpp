#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "errors.hpp"
#include "polarization.hpp"
#include "units.hpp"

namespace nldp {

// Scalar fiber parameters in SI units.
struct FiberParams {
    double alpha = units::db_per_km_to_per_m(0.2);              // 1/m (power)
    double beta2 = units::ps2_per_km_to_s2_per_m(-21.7);        // s^2/m
    double gamma = units::per_w_km_to_per_w_m(1.3);             // 1/(W m)
    double tau_p = units::ps_per_sqrt_km_to_s_per_sqrt_m(0.04);  // s/sqrt(m)
    double beta1 = 0.0;                                         // retarded frame

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw invalid_argument("fiber: alpha must be > 0");
        if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw invalid_argument("fiber: gamma must be >= 0");
        if (!(tau_p >= 0.0) || !std::isfinite(tau_p)) throw invalid_argument("fiber: tau_p must be >= 0");
        if (!std::isfinite(beta2)) throw invalid_argument("fiber: beta2 must be finite");
    }
};

// One non-birefringent section followed by its axis rotation. The plate's
// differential delay tau gives half-retardation tau*(omega_c + d_omega)/2.
struct Waveplate {
    double length = 0.0;  // m
    double center = 0.0;  // m from span input
    double xi = 0.0;      // rad
    double tau = 0.0;     // s
    double zeta = 0.0;    // rad at the carrier

    double zeta_at(double carrier_omega, double d_omega) const {
        return 0.5 * tau * (carrier_omega + d_omega);
    }
    JonesMatrix matrix(double carrier_omega, double d_omega) const {
        return waveplate_matrix(xi, zeta_at(carrier_omega, d_omega));
    }
};

struct WaveplateRealization {
    std::vector<Waveplate> plates;
    double carrier_omega = units::two_pi * 193.4e12;

    double length() const {
        double s = 0.0;
        for (const auto& p : plates) s += p.length;
        return s;
    }

    // Chain Jones matrix at carrier offset d_omega (first plate acts first).
    JonesMatrix jones(double d_omega) const {
        JonesMatrix u;
        for (const auto& p : plates) u = p.matrix(carrier_omega, d_omega) * u;
        return u;
    }
};

struct LinkConfig {
    int n_spans = 110;
    int spans_per_circulation = 11;
    double span_length = 93e3;                          // m
    double p_rep = units::dbm_to_w(20.9);               // W, loading launch power
    double omega_min = units::two_pi * 50e9;            // rad/s
    double omega_max = units::two_pi * 2.5e12;          // rad/s
    double probe_power = units::dbm_to_w(-5.2);         // W
    double center_frequency = 193.4e12;                 // Hz
    double probe_frequency = 193.4e12;                  // Hz
    double gap_width = units::two_pi * 100e9;           // rad/s
    double nf_db = 5.0;                                 // repeater noise figure
    double repeater_band = 0.0;                         // rad/s full width kept by repeaters, 0 = unlimited
    std::uint64_t seed = 1;
    bool kicker_enabled = true;
    bool repeater_ase_enabled = false;

    void validate() const {
        if (n_spans < 1) throw invalid_argument("link: n_spans must be >= 1");
        if (spans_per_circulation < 1) throw invalid_argument("link: spans_per_circulation must be >= 1");
        if (!(span_length > 0.0)) throw invalid_argument("link: span_length must be > 0");
        if (!(omega_min > 0.0) || !(omega_max > omega_min))
            throw invalid_argument("link: need 0 < omega_min < omega_max");
        if (!(p_rep > 0.0) || !(probe_power > 0.0)) throw invalid_argument("link: powers must be > 0");
        if (!(gap_width > 0.0)) throw invalid_argument("link: gap_width must be > 0");
    }

    double link_length() const { return span_length * n_spans; }
};

namespace detail {
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    return std::mt19937_64(seq);
}
}  // namespace detail

// Per-plate delay spread kappa*sqrt(dz): the accumulated PMD vector is a 3D
// random walk, so <DGD^2> = kappa^2 L and the Maxwellian mean is
// sqrt(8/(3 pi)) kappa sqrt(L) = tau_p sqrt(L).
inline double plate_delay_scale(double tau_p) { return tau_p / std::sqrt(8.0 / (3.0 * units::pi)); }

inline WaveplateRealization realize_span(const FiberParams& params, double L0, std::uint64_t seed,
                                         double carrier_omega = units::two_pi * 193.4e12) {
    if (!(L0 >= 100.0)) throw invalid_argument("realize_span: span length must be >= 100 m");
    params.validate();
    auto rng = detail::make_rng(seed, 0x5350414eu);
    std::uniform_real_distribution<double> len(10.0, 100.0);
    std::uniform_real_distribution<double> ang(0.0, units::two_pi);
    std::normal_distribution<double> g(0.0, 1.0);
    const double kappa = plate_delay_scale(params.tau_p);

    WaveplateRealization r;
    r.carrier_omega = carrier_omega;
    double z = 0.0;
    while (L0 - z > 100.0) {
        double d = len(rng);
        // Keep the final remainder inside [10, 100] m.
        if (L0 - z - d < 10.0) d = L0 - z - 10.0;
        r.plates.push_back({d, 0.0, 0.0, 0.0, 0.0});
        z += d;
    }
    r.plates.push_back({L0 - z, 0.0, 0.0, 0.0, 0.0});

    z = 0.0;
    for (auto& p : r.plates) {
        p.center = z + 0.5 * p.length;
        z += p.length;
        p.xi = ang(rng);
        const double u = g(rng);
        p.tau = kappa * std::sqrt(p.length) * u;
        p.zeta = 0.5 * p.tau * carrier_omega;
    }
    return r;
}

// Differential group delay of a chain from the rotation angle of
// U(w + dw) U(w - dw)^dagger.
inline double chain_dgd(const WaveplateRealization& r, double d_omega = 0.0, double step = 2.0 * units::pi * 1e9) {
    JonesMatrix h = r.jones(d_omega + step) * adjoint(r.jones(d_omega - step));
    double c = 0.5 * (h(0, 0) + h(1, 1)).real();
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c) / step;
}

// Flat gain restoring the target output power.
inline double repeater_gain(double field_power_in, double target_power) {
    if (!(field_power_in > 0.0)) throw invalid_argument("repeater_gain: input power must be > 0");
    if (!(target_power > 0.0)) throw invalid_argument("repeater_gain: target power must be > 0");
    return target_power / field_power_in;
}

// One-sided ASE density per polarization (W/Hz) added by an amplifier of the
// given gain; depends on gain only, not on the output power setting.
inline double ase_density_per_pol(double gain, double nf_db, double frequency_hz) {
    const double nsp = std::max(0.5 * units::db_to_lin(nf_db) * gain / std::max(gain - 1.0, 1e-300), 0.0);
    return nsp * units::planck * frequency_hz * std::max(gain - 1.0, 0.0);
}

// SOP correlation between two frequencies separated by delta_omega after a
// fiber section of length delta_l.
inline double pmd_decorrelation(double delta_omega, double tau_p, double delta_l) {
    if (!(delta_l >= 0.0)) throw invalid_argument("pmd_decorrelation: delta_L must be >= 0");
    return 0.5 * std::exp(-0.5 * delta_omega * delta_omega * tau_p * tau_p * delta_l);
}

}  // namespace nldp
