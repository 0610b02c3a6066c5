#pragma once

#include <cmath>
#include <numbers>

namespace nldp::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double planck = 6.62607015e-34;  // J s

inline double db_per_km_to_per_m(double db_per_km) {
    return db_per_km / (10.0 * std::log10(std::numbers::e)) / 1e3;
}
inline double per_m_to_db_per_km(double per_m) {
    return per_m * 1e3 * 10.0 * std::log10(std::numbers::e);
}

inline double ps2_per_km_to_s2_per_m(double v) { return v * 1e-27; }
inline double per_w_km_to_per_w_m(double v) { return v * 1e-3; }
inline double ps_per_sqrt_km_to_s_per_sqrt_m(double v) { return v * 1e-12 / std::sqrt(1e3); }

inline double dbm_to_w(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double w_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }
inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double x) { return 10.0 * std::log10(x); }

inline double hz_to_rad_s(double hz) { return two_pi * hz; }
inline double rad_s_to_hz(double w) { return w / two_pi; }

}  // namespace nldp::units
