#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iterator>
#include <random>
#include <ranges>

#include "errors.hpp"

namespace nldp {

using cplx = std::complex<double>;

struct JonesVector {
    cplx ex{};
    cplx ey{};

    double power() const { return std::norm(ex) + std::norm(ey); }
};

// Row-major 2x2 complex matrix.
struct JonesMatrix {
    std::array<cplx, 4> m{cplx{1.0}, cplx{}, cplx{}, cplx{1.0}};

    cplx& operator()(int r, int c) { return m[2 * r + c]; }
    const cplx& operator()(int r, int c) const { return m[2 * r + c]; }

    static JonesMatrix identity() { return {}; }
};

struct StokesVector {
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;

    double reduced_norm() const { return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3); }

    StokesVector normalized() const {
        double n = reduced_norm();
        if (n <= 0.0) return {1.0, 0.0, 0.0, 0.0};
        return {1.0, s1 / n, s2 / n, s3 / n};
    }
};

inline JonesMatrix operator*(const JonesMatrix& a, const JonesMatrix& b) {
    JonesMatrix r;
    r(0, 0) = a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0);
    r(0, 1) = a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1);
    r(1, 0) = a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0);
    r(1, 1) = a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1);
    return r;
}

inline JonesVector operator*(const JonesMatrix& a, const JonesVector& v) {
    return {a(0, 0) * v.ex + a(0, 1) * v.ey, a(1, 0) * v.ex + a(1, 1) * v.ey};
}

inline JonesMatrix adjoint(const JonesMatrix& a) {
    JonesMatrix r;
    r(0, 0) = std::conj(a(0, 0));
    r(0, 1) = std::conj(a(1, 0));
    r(1, 0) = std::conj(a(0, 1));
    r(1, 1) = std::conj(a(1, 1));
    return r;
}

inline cplx det(const JonesMatrix& a) { return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0); }

// Frobenius norm of M M^dagger - I.
inline double unitarity_error(const JonesMatrix& a) {
    JonesMatrix p = a * adjoint(a);
    p(0, 0) -= 1.0;
    p(1, 1) -= 1.0;
    double s = 0.0;
    for (const auto& z : p.m) s += std::norm(z);
    return std::sqrt(s);
}

// Retarder with half-retardation zeta placed after an axis rotation by xi:
// diag(e^{j zeta}, e^{-j zeta}) * [[cos xi, sin xi], [-sin xi, cos xi]].
inline JonesMatrix waveplate_matrix(double xi, double zeta) {
    if (!std::isfinite(xi) || !std::isfinite(zeta))
        throw invalid_argument("waveplate_matrix: non-finite angle");
    const double c = std::cos(xi), s = std::sin(xi);
    const cplx ep = std::polar(1.0, zeta), em = std::conj(ep);
    JonesMatrix r;
    r(0, 0) = ep * c;
    r(0, 1) = ep * s;
    r(1, 0) = -em * s;
    r(1, 1) = em * c;
    return r;
}

inline StokesVector jones_to_stokes(const JonesVector& v) {
    const double px = std::norm(v.ex), py = std::norm(v.ey);
    const cplx c = v.ex * std::conj(v.ey);
    return {px + py, px - py, 2.0 * c.real(), 2.0 * c.imag()};
}

// |<(s1,s2,s3)>| / <s0> over a sample set.
template <std::ranges::input_range R>
    requires std::same_as<std::ranges::range_value_t<R>, StokesVector>
double dop(const R& samples) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t n = 0;
    for (const StokesVector& s : samples) {
        s0 += s.s0;
        s1 += s.s1;
        s2 += s.s2;
        s3 += s.s3;
        ++n;
    }
    if (n == 0) throw invalid_argument("dop: empty sample set");
    if (!(s0 > 0.0)) throw invalid_argument("dop: non-positive total power");
    return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3) / s0;
}

// Uniform draw on SU(2) from a normalized 4D Gaussian (unit quaternion).
template <class Rng>
JonesMatrix haar_random_rotation(Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    double a, b, c, d, n;
    do {
        a = g(rng);
        b = g(rng);
        c = g(rng);
        d = g(rng);
        n = std::sqrt(a * a + b * b + c * c + d * d);
    } while (n < 1e-12);
    a /= n;
    b /= n;
    c /= n;
    d /= n;
    JonesMatrix r;
    r(0, 0) = {a, b};
    r(0, 1) = {c, d};
    r(1, 0) = {-c, d};
    r(1, 1) = {a, -b};
    return r;
}

inline JonesMatrix haar_random_rotation(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      0x48414152u};
    std::mt19937_64 rng(seq);
    return haar_random_rotation(rng);
}

}  // namespace nldp
