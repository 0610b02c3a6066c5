#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <bit>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "field.hpp"
#include "link.hpp"
#include "polarization.hpp"
#include "units.hpp"

namespace nldp {

struct PolarimeterSettings {
    double sample_period = 10e-9;                        // s
    int adc_bits = 14;
    double electrical_cutoff = units::two_pi * 30e6;     // rad/s, first-order 3 dB point
    double optical_filter_fwhm = 27e9;                   // Hz
    double osnr_db = std::numeric_limits<double>::infinity();  // 0.1 nm reference bandwidth
    double reference_bandwidth = 12.5e9;                 // Hz

    void validate() const {
        if (!(sample_period > 0.0)) throw invalid_argument("polarimeter: sample period must be > 0");
        if (adc_bits < 8 || adc_bits > 24) throw invalid_argument("polarimeter: adc_bits must be in [8, 24]");
        if (!(electrical_cutoff > 0.0)) throw invalid_argument("polarimeter: electrical cutoff must be > 0");
        if (!(optical_filter_fwhm > 0.0)) throw invalid_argument("polarimeter: optical filter width must be > 0");
    }
};

struct StokesTrace {
    double sample_period = 0.0;
    std::vector<StokesVector> samples;
    std::uint64_t seed = 0;
    std::string scenario;
    bool clipped = false;  // s0 was clamped at zero somewhere
};

// One-sided ASE density per polarization giving `osnr_db` for signal power p.
inline double ase_density_for_osnr(double p, double osnr_db, double reference_bandwidth = 12.5e9) {
    if (std::isinf(osnr_db)) return 0.0;
    return p / (2.0 * units::db_to_lin(osnr_db) * reference_bandwidth);
}

inline double osnr_for_ase_density(double p, double rho, double reference_bandwidth = 12.5e9) {
    if (rho <= 0.0) return std::numeric_limits<double>::infinity();
    return units::lin_to_db(p / (2.0 * rho * reference_bandwidth));
}

// Brick-wall optical band-pass around the carrier.
inline ComplexEnvelope optical_filter(const ComplexEnvelope& env, double fwhm_hz) {
    std::vector<cplx> fx, fy;
    envelope_spectrum(env, fx, fy);
    const double half = units::pi * fwhm_hz;
    for (std::size_t k = 0; k < fx.size(); ++k) {
        if (std::abs(env.bin_omega(k)) > half) fx[k] = fy[k] = 0.0;
    }
    ComplexEnvelope out = env;
    out.ex = std::move(fx);
    out.ey = std::move(fy);
    fft_forward(out.ex);
    fft_forward(out.ey);
    return out;
}

namespace detail {

// First-order low-pass applied circularly to a real sequence.
inline void lowpass_first_order(std::vector<double>& v, double dt, double cutoff) {
    const std::size_t n = v.size();
    std::vector<cplx> c(v.begin(), v.end());
    fft_backward(c);
    const double T = dt * static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        long kk = static_cast<long>(k);
        if (kk > static_cast<long>(n / 2)) kk -= static_cast<long>(n);
        const double w = units::two_pi * static_cast<double>(kk) / T;
        c[k] /= cplx(1.0, w / cutoff) * static_cast<double>(n);
    }
    fft_forward(c);
    for (std::size_t k = 0; k < n; ++k) v[k] = c[k].real();
}

inline double quantize(double v, double full_scale, int bits) {
    const double q = 2.0 * full_scale / std::ldexp(1.0, bits);
    const double lim = full_scale - q;
    return std::clamp(q * std::round(v / q), -lim - q, lim);
}

}  // namespace detail

// Full-rate polarimeter front end. The optical filter selects the probe,
// signal-ASE beat noise is added to each Stokes current for a per-polarization
// ASE density rho (derived from osnr_db unless given), currents pass the
// first-order electrical filter and the ADC, and samples are normalized last.
inline StokesTrace detect_full_rate(const ComplexEnvelope& env, const PolarimeterSettings& settings,
                                    std::uint64_t seed, double rho = -1.0) {
    settings.validate();
    const std::size_t n = env.size();
    if (env.duration() < 2.0 * settings.sample_period)
        throw invalid_argument("detect: envelope shorter than two sample periods");
    const ComplexEnvelope f = optical_filter(env, settings.optical_filter_fwhm);
    const double p_sig = f.mean_power();
    if (rho < 0.0) rho = ase_density_for_osnr(p_sig, settings.osnr_db, settings.reference_bandwidth);

    // White complex ASE with E|n|^2 = rho / dt per polarization and sample,
    // confined to the optical filter passband.
    ComplexEnvelope noise;
    noise.sample_period = env.sample_period;
    noise.center_frequency = env.center_frequency;
    noise.ex.assign(n, {});
    noise.ey.assign(n, {});
    if (rho > 0.0) {
        const double sd = std::sqrt(0.5 * rho / env.sample_period);
        auto rng = detail::make_rng(seed, 0x44455443u);
        std::normal_distribution<double> g(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            noise.ex[i] = {sd * g(rng), sd * g(rng)};
            noise.ey[i] = {sd * g(rng), sd * g(rng)};
        }
        noise = optical_filter(noise, settings.optical_filter_fwhm);
    }

    std::array<std::vector<double>, 4> s;
    for (auto& v : s) v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx ex = f.ex[i], ey = f.ey[i];
        const StokesVector st = jones_to_stokes({ex, ey});
        // Signal-ASE beat terms 2 Re(E^dagger sigma_i n); ASE-ASE omitted.
        const cplx ax = std::conj(ex) * noise.ex[i], ay = std::conj(ey) * noise.ey[i];
        const cplx bxy = std::conj(ex) * noise.ey[i], byx = std::conj(ey) * noise.ex[i];
        s[0][i] = st.s0 + 2.0 * (ax + ay).real();
        s[1][i] = st.s1 + 2.0 * (ax - ay).real();
        s[2][i] = st.s2 + 2.0 * (bxy + byx).real();
        s[3][i] = st.s3 + 2.0 * (byx - bxy).imag();
    }
    for (auto& v : s) detail::lowpass_first_order(v, env.sample_period, settings.electrical_cutoff);

    double mean_s0 = 0.0;
    for (double v : s[0]) mean_s0 += v;
    mean_s0 /= static_cast<double>(n);
    const double fs = 2.0 * std::max(mean_s0, std::numeric_limits<double>::min());

    StokesTrace tr;
    tr.sample_period = env.sample_period;
    tr.seed = seed;
    tr.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        StokesVector q{detail::quantize(s[0][i], fs, settings.adc_bits), detail::quantize(s[1][i], fs, settings.adc_bits),
                       detail::quantize(s[2][i], fs, settings.adc_bits), detail::quantize(s[3][i], fs, settings.adc_bits)};
        if (q.s0 <= 0.0) {
            q.s0 = std::numeric_limits<double>::min();
            tr.clipped = true;
        }
        tr.samples[i] = q.normalized();
    }
    return tr;
}

// Keep every `factor`-th sample starting at `phase`.
inline StokesTrace decimate(const StokesTrace& t, std::size_t factor, std::size_t phase = 0) {
    if (factor == 0) throw invalid_argument("decimate: zero factor");
    StokesTrace r = t;
    r.samples.clear();
    r.sample_period = t.sample_period * static_cast<double>(factor);
    for (std::size_t i = phase; i < t.samples.size(); i += factor) r.samples.push_back(t.samples[i]);
    return r;
}

inline std::size_t decimation_factor(double sample_period, double dt) {
    const auto f = static_cast<std::size_t>(std::lround(sample_period / dt));
    if (f < 1) throw invalid_argument("polarimeter sample period shorter than the envelope step");
    return f;
}

// Polarimeter trace at the configured sample period.
inline StokesTrace detect(const ComplexEnvelope& env, const PolarimeterSettings& settings, std::uint64_t seed,
                          double rho = -1.0) {
    StokesTrace full = detect_full_rate(env, settings, seed, rho);
    return decimate(full, decimation_factor(settings.sample_period, env.sample_period));
}

// |S(t + tau_s) - S(t)| / tau_s over consecutive normalized samples.
inline std::vector<double> sop_speed_series(const StokesTrace& trace) {
    if (trace.samples.size() < 2) throw invalid_argument("sop_speed_series: need at least two samples");
    std::vector<double> v(trace.samples.size() - 1);
    for (std::size_t i = 0; i + 1 < trace.samples.size(); ++i) {
        const auto& a = trace.samples[i];
        const auto& b = trace.samples[i + 1];
        const double d1 = b.s1 - a.s1, d2 = b.s2 - a.s2, d3 = b.s3 - a.s3;
        v[i] = std::sqrt(d1 * d1 + d2 * d2 + d3 * d3) / trace.sample_period;
    }
    return v;
}

// Speeds at a lag of `lag` samples for every start sample of a periodic
// full-rate trace; equivalent to pooling all decimation phases.
inline std::vector<double> sop_speed_series_circular(const StokesTrace& full, std::size_t lag) {
    const std::size_t n = full.samples.size();
    if (n < 2 || lag == 0 || lag >= n) throw invalid_argument("sop_speed_series_circular: bad lag");
    const double tau = full.sample_period * static_cast<double>(lag);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = full.samples[i];
        const auto& b = full.samples[(i + lag) % n];
        const double d1 = b.s1 - a.s1, d2 = b.s2 - a.s2, d3 = b.s3 - a.s3;
        v[i] = std::sqrt(d1 * d1 + d2 * d2 + d3 * d3) / tau;
    }
    return v;
}

struct SopSpeedHistogram {
    static constexpr std::size_t bin_count = 1024;
    double bin_width = 48.82e3;  // rad/s
    std::vector<std::uint64_t> bins = std::vector<std::uint64_t>(bin_count, 0);
    std::uint64_t n_samples = 0;
    std::uint64_t overflow = 0;
    double mean = 0.0;
    double variance = 0.0;
    double sample_period = 0.0;  // s, of the underlying trace (0 if unknown)
};

// Streaming accumulation; moments come from the raw values.
class HistogramBuilder {
public:
    explicit HistogramBuilder(double bin_width = 48.82e3, double sample_period = 0.0) {
        if (!(bin_width > 0.0)) throw invalid_argument("histogram: bin width must be > 0");
        h_.bin_width = bin_width;
        h_.sample_period = sample_period;
    }

    void add(double v) {
        const double k = std::floor(v / h_.bin_width);
        std::size_t idx;
        if (!(k < static_cast<double>(SopSpeedHistogram::bin_count))) {
            idx = SopSpeedHistogram::bin_count - 1;
            ++h_.overflow;
        } else {
            idx = k < 0.0 ? 0 : static_cast<std::size_t>(k);
        }
        ++h_.bins[idx];
        ++h_.n_samples;
        const double d = v - mean_;
        mean_ += d / static_cast<double>(h_.n_samples);
        m2_ += d * (v - mean_);
    }

    template <class R>
    void add_all(const R& values) {
        for (double v : values) add(v);
    }

    SopSpeedHistogram result() const {
        SopSpeedHistogram h = h_;
        h.mean = mean_;
        h.variance = h.n_samples > 1 ? m2_ / static_cast<double>(h.n_samples - 1) : 0.0;
        return h;
    }

private:
    SopSpeedHistogram h_;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline SopSpeedHistogram histogram(const std::vector<double>& series, double bin_width = 48.82e3,
                                   double sample_period = 0.0) {
    if (series.empty()) throw invalid_argument("histogram: empty series");
    HistogramBuilder b(bin_width, sample_period);
    b.add_all(series);
    return b.result();
}

struct SubtractedVariance {
    double value = 0.0;
    bool below_floor = false;
};

inline SubtractedVariance variance_subtract(double probe_var, double reference_var) {
    const double d = probe_var - reference_var;
    return {d, d < 0.0};
}

inline SubtractedVariance variance_subtract(const SopSpeedHistogram& probe, const SopSpeedHistogram& reference) {
    if (probe.bin_width != reference.bin_width)
        throw invalid_argument("variance_subtract: bin width mismatch");
    if (probe.sample_period != reference.sample_period)
        throw invalid_argument("variance_subtract: sample period mismatch");
    return variance_subtract(probe.variance, reference.variance);
}

// ---- file formats ----

namespace detail {
template <class T>
void put_le(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host expected");
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw invalid_argument("trace file truncated");
    return v;
}
}  // namespace detail

inline constexpr std::uint32_t stokes_trace_version = 1;

inline void write_stokes_trace(const std::string& path, const StokesTrace& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw invalid_argument("cannot open " + path);
    os.write("SOPT", 4);
    detail::put_le<std::uint32_t>(os, stokes_trace_version);
    detail::put_le<double>(os, t.sample_period);
    detail::put_le<std::uint64_t>(os, t.samples.size());
    for (const auto& s : t.samples) {
        detail::put_le(os, s.s0);
        detail::put_le(os, s.s1);
        detail::put_le(os, s.s2);
        detail::put_le(os, s.s3);
    }
    if (!os) throw invalid_argument("write failed: " + path);
}

inline StokesTrace read_stokes_trace(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw invalid_argument("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SOPT", 4) != 0) throw invalid_argument("not a Stokes trace file: " + path);
    const auto ver = detail::get_le<std::uint32_t>(is);
    if (ver != stokes_trace_version) throw invalid_argument("unsupported trace version " + std::to_string(ver));
    StokesTrace t;
    t.sample_period = detail::get_le<double>(is);
    const auto count = detail::get_le<std::uint64_t>(is);
    t.samples.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        StokesVector s;
        s.s0 = detail::get_le<double>(is);
        s.s1 = detail::get_le<double>(is);
        s.s2 = detail::get_le<double>(is);
        s.s3 = detail::get_le<double>(is);
        t.samples.push_back(s);
    }
    return t;
}

inline void write_histogram_csv(std::ostream& os, const SopSpeedHistogram& h) {
    os << "bin_index,lower_edge_rad_s,count\n";
    char buf[96];
    for (std::size_t i = 0; i < h.bins.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%llu\n", i, static_cast<double>(i) * h.bin_width,
                      static_cast<unsigned long long>(h.bins[i]));
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "# mean=%.17g\n", h.mean);
    os << buf;
    std::snprintf(buf, sizeof buf, "# variance=%.17g\n", h.variance);
    os << buf;
    os << "# overflow=" << h.overflow << "\n";
}

inline void write_histogram_csv(const std::string& path, const SopSpeedHistogram& h) {
    std::ofstream os(path);
    if (!os) throw invalid_argument("cannot open " + path);
    write_histogram_csv(os, h);
}

inline SopSpeedHistogram read_histogram_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw invalid_argument("cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != "bin_index,lower_edge_rad_s,count")
        throw invalid_argument("bad histogram header in " + path);
    SopSpeedHistogram h;
    std::vector<double> edges;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(1, eq - 1);
            const std::string val = line.substr(eq + 1);
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(' '));
                return s;
            };
            const std::string k = trim(key);
            if (k == "mean") h.mean = std::stod(val);
            else if (k == "variance") h.variance = std::stod(val);
            else if (k == "overflow") h.overflow = std::stoull(val);
            continue;
        }
        std::size_t idx;
        double edge;
        unsigned long long cnt;
        if (std::sscanf(line.c_str(), "%zu,%lf,%llu", &idx, &edge, &cnt) != 3 || idx != row ||
            row >= SopSpeedHistogram::bin_count)
            throw invalid_argument("bad histogram row in " + path + ": " + line);
        h.bins[idx] = cnt;
        h.n_samples += cnt;
        edges.push_back(edge);
        ++row;
    }
    if (row != SopSpeedHistogram::bin_count) throw invalid_argument("histogram " + path + " needs 1024 rows");
    h.bin_width = edges[1] - edges[0];
    return h;
}

}  // namespace nldp
