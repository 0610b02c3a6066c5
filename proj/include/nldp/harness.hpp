#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "analytic.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "link.hpp"
#include "polarimeter.hpp"
#include "polarization.hpp"
#include "ssfm.hpp"

namespace nldp {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LinearFit fit_linear(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) throw invalid_argument("fit_linear: need at least two points");
    const double n = static_cast<double>(pts.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (!(sxx > 0.0)) throw degenerate_fit("fit_linear: all x values identical");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Runs f(i) for i in [0, n) on up to hardware_concurrency threads.
inline void parallel_for(int n, const std::function<void(int)>& f) {
    const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i; (i = next++) < n;) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace detail

// Receive-side quantities of one path at one tap.
struct PathSamples {
    std::vector<double> speeds;
    double variance = 0.0;
};

struct TapSamples {
    int circulations = 0;
    int spans = 0;
    PathSamples probe, reference, boost;
    double receive_power = 0.0;     // W, probe path after the optical filter
    double reference_power = 0.0;   // W
    double ase_density = 0.0;       // W/Hz per polarization, receiver ASE model
    double nli_density = 0.0;       // W/Hz per polarization, measured in the gap
};

// Lightweight description of the desk scenario geometry.
struct DeskGeometry {
    CombGrid grid;
    long probe_index = 0;
    std::size_t samples = 0;
    double duration = 0.0;
};

inline DeskGeometry desk_geometry(const ScenarioConfig& c) {
    DeskGeometry g;
    g.grid.pitch = c.pitch;
    g.grid.center_frequency = c.link.center_frequency;
    const long nb = std::lround(c.link.omega_max / c.pitch);
    g.grid.n_min = -nb;
    g.grid.n_max = nb;
    const double off = units::hz_to_rad_s(c.probe_offset) / c.pitch;
    g.probe_index = std::lround(off);
    if (std::abs(off - static_cast<double>(g.probe_index)) > 1e-6)
        throw config_error("probe offset is not on the comb grid");
    g.duration = units::two_pi / c.pitch;
    g.samples = c.samples ? c.samples : default_sample_count(g.grid);
    return g;
}

// Receiver ASE density per polarization after `spans` spans under the
// constant-gain model, scaled by ase_scale_db.
inline double receiver_ase_density(const ScenarioConfig& c, int spans) {
    const double gain = std::exp(c.fiber.alpha * c.link.span_length);
    return units::db_to_lin(c.ase_scale_db) * spans *
           ase_density_per_pol(gain, c.link.nf_db, c.link.center_frequency + c.probe_offset);
}

namespace detail {

inline PathSamples detect_path(const ComplexEnvelope& env, const ScenarioConfig& c, double rho, std::uint64_t seed,
                               std::size_t lag) {
    PathSamples p;
    for (int d = 0; d < c.noise_draws; ++d) {
        const StokesTrace t = detect_full_rate(env, c.polarimeter, mix_seed(seed, static_cast<std::uint64_t>(d)), rho);
        const auto v = sop_speed_series_circular(t, lag);
        p.speeds.insert(p.speeds.end(), v.begin(), v.end());
    }
    HistogramBuilder b(c.histogram_bin_width);
    b.add_all(p.speeds);
    p.variance = b.result().variance;
    return p;
}

// In-gap noise density per polarization beside the probe, inside the optical
// filter but away from the NLDP sidebands.
inline double in_gap_noise_density(const ComplexEnvelope& env, const ScenarioConfig& c, double probe_omega) {
    std::vector<cplx> fx, fy;
    envelope_spectrum(env, fx, fy);
    const double half = units::pi * c.polarimeter.optical_filter_fwhm;
    const double excl = units::hz_to_rad_s(c.nli_exclusion);
    double s = 0.0;
    int cnt = 0;
    for (std::size_t k = 0; k < fx.size(); ++k) {
        const double w = env.bin_omega(k);
        const double d = std::abs(w - probe_omega);
        if (std::abs(w) > half || d < excl) continue;
        s += std::norm(fx[k]) + std::norm(fy[k]);
        ++cnt;
    }
    if (cnt == 0) return 0.0;
    const double bin_hz = 1.0 / env.duration();
    return 0.5 * s / cnt / bin_hz;
}

}  // namespace detail

// One ensemble member: launch, propagate to the largest requested tap and
// detect probe, matched reference and noise-boosted reference at each tap.
inline std::vector<TapSamples> simulate_member(const ScenarioConfig& c, int member, double power_offset_db,
                                               const std::vector<int>& taps) {
    const DeskGeometry g = desk_geometry(c);
    const std::uint64_t ms = detail::mix_seed(c.seed, static_cast<std::uint64_t>(member));
    const double scale = units::db_to_lin(power_offset_db);

    const CombSpectrum loading = make_loading(c.link.p_rep * scale, g.grid, c.link.center_frequency + c.probe_offset,
                                              c.link.gap_width, detail::mix_seed(ms, 1));
    const JonesMatrix sop_rot = haar_random_rotation(detail::mix_seed(ms, 2));
    const JonesVector sop = sop_rot * JonesVector{1.0, 0.0};
    const CombSpectrum probe = make_probe(c.link.probe_power * scale, c.link.center_frequency + c.probe_offset, sop,
                                          loading);
    const ComplexEnvelope launch = comb_to_time(loading + probe, g.duration, g.samples);

    std::vector<WaveplateRealization> spans;
    const double carrier = units::hz_to_rad_s(c.link.center_frequency);
    for (int s = 0; s < c.link.spans_per_circulation; ++s)
        spans.push_back(realize_span(c.fiber, c.link.span_length, detail::mix_seed(ms, 100 + s), carrier));

    LinkConfig lk = c.link;
    lk.seed = detail::mix_seed(ms, 3);
    const int max_circ = *std::max_element(taps.begin(), taps.end());
    lk.n_spans = max_circ * c.link.spans_per_circulation;

    const std::size_t lag = decimation_factor(c.polarimeter.sample_period, launch.sample_period);
    const double probe_omega = g.grid.omega(g.probe_index);
    std::vector<TapSamples> out;
    auto tap = [&](int s, const ComplexEnvelope& env) {
        if (s % c.link.spans_per_circulation != 0) return;
        const int circ = s / c.link.spans_per_circulation;
        if (std::find(taps.begin(), taps.end(), circ) == taps.end()) return;
        TapSamples t;
        t.circulations = circ;
        t.spans = s;
        const ComplexEnvelope filtered = optical_filter(env, c.polarimeter.optical_filter_fwhm);
        t.receive_power = filtered.mean_power();
        t.ase_density = std::isnan(c.receiver_osnr_db)
                            ? receiver_ase_density(c, s)
                            : ase_density_for_osnr(t.receive_power, c.receiver_osnr_db,
                                                   c.polarimeter.reference_bandwidth);
        t.nli_density = detail::in_gap_noise_density(env, c, probe_omega);
        const std::uint64_t ns = detail::mix_seed(ms, 1000 + static_cast<std::uint64_t>(circ));
        t.probe = detail::detect_path(env, c, t.ase_density, detail::mix_seed(ns, 1), lag);

        // Back-to-back reference: the received probe tone alone, at the probe
        // path's receive power, with the probe path's total noise density.
        const CombSpectrum rx = time_to_comb(env, g.grid);
        const JonesVector a = rx.tone(g.probe_index);
        const double pa = a.power();
        if (!(pa > 0.0)) throw numerical_error("probe tone vanished at the receiver");
        const double k = std::sqrt(t.receive_power / pa);
        CombGrid pg = g.grid;
        CombSpectrum ref(pg);
        ref.x(g.probe_index) = k * a.ex;
        ref.y(g.probe_index) = k * a.ey;
        const ComplexEnvelope ref_env = comb_to_time(ref, g.duration, g.samples);
        t.reference_power = ref_env.mean_power();
        const double rho_ref = t.ase_density + t.nli_density;
        t.reference = detail::detect_path(ref_env, c, rho_ref, detail::mix_seed(ns, 2), lag);
        t.boost = detail::detect_path(ref_env, c, rho_ref * units::db_to_lin(c.noise_boost_db), detail::mix_seed(ns, 3),
                                      lag);
        out.push_back(std::move(t));
    };
    try {
        propagate_link(launch, lk, spans, c.fiber, c.propagation, tap);
    } catch (const numerical_error& e) {
        throw numerical_error("member " + std::to_string(member) + ": " + e.what());
    }
    return out;
}

struct SweepPoint {
    double x = 0.0;  // km for distance sweeps, dBm (repeater power) for power sweeps
    int spans = 0;
    double sigma2_probe = 0.0;
    double sigma2_reference = 0.0;
    double sigma2_boost = 0.0;
    double sigma2_nldp = 0.0;
    double sigma2_nldp_stderr = 0.0;  // spread of per-member differences
    bool below_floor = false;
    double analytic_sop2 = 0.0;       // closed-form mean-square SOP speed, (rad/s)^2
    double osnr_probe_db = 0.0;       // ASE plus in-gap noise, 0.1 nm
    double osnr_reference_db = 0.0;
    double receive_power_dbm = 0.0;
    double reference_power_dbm = 0.0;
    std::uint64_t n_samples = 0;
    SopSpeedHistogram hist_probe, hist_reference, hist_boost;
};

struct SweepReport {
    std::string kind;
    std::vector<SweepPoint> points;
    LinearFit fit;
    bool has_fit = false;
    ScenarioConfig config;
};

namespace detail {

inline double analytic_overlay(const ScenarioConfig& c, int spans, double offset_db) {
    LinkConfig lk = c.link;
    lk.n_spans = spans;
    lk.p_rep = c.link.p_rep * units::db_to_lin(offset_db);
    const auto r = sop_speed_prediction(lk, c.fiber, PolarimeterBand{c.polarimeter.electrical_cutoff});
    return r.rms * r.rms;
}

// Ordered reduction of member tap results into one sweep point.
inline SweepPoint reduce_point(const ScenarioConfig& c, const std::vector<const TapSamples*>& members) {
    SweepPoint p;
    HistogramBuilder hp(c.histogram_bin_width, c.polarimeter.sample_period);
    HistogramBuilder hr(c.histogram_bin_width, c.polarimeter.sample_period);
    HistogramBuilder hb(c.histogram_bin_width, c.polarimeter.sample_period);
    std::vector<double> diffs;
    double prx = 0.0, pref = 0.0, ase = 0.0, nli = 0.0;
    for (const TapSamples* t : members) {
        hp.add_all(t->probe.speeds);
        hr.add_all(t->reference.speeds);
        hb.add_all(t->boost.speeds);
        diffs.push_back(t->probe.variance - t->reference.variance);
        prx += t->receive_power;
        pref += t->reference_power;
        ase += t->ase_density;
        nli += t->nli_density;
    }
    const double m = static_cast<double>(members.size());
    p.spans = members.front()->spans;
    p.hist_probe = hp.result();
    p.hist_reference = hr.result();
    p.hist_boost = hb.result();
    p.sigma2_probe = p.hist_probe.variance;
    p.sigma2_reference = p.hist_reference.variance;
    p.sigma2_boost = p.hist_boost.variance;
    const auto sub = variance_subtract(p.hist_probe, p.hist_reference);
    p.sigma2_nldp = sub.value;
    p.below_floor = sub.below_floor;
    if (diffs.size() > 1) {
        const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / m;
        double v = 0.0;
        for (double d : diffs) v += (d - mean) * (d - mean);
        p.sigma2_nldp_stderr = std::sqrt(v / (m - 1.0) / m);
    }
    prx /= m;
    pref /= m;
    ase /= m;
    nli /= m;
    p.receive_power_dbm = units::w_to_dbm(prx);
    p.reference_power_dbm = units::w_to_dbm(pref);
    p.osnr_probe_db = osnr_for_ase_density(prx, ase + nli, c.polarimeter.reference_bandwidth);
    p.osnr_reference_db = osnr_for_ase_density(pref, ase + nli, c.polarimeter.reference_bandwidth);
    p.n_samples = p.hist_probe.n_samples;
    return p;
}

// members x taps, computed in parallel and stored by member index.
inline std::vector<std::vector<TapSamples>> run_members(const ScenarioConfig& c, double offset_db,
                                                        const std::vector<int>& taps) {
    std::vector<std::vector<TapSamples>> all(static_cast<std::size_t>(c.ensemble_size));
    parallel_for(c.ensemble_size, [&](int i) { all[static_cast<std::size_t>(i)] = simulate_member(c, i, offset_db, taps); });
    return all;
}

inline std::vector<const TapSamples*> column(const std::vector<std::vector<TapSamples>>& all, std::size_t k) {
    std::vector<const TapSamples*> v;
    for (const auto& m : all) v.push_back(&m[k]);
    return v;
}

}  // namespace detail

struct ComparativeResult {
    SweepPoint point;
    ScenarioConfig config;
};

// Probe vs matched reference vs noise boost after link.n_spans spans, which
// must be a whole number of circulations.
inline ComparativeResult run_comparative(const ScenarioConfig& c) {
    c.validate();
    if (c.link.n_spans % c.link.spans_per_circulation != 0)
        throw config_error("n_spans must be a multiple of spans_per_circulation");
    const int circ = c.link.n_spans / c.link.spans_per_circulation;
    const auto all = detail::run_members(c, 0.0, {circ});
    ComparativeResult r;
    r.config = c;
    r.point = detail::reduce_point(c, detail::column(all, 0));
    r.point.x = c.link.n_spans * c.link.span_length / 1e3;
    r.point.analytic_sop2 = detail::analytic_overlay(c, c.link.n_spans, 0.0);
    return r;
}

inline SweepReport distance_report(const ScenarioConfig& c, const std::vector<std::vector<TapSamples>>& all,
                                   const std::vector<int>& taps) {
    SweepReport rep;
    rep.kind = "distance";
    rep.config = c;
    for (std::size_t k = 0; k < taps.size(); ++k) {
        SweepPoint p = detail::reduce_point(c, detail::column(all, k));
        p.x = p.spans * c.link.span_length / 1e3;
        p.analytic_sop2 = detail::analytic_overlay(c, p.spans, 0.0);
        rep.points.push_back(std::move(p));
    }
    std::sort(rep.points.begin(), rep.points.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    if (rep.points.size() >= 2) {
        std::vector<std::pair<double, double>> xy;
        for (const auto& p : rep.points) xy.emplace_back(p.x, p.sigma2_nldp);
        rep.fit = fit_linear(xy);
        rep.has_fit = true;
    }
    return rep;
}

inline SweepReport run_distance_sweep(const ScenarioConfig& c) {
    c.validate();
    std::vector<int> taps = c.circulations;
    std::sort(taps.begin(), taps.end());
    taps.erase(std::unique(taps.begin(), taps.end()), taps.end());
    return distance_report(c, detail::run_members(c, 0.0, taps), taps);
}

// Repeater output power sweep after power_sweep_circulations circulations.
// Repeater gain is unchanged, so the receive ASE density stays fixed while
// probe power follows the offset. `zero_offset` may supply an already
// simulated 0 dB point with the same seeds.
inline SweepReport run_power_sweep(const ScenarioConfig& c, const SweepPoint* zero_offset = nullptr) {
    c.validate();
    SweepReport rep;
    rep.kind = "power";
    rep.config = c;
    const int circ = c.power_sweep_circulations;
    for (double off : c.power_offsets_db) {
        SweepPoint p;
        if (off == 0.0 && zero_offset) {
            p = *zero_offset;
        } else {
            const auto all = detail::run_members(c, off, {circ});
            p = detail::reduce_point(c, detail::column(all, 0));
        }
        p.x = units::w_to_dbm(c.link.p_rep) + off;
        p.analytic_sop2 = detail::analytic_overlay(c, circ * c.link.spans_per_circulation, off);
        rep.points.push_back(std::move(p));
    }
    std::sort(rep.points.begin(), rep.points.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    return rep;
}

// Analytic predictions at the configured link.
struct AnalyticReport {
    double sigma2_sym = 0.0;
    SopSpeedPrediction sop;
    double sop_rms_autocorrelation = 0.0;
    double halfwidth_hz = 0.0;
    RolloffTable table;
    ScenarioConfig config;
};

inline AnalyticReport run_analytic(const ScenarioConfig& c) {
    c.validate();
    AnalyticReport r;
    r.config = c;
    const PolarimeterBand band{c.polarimeter.electrical_cutoff};
    r.sigma2_sym = symmetric_phase_variance(c.link, c.fiber);
    r.sop = sop_speed_prediction(c.link, c.fiber, band);
    r.sop_rms_autocorrelation = sop_speed_from_autocorrelation(c.link, c.fiber, band, c.polarimeter.sample_period);
    r.halfwidth_hz = perturbation_halfwidth(c.link, c.fiber);
    r.table = rolloff_table(c.fiber, c.link, band);
    return r;
}

// ---- reports ----

inline nlohmann::ordered_json config_json(const ScenarioConfig& c) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : config_entries(c)) j[k] = v;
    return j;
}

inline nlohmann::ordered_json point_json(const SweepPoint& p) {
    nlohmann::ordered_json j;
    j["x"] = p.x;
    j["spans"] = p.spans;
    j["sigma2_probe"] = p.sigma2_probe;
    j["sigma2_reference"] = p.sigma2_reference;
    j["sigma2_boost"] = p.sigma2_boost;
    j["sigma2_nldp"] = p.sigma2_nldp;
    j["sigma2_nldp_stderr"] = p.sigma2_nldp_stderr;
    j["below_floor"] = p.below_floor;
    j["analytic_sop2"] = p.analytic_sop2;
    j["osnr_probe_db"] = p.osnr_probe_db;
    j["osnr_reference_db"] = p.osnr_reference_db;
    j["receive_power_dbm"] = p.receive_power_dbm;
    j["reference_power_dbm"] = p.reference_power_dbm;
    j["n_samples"] = p.n_samples;
    return j;
}

inline nlohmann::ordered_json report_json(const SweepReport& r) {
    nlohmann::ordered_json j;
    j["kind"] = r.kind;
    j["config"] = config_json(r.config);
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : r.points) j["points"].push_back(point_json(p));
    if (r.has_fit) j["fit"] = {{"slope", r.fit.slope}, {"intercept", r.fit.intercept}, {"r2", r.fit.r2}};
    return j;
}

inline nlohmann::ordered_json report_json(const ComparativeResult& r) {
    nlohmann::ordered_json j;
    j["kind"] = "comparative";
    j["config"] = config_json(r.config);
    j["point"] = point_json(r.point);
    return j;
}

inline nlohmann::ordered_json report_json(const AnalyticReport& r) {
    nlohmann::ordered_json j;
    j["kind"] = "analytic";
    j["config"] = config_json(r.config);
    j["sigma2_symmetric_rad2"] = r.sigma2_sym;
    j["sop_speed_rms_rad_s"] = r.sop.rms;
    j["sop_speed_rms_as_printed"] = r.sop.rms_as_printed;
    j["sop_speed_rms_autocorrelation_rad_s"] = r.sop_rms_autocorrelation;
    j["perturbation_halfwidth_hz"] = r.halfwidth_hz;
    j["rolloff_thz"] = {r.table.thz[0], r.table.thz[1], r.table.thz[2], r.table.thz[3]};
    j["rolloff_row2_as_printed"] = r.table.row2_as_printed;
    return j;
}

inline void write_csv(std::ostream& os, const SweepReport& r) {
    os << "# kind=" << r.kind << "\n";
    for (const auto& [k, v] : config_entries(r.config)) os << "# " << k << "=" << v << "\n";
    if (r.has_fit) {
        char b[160];
        std::snprintf(b, sizeof b, "# fit slope=%.10g intercept=%.10g r2=%.10g\n", r.fit.slope, r.fit.intercept, r.fit.r2);
        os << b;
    }
    os << "x,spans,sigma2_probe,sigma2_reference,sigma2_boost,sigma2_nldp,sigma2_nldp_stderr,below_floor,"
          "analytic_sop2,osnr_probe_db,osnr_reference_db,n_samples\n";
    for (const auto& p : r.points) {
        char b[400];
        std::snprintf(b, sizeof b, "%.10g,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%d,%.10g,%.6g,%.6g,%llu\n", p.x, p.spans,
                      p.sigma2_probe, p.sigma2_reference, p.sigma2_boost, p.sigma2_nldp, p.sigma2_nldp_stderr,
                      p.below_floor ? 1 : 0, p.analytic_sop2, p.osnr_probe_db, p.osnr_reference_db,
                      static_cast<unsigned long long>(p.n_samples));
        os << b;
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& s) {
    std::ofstream os(path);
    if (!os) throw invalid_argument("cannot write " + path.string());
    os << s;
}

}  // namespace nldp
