#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <nldp/nldp.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace nldp;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct Options {
    std::string config;
    std::string input_a, input_b;
    std::string out;
    std::string format = "json";
    long long seed = -1;
    int ensemble = 0;
    double bin_width_krad_s = 48.82;
};

ScenarioConfig load(const Options& o) {
    ScenarioConfig c = load_config(o.config);
    if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
    if (o.ensemble > 0) c.ensemble_size = o.ensemble;
    if (!o.out.empty()) c.output_dir = o.out;
    c.validate();
    return c;
}

fs::path prepare_dir(const ScenarioConfig& c) {
    fs::path d(c.output_dir);
    fs::create_directories(d);
    return d;
}

void emit(const fs::path& dir, const std::string& stem, const std::string& format, const nlohmann::ordered_json& j,
          const std::string& csv) {
    if (format == "json") {
        write_text(dir / (stem + ".json"), j.dump(2) + "\n");
        std::cout << j.dump(2) << "\n";
    } else {
        write_text(dir / (stem + ".csv"), csv);
        std::cout << csv;
    }
}

std::string point_csv(const ComparativeResult& r) {
    SweepReport s;
    s.kind = "comparative";
    s.config = r.config;
    s.points.push_back(r.point);
    std::ostringstream os;
    write_csv(os, s);
    return os.str();
}

std::string analytic_csv(const AnalyticReport& r) {
    std::ostringstream os;
    for (const auto& [k, v] : config_entries(r.config)) os << "# " << k << "=" << v << "\n";
    os << "quantity,value\n";
    char b[128];
    auto row = [&](const char* name, double v) {
        std::snprintf(b, sizeof b, "%s,%.10g\n", name, v);
        os << b;
    };
    row("sigma2_symmetric_rad2", r.sigma2_sym);
    row("sop_speed_rms_rad_s", r.sop.rms);
    row("sop_speed_rms_as_printed", r.sop.rms_as_printed);
    row("sop_speed_rms_autocorrelation_rad_s", r.sop_rms_autocorrelation);
    row("perturbation_halfwidth_hz", r.halfwidth_hz);
    for (int i = 0; i < 4; ++i) {
        const std::string n = "rolloff_row" + std::to_string(i + 1) + "_thz";
        row(n.c_str(), r.table.thz[static_cast<std::size_t>(i)]);
    }
    row("rolloff_row2_as_printed", r.table.row2_as_printed);
    return os.str();
}

int run_comparative_cmd(const ScenarioConfig& c, const std::string& format) {
    const auto r = run_comparative(c);
    const fs::path d = prepare_dir(c);
    write_histogram_csv((d / "probe_hist.csv").string(), r.point.hist_probe);
    write_histogram_csv((d / "reference_hist.csv").string(), r.point.hist_reference);
    write_histogram_csv((d / "boost_hist.csv").string(), r.point.hist_boost);
    emit(d, "comparative", format, report_json(r), point_csv(r));
    return 0;
}

int run_sweep_cmd(const SweepReport& r, const ScenarioConfig& c, const std::string& format) {
    const fs::path d = prepare_dir(c);
    std::ostringstream os;
    write_csv(os, r);
    emit(d, r.kind + "_sweep", format, report_json(r), os.str());
    return 0;
}

int run_analytic_cmd(const ScenarioConfig& c, const std::string& format) {
    const auto r = run_analytic(c);
    emit(prepare_dir(c), "analytic", format, report_json(r), analytic_csv(r));
    return 0;
}

int run_histogram_cmd(const Options& o) {
    const StokesTrace t = read_stokes_trace(o.input_a);
    const auto h = histogram(sop_speed_series(t), o.bin_width_krad_s * 1e3, t.sample_period);
    if (o.out.empty()) {
        write_histogram_csv(std::cout, h);
    } else {
        write_histogram_csv(o.out, h);
    }
    return 0;
}

int run_compare_cmd(const Options& o) {
    const auto a = read_histogram_csv(o.input_a);
    const auto b = read_histogram_csv(o.input_b);
    if (a.bin_width != b.bin_width) throw invalid_argument("compare: bin width mismatch");
    const auto d = variance_subtract(a.variance, b.variance);
    std::ostringstream os;
    if (o.format == "json") {
        nlohmann::ordered_json j;
        j["variance_a"] = a.variance;
        j["variance_b"] = b.variance;
        j["difference"] = d.value;
        j["below_floor"] = d.below_floor;
        os << j.dump(2) << "\n";
    } else {
        char buf[200];
        std::snprintf(buf, sizeof buf, "variance_a,variance_b,difference,below_floor\n%.10g,%.10g,%.10g,%d\n",
                      a.variance, b.variance, d.value, d.below_floor ? 1 : 0);
        os << buf;
    }
    if (o.out.empty()) {
        std::cout << os.str();
    } else {
        write_text(o.out, os.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear depolarization simulator and analysis tool"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--seed", o.seed, "Override the scenario seed");
    app.add_option("--out", o.out, "Output directory (or file for histogram/compare)");
    app.add_option("--ensemble", o.ensemble, "Override the ensemble size")->check(CLI::PositiveNumber);
    app.add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));

    auto* sim = app.add_subcommand("simulate", "Run the scenario selected by the config's mode");
    sim->add_option("config", o.config, "Scenario config file")->required();
    auto* an = app.add_subcommand("analytic", "Evaluate the closed-form predictions");
    an->add_option("config", o.config, "Scenario config file")->required();
    auto* sd = app.add_subcommand("sweep-distance", "Monte-Carlo distance sweep");
    sd->add_option("config", o.config, "Scenario config file")->required();
    auto* sp = app.add_subcommand("sweep-power", "Monte-Carlo repeater power sweep");
    sp->add_option("config", o.config, "Scenario config file")->required();
    auto* hi = app.add_subcommand("histogram", "SOP speed histogram of a Stokes trace file");
    hi->add_option("trace", o.input_a, "SOPT trace file")->required();
    hi->add_option("--bin-width-krad-s", o.bin_width_krad_s, "Histogram bin width");
    auto* cmp = app.add_subcommand("compare", "Variance difference of two histogram files");
    cmp->add_option("hist_a", o.input_a, "Probe histogram CSV")->required();
    cmp->add_option("hist_b", o.input_b, "Reference histogram CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try {
        if (*hi) return run_histogram_cmd(o);
        if (*cmp) return run_compare_cmd(o);
        const ScenarioConfig c = load(o);
        if (*an) return run_analytic_cmd(c, o.format);
        if (*sd) return run_sweep_cmd(run_distance_sweep(c), c, o.format);
        if (*sp) return run_sweep_cmd(run_power_sweep(c), c, o.format);
        switch (c.mode) {
            case Mode::comparative: return run_comparative_cmd(c, o.format);
            case Mode::distance_sweep: return run_sweep_cmd(run_distance_sweep(c), c, o.format);
            case Mode::power_sweep: return run_sweep_cmd(run_power_sweep(c), c, o.format);
            case Mode::analytic_only: return run_analytic_cmd(c, o.format);
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const nldp::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_config;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
