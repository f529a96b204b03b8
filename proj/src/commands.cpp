#include "spinrot/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "spinrot/analysis.hpp"
#include "spinrot/config.hpp"
#include "spinrot/datafile.hpp"
#include "spinrot/errors.hpp"
#include "spinrot/experiment.hpp"

namespace spinrot::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig resolve_config(const std::optional<fs::path>& path) {
    return path ? load_config(*path) : parse_config(default_config_yaml());
}

std::string hex(std::uint64_t v) { return fmt::format("0x{:016x}", v); }

void add_constants(DataFile& f) {
    const auto& c = kCodata2018;
    f.set("const.hbar_J_s", format_number(c.hbar));
    f.set("const.planck_J_s", format_number(c.planck));
    f.set("const.neutron_mass_kg", format_number(c.neutron_mass));
    f.set("const.neutron_moment_J_per_T", format_number(c.neutron_moment));
}

json constants_json() {
    const auto& c = kCodata2018;
    return {{"source", "CODATA 2018"},
            {"hbar_J_s", c.hbar},
            {"planck_J_s", c.planck},
            {"neutron_mass_kg", c.neutron_mass},
            {"neutron_moment_J_per_T", c.neutron_moment}};
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_manifest(const fs::path& path, const json& manifest) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

json manifest_base(const char* command, const RunConfig& cfg) {
    return {{"tool", "spinrot"},
            {"version", kToolVersion},
            {"command", command},
            {"config", to_json(cfg)},
            {"config_hash", hex(config_hash(cfg))},
            {"constants", constants_json()}};
}

DataFile scan_file(const ScanResult& scan, const char* kind, const std::string& hash) {
    DataFile f;
    f.set("kind", kind);
    f.set("config_hash", hash);
    f.set("minimum", format_number(scan.extremum.value));
    f.set("minimum_boundary", scan.extremum.boundary ? "true" : "false");
    f.set("flat", scan.flat ? "true" : "false");
    add_constants(f);
    DataTable t;
    t.columns = {scan.parameter, "intensity"};
    for (std::size_t i = 0; i < scan.values.size(); ++i) {
        t.rows.push_back({format_number(scan.values[i]), format_number(scan.intensities[i])});
    }
    f.tables.push_back(std::move(t));
    return f;
}

CalibrationTable read_calibration(const fs::path& path) {
    const DataFile f = read_data_file(path);
    const std::string src = path.string();
    CalibrationTable table;
    table.dc1_rfg_distance = f.meta_number("dc1_rfg_distance_m");
    table.rfg_dc2_distance = f.meta_number("rfg_dc2_distance_m");
    table.larmor_accelerator_field = f.meta_number("larmor_accelerator_field_T");
    if (f.tables.empty()) throw IoError(src + ": no calibration rows");
    const DataTable& t = f.tables.front();
    const std::vector<std::string> expected{"frequency_Hz", "b1_cyclic_T", "b1_scan_T", "scan_boundary"};
    if (t.columns != expected) throw IoError(src + ": unexpected calibration columns");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::size_t line = t.row_lines[i];
        CalibrationRow row;
        row.frequency = parse_cell(r[0], src, line);
        row.b1_cyclic = parse_cell(r[1], src, line);
        row.b1_scan = parse_cell(r[2], src, line);
        row.scan_boundary = r[3] == "true";
        table.rows.push_back(row);
    }
    table.validate();
    return table;
}

struct LoadedInterferogram {
    fs::path path;
    double frequency = 0.0;
    std::optional<double> t1;
    std::vector<double> chi;
    std::vector<double> counts;
};

LoadedInterferogram read_interferogram(const fs::path& path) {
    const DataFile f = read_data_file(path);
    const std::string src = path.string();
    LoadedInterferogram out;
    out.path = path;
    out.frequency = f.meta_number("frequency_Hz");
    if (f.meta("rfg_dwell_time_s")) out.t1 = f.meta_number("rfg_dwell_time_s");
    if (f.tables.empty()) throw IoError(src + ": no data rows");
    const DataTable& t = f.tables.front();
    const std::vector<std::string> expected{"chi_rad", "expected_counts", "sampled_counts"};
    if (t.columns != expected) throw IoError(src + ": unexpected columns");
    if (t.rows.empty()) throw IoError(src + ": no data rows");
    const bool sampled = !t.rows.front()[2].empty();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::size_t line = t.row_lines[i];
        out.chi.push_back(parse_cell(r[0], src, line));
        if (sampled) {
            if (r[2].empty()) throw IoError(fmt::format("{}:{}: missing sampled count", src, line));
            out.counts.push_back(parse_cell(r[2], src, line));
        } else {
            if (!r[2].empty()) throw IoError(fmt::format("{}:{}: unexpected sampled count", src, line));
            out.counts.push_back(parse_cell(r[1], src, line));
        }
    }
    return out;
}

}  // namespace

std::string interferogram_file_name(double frequency) {
    return fmt::format("interferogram_{:09.1f}Hz.dat", frequency);
}

CommandOutput cmd_calibrate(const CalibrateOptions& options, std::ostream& diagnostics) {
    const RunConfig cfg = resolve_config(options.config);
    const std::string hash = hex(config_hash(cfg));
    const CalibrationReport report = calibrate(cfg.setup, cfg.plan);
    ensure_dir(options.out_dir);

    CommandOutput out;
    out.warnings = report.warnings;
    for (const auto& w : report.warnings) diagnostics << "warning: " << w << "\n";

    DataFile cal;
    cal.set("kind", "calibration");
    cal.set("tool_version", kToolVersion);
    cal.set("config_hash", hash);
    cal.set("rfg_length_m", format_number(cfg.setup.rfg_length));
    cal.set("rfg_dwell_time_s", format_number(cfg.setup.rfg_dwell_time()));
    cal.set("guide_field_T", format_number(cfg.setup.guide_field));
    cal.set("dc1_rfg_distance_m", format_number(report.table.dc1_rfg_distance));
    cal.set("rfg_dc2_distance_m", format_number(report.table.rfg_dc2_distance));
    cal.set("larmor_accelerator_field_T", format_number(report.table.larmor_accelerator_field));
    cal.set("amplitude_grid_step_T", format_number(cfg.plan.amplitude.step()));
    add_constants(cal);
    DataTable rows;
    rows.columns = {"frequency_Hz", "b1_cyclic_T", "b1_scan_T", "scan_boundary"};
    for (const auto& r : report.table.rows) {
        rows.rows.push_back({format_number(r.frequency), format_number(r.b1_cyclic),
                             format_number(r.b1_scan), r.scan_boundary ? "true" : "false"});
    }
    cal.tables.push_back(std::move(rows));

    DataFile amp;
    amp.set("kind", "amplitude_scans");
    amp.set("config_hash", hash);
    add_constants(amp);
    DataTable amp_rows;
    amp_rows.columns = {"frequency_Hz", "b1_T", "intensity"};
    for (std::size_t k = 0; k < report.amplitude.size(); ++k) {
        const auto& scan = report.amplitude[k];
        for (std::size_t i = 0; i < scan.values.size(); ++i) {
            amp_rows.rows.push_back({format_number(report.table.rows[k].frequency),
                                     format_number(scan.values[i]), format_number(scan.intensities[i])});
        }
    }
    amp.tables.push_back(std::move(amp_rows));

    const std::vector<std::pair<std::string, DataFile>> files{
        {"calibration.dat", cal},
        {"distance_scan_dc1_rfg.dat", scan_file(report.entrance_distance, "distance_scan_dc1_rfg", hash)},
        {"distance_scan_rfg_dc2.dat", scan_file(report.exit_distance, "distance_scan_rfg_dc2", hash)},
        {"bloc_scan.dat", scan_file(report.bloc, "bloc_scan", hash)},
        {"amplitude_scans.dat", amp},
    };
    json outputs = json::array();
    for (const auto& [name, file] : files) {
        write_data_file(options.out_dir / name, file);
        out.files.push_back(options.out_dir / name);
        outputs.push_back(name);
    }

    json manifest = manifest_base("calibrate", cfg);
    manifest["outputs"] = outputs;
    manifest["warnings"] = report.warnings;
    write_manifest(options.out_dir / "calibrate_manifest.json", manifest);
    out.files.push_back(options.out_dir / "calibrate_manifest.json");
    return out;
}

CommandOutput cmd_sweep(const SweepOptions& options, std::ostream& diagnostics) {
    RunConfig cfg = resolve_config(options.config);
    const std::string hash = hex(config_hash(cfg));
    const CalibrationTable table = read_calibration(options.calibration);
    const DataFile cal_meta = read_data_file(options.calibration);
    CommandOutput out;
    if (cal_meta.meta("config_hash") != hash) {
        out.warnings.push_back("calibration was produced from a different configuration");
    }
    for (const auto& w : out.warnings) diagnostics << "warning: " << w << "\n";

    Acquisition acq = cfg.acquisition;
    acq.seed = options.seed;
    const auto sweep =
        frequency_sweep(cfg.setup, cfg.plan.frequencies, table, acq, options.analyzer);
    ensure_dir(options.out_dir);

    json outputs = json::array();
    for (const auto& ig : sweep) {
        DataFile f;
        f.set("kind", "interferogram");
        f.set("tool_version", kToolVersion);
        f.set("config_hash", hash);
        f.set("frequency_Hz", format_number(ig.frequency));
        f.set("b1_T", format_number(ig.b1));
        f.set("rfg_length_m", format_number(cfg.setup.rfg_length));
        f.set("rfg_dwell_time_s", format_number(cfg.setup.rfg_dwell_time()));
        f.set("rfg_path", to_string(cfg.setup.rfg_path));
        f.set("contrast", format_number(cfg.setup.contrast));
        f.set("analyzer", ig.analyzer ? "on" : "off");
        f.set("counting_time_s", format_number(ig.counting_time));
        f.set("count_rate_per_s", format_number(ig.count_rate));
        f.set("seed", ig.seed ? std::to_string(*ig.seed) : "none");
        f.set("stream_seed", ig.stream_seed ? std::to_string(*ig.stream_seed) : "none");
        f.set("rng", ig.seed ? "mt19937_64+poisson(inversion<10,PTRS)" : "none");
        add_constants(f);
        DataTable t;
        t.columns = {"chi_rad", "expected_counts", "sampled_counts"};
        for (const auto& p : ig.points) {
            t.rows.push_back({format_number(p.chi), format_number(p.expected),
                              p.sampled ? std::to_string(*p.sampled) : std::string{}});
        }
        f.tables.push_back(std::move(t));
        const std::string name = interferogram_file_name(ig.frequency);
        write_data_file(options.out_dir / name, f);
        out.files.push_back(options.out_dir / name);
        outputs.push_back(name);
    }

    json manifest = manifest_base("sweep", cfg);
    manifest["seed"] = options.seed ? json(*options.seed) : json(nullptr);
    manifest["analyzer"] = options.analyzer;
    manifest["calibration"] = options.calibration.filename().string();
    manifest["outputs"] = outputs;
    write_manifest(options.out_dir / "sweep_manifest.json", manifest);
    out.files.push_back(options.out_dir / "sweep_manifest.json");
    return out;
}

CommandOutput cmd_fit(const FitOptions& options, std::ostream& diagnostics) {
    if (options.inputs.empty()) {
        throw std::invalid_argument("fit: at least one interferogram file is required");
    }
    std::vector<LoadedInterferogram> data;
    for (const auto& p : options.inputs) data.push_back(read_interferogram(p));
    std::sort(data.begin(), data.end(),
              [](const auto& a, const auto& b) { return a.frequency < b.frequency; });
    for (std::size_t i = 1; i < data.size(); ++i) {
        if (data[i].frequency == data[i - 1].frequency) {
            throw std::invalid_argument(fmt::format("fit: duplicate frequency {} Hz", data[i].frequency));
        }
    }

    CommandOutput out;
    std::vector<FitResult> fits;
    for (const auto& d : data) fits.push_back(fit_sinusoid(d.chi, d.counts));

    // reference: the static case if present, else the lowest frequency
    const std::size_t ref = 0;
    const FitResult& reference = fits[ref];

    std::vector<PhasePoint> series;
    std::vector<std::optional<PhaseDifference>> relative(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!fits[i].phase_constrained || !reference.phase_constrained) {
            out.warnings.push_back(
                fmt::format("f = {} Hz: phase unconstrained, excluded from the linear fit", data[i].frequency));
            continue;
        }
        relative[i] = relative_phase(fits[i], reference);
        // the reference error is common to every point; it moves only the intercept
        series.push_back({data[i].frequency, relative[i]->value, fits[i].phase_error});
    }
    const auto unwrapped = unwrap_phases(series);

    DataFile f;
    f.set("kind", "fit_results");
    f.set("tool_version", kToolVersion);
    f.set("reference_frequency_Hz", format_number(data[ref].frequency));
    f.set("phase_convention", "counts = offset + amplitude * cos(chi + phase)");
    std::optional<double> t1;
    bool t1_consistent = true;
    for (const auto& d : data) {
        if (!d.t1) continue;
        if (t1 && *t1 != *d.t1) t1_consistent = false;
        t1 = d.t1;
    }
    if (t1 && t1_consistent) f.set("configured_t1_s", format_number(*t1));
    std::string inputs;
    for (const auto& d : data) {
        if (!inputs.empty()) inputs += " ";
        inputs += d.path.filename().string();
    }
    f.set("inputs", inputs);
    add_constants(f);

    DataTable per_f;
    per_f.name = "per_frequency";
    per_f.columns = {"frequency_Hz",   "offset_counts",        "offset_err_counts",
                     "amplitude_counts", "amplitude_err_counts", "phase_rad",
                     "phase_err_rad",  "relative_phase_rad",   "relative_phase_err_rad",
                     "unwrapped_relative_phase_rad", "reduced_chi2", "phase_constrained"};
    std::size_t k = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& fit = fits[i];
        std::string rel = "", rel_err = "", unw = "";
        if (relative[i]) {
            rel = format_number(relative[i]->value);
            rel_err = format_number(relative[i]->error);
            unw = format_number(unwrapped[k++].phase);
        }
        per_f.rows.push_back({format_number(data[i].frequency), format_number(fit.offset),
                              format_number(fit.offset_error), format_number(fit.amplitude),
                              format_number(fit.amplitude_error), format_number(fit.phase),
                              format_number(fit.phase_error), rel, rel_err, unw,
                              format_number(fit.reduced_chi_square),
                              fit.phase_constrained ? "true" : "false"});
    }
    f.tables.push_back(std::move(per_f));

    std::vector<double> distinct;
    for (const auto& p : unwrapped) distinct.push_back(p.frequency);
    if (distinct.size() >= 2) {
        const LinearFit line = fit_phase_vs_frequency(unwrapped);
        const double intercept_err = std::hypot(line.intercept_error, reference.phase_error);
        DataTable lt;
        lt.name = "linear_fit";
        lt.columns = {"slope_rad_per_Hz", "slope_err_rad_per_Hz", "intercept_rad", "intercept_err_rad",
                      "cov_slope_intercept", "chi2", "dof", "reduced_chi2", "t1_estimate_s",
                      "t1_estimate_err_s"};
        lt.rows.push_back({format_number(line.slope), format_number(line.slope_error),
                           format_number(line.intercept), format_number(intercept_err),
                           format_number(line.covariance[1]), format_number(line.chi_square),
                           std::to_string(line.degrees_of_freedom), format_number(line.reduced_chi_square),
                           format_number(line.slope / kPi), format_number(line.slope_error / kPi)});
        f.tables.push_back(std::move(lt));
    }

    for (const auto& w : out.warnings) diagnostics << "warning: " << w << "\n";
    ensure_dir(options.out_dir);
    write_data_file(options.out_dir / "fit_results.dat", f);
    out.files.push_back(options.out_dir / "fit_results.dat");

    json manifest = {{"tool", "spinrot"},
                     {"version", kToolVersion},
                     {"command", "fit"},
                     {"constants", constants_json()},
                     {"inputs", json::array()},
                     {"outputs", json::array({"fit_results.dat"})}};
    for (const auto& d : data) manifest["inputs"].push_back(d.path.filename().string());
    write_manifest(options.out_dir / "fit_manifest.json", manifest);
    out.files.push_back(options.out_dir / "fit_manifest.json");
    return out;
}

int cmd_selftest(std::size_t cases, std::uint64_t seed, std::ostream& out) {
    bool all = true;
    auto report = [&](bool ok, const std::string& line) {
        all = all && ok;
        out << (ok ? "[PASS] " : "[FAIL] ") << line << "\n";
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < cases; ++i) {
        const double b1 = 10e-3 * unit(rng);
        const double omega = kTwoPi * 20e3 * unit(rng);
        const double t = 20e-6 * unit(rng);
        const double theta = kPi * unit(rng), phi = kTwoPi * unit(rng);
        const Spinor s0{{std::cos(theta / 2), 0.0}, std::polar(std::sin(theta / 2), phi)};
        const Spinor closed = evolve_rotating_frame(s0, b1, omega, t);
        const RotatingField field{b1, omega, 0.0, std::nullopt, 0.0};
        const Spinor numeric =
            numeric_integrate(s0, [&](double tau) { return field.field_at(tau); }, t, 100000).state;
        worst = std::max(worst, max_component_error(closed, numeric));
    }
    report(worst < 1e-9, fmt::format("closed form vs RK4 (1e5 steps), {} cases: max error {:.3e} < 1e-9",
                                     cases, worst));

    const double t1 = InterferometerSetup{}.rfg_dwell_time();
    double worst_mod = 0.0, worst_arg = 0.0;
    for (double f : frequency_list(20e3, 2.5e3)) {
        const double omega = kTwoPi * f;
        const Spinor s = evolve_rotating_frame(Spinor::plus_y(), cyclic_amplitude_closed_form(omega, t1),
                                               omega, t1);
        const Complex overlap = inner(Spinor::plus_y(), s);
        worst_mod = std::max(worst_mod, std::abs(std::abs(overlap) - 1.0));
        worst_arg = std::max(worst_arg, std::abs(wrap_phase(std::arg(overlap) - (kPi + omega * t1 / 2))));
    }
    report(worst_mod < 1e-10 && worst_arg < 1e-10,
           fmt::format("cyclic state -exp(i Omega t1/2)|+y>, 0-20 kHz: |overlap| err {:.2e}, arg err {:.2e}",
                       worst_mod, worst_arg));
    return all ? kOk : kPhysicsError;
}

int report_exception(std::ostream& err) {
    try {
        throw;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const PhysicsError& e) {
        err << "error: " << e.what() << "\n";
        return kPhysicsError;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kPhysicsError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kPhysicsError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace spinrot::cli
