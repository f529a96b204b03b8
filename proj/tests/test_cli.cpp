#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "spinrot/analysis.hpp"
#include "spinrot/commands.hpp"
#include "spinrot/config.hpp"
#include "spinrot/datafile.hpp"
#include "spinrot/errors.hpp"
#include "spinrot/experiment.hpp"

using namespace spinrot;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("spinrot_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = fmt::format("\"{}\" {} > \"{}\" 2> \"{}\"", SPINROT_CLI_PATH, args, out.string(), err.string());
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::vector<fs::path> interferograms(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().filename().string().rfind("interferogram_", 0) == 0) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

FitResult fit_file(const fs::path& p) {
    const DataFile f = read_data_file(p);
    const DataTable& t = f.tables.front();
    std::vector<double> chi, counts;
    for (const auto& row : t.rows) {
        chi.push_back(std::stod(row[0]));
        counts.push_back(std::stod(row[row[2].empty() ? 1 : 2]));
    }
    return fit_sinusoid(chi, counts);
}

// one calibration shared by the sweep and fit cases
const fs::path& calibrated_dir() {
    static const fs::path dir = [] {
        const fs::path d = scratch("shared");
        std::ostringstream diag;
        cli::cmd_calibrate({std::nullopt, d / "cal"}, diag);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("calibrate with the default configuration") {
    const fs::path cal = calibrated_dir() / "cal";
    const DataFile f = read_data_file(cal / "calibration.dat");
    const DataTable& t = f.tables.front();
    REQUIRE(t.rows.size() == 9);
    const double t1 = f.meta_number("rfg_dwell_time_s");
    const double step = f.meta_number("amplitude_grid_step_T");
    double previous = INFINITY;
    for (const auto& row : t.rows) {
        const double freq = std::stod(row[0]), b1 = std::stod(row[1]), scan = std::stod(row[2]);
        // closed form from the literal constants
        const double w1 = std::sqrt(std::pow(kTwoPi / t1, 2) - std::pow(kTwoPi * freq, 2));
        CHECK(b1 == doctest::Approx(w1 * 1.054571817e-34 / (2.0 * 9.6623651e-27)).epsilon(1e-13));
        CHECK(std::abs(scan - b1) < step);
        CHECK(row[3] == "false");
        CHECK(b1 < previous);
        previous = b1;
    }
    CHECK(f.meta("const.hbar_J_s") == "1.054571817e-34");
    for (const char* name : {"distance_scan_dc1_rfg.dat", "distance_scan_rfg_dc2.dat", "bloc_scan.dat",
                             "amplitude_scans.dat", "calibrate_manifest.json"}) {
        CHECK(fs::exists(cal / name));
    }

    // identical bytes on rerun
    const fs::path again = scratch("calibrate_again");
    std::ostringstream diag;
    cli::cmd_calibrate({std::nullopt, again}, diag);
    for (const auto& e : fs::directory_iterator(cal)) {
        CHECK(slurp(e.path()) == slurp(again / e.path().filename()));
    }
}

TEST_CASE("calibrate rejects an unreachable frequency") {
    const fs::path d = scratch("unreachable");
    write_text(d / "run.yaml", "rfg:\n  length: 20 cm\nsweep:\n  frequencies: [0 Hz, 5 kHz, 12.5 kHz]\n");
    std::ostringstream diag;
    try {
        cli::cmd_calibrate({d / "run.yaml", d / "out"}, diag);
        FAIL("expected PhysicsError");
    } catch (const PhysicsError& e) {
        CHECK(std::string(e.what()).find("12500 Hz") != std::string::npos);
    }
    const Run r = run_cli(fmt::format("calibrate --config \"{}\" --out-dir \"{}\"", (d / "run.yaml").string(),
                                      (d / "out").string()),
                          d);
    CHECK(r.code == 3);
    CHECK(r.err.find("12500 Hz") != std::string::npos);
}

TEST_CASE("invalid configuration exits 2 with the field path") {
    const fs::path d = scratch("badconfig");
    write_text(d / "run.yaml", "interferometer:\n  contrast: 2\n");
    const Run r = run_cli(fmt::format("calibrate --config \"{}\" --out-dir \"{}\"", (d / "run.yaml").string(),
                                      (d / "out").string()),
                          d);
    CHECK(r.code == 2);
    CHECK(r.err.find("interferometer.contrast") != std::string::npos);

    write_text(d / "units.yaml", "guide_field: 9\n");
    const Run u = run_cli(fmt::format("calibrate --config \"{}\"", (d / "units.yaml").string()), d);
    CHECK(u.code == 2);
    CHECK(u.err.find("guide_field") != std::string::npos);

    CHECK(run_cli("sweep", d).code == 2);
    CHECK(run_cli("frobnicate", d).code == 2);
}

TEST_CASE("boundary-flagged scans produce warnings") {
    const fs::path d = scratch("narrow");
    write_text(d / "run.yaml",
               "calibration:\n  distance_scan: {start: 1 cm, stop: 3 cm, points: 11}\n"
               "  bloc_scan: {start: 0 G, stop: 1 G, points: 11}\n");
    std::ostringstream diag;
    const auto out = cli::cmd_calibrate({d / "run.yaml", d / "out"}, diag);
    CHECK(out.warnings.size() >= 3);
    CHECK(diag.str().find("warning: distance scan DC1-RFG") != std::string::npos);
    CHECK(diag.str().find("warning: Larmor accelerator scan") != std::string::npos);
}

TEST_CASE("noiseless sweep: visibility equals the contrast, analyzer scales amplitudes") {
    const fs::path d = calibrated_dir();
    std::ostringstream diag;
    cli::cmd_sweep({std::nullopt, d / "cal" / "calibration.dat", std::nullopt, false, d / "off"}, diag);
    cli::cmd_sweep({std::nullopt, d / "cal" / "calibration.dat", std::nullopt, true, d / "on"}, diag);
    CHECK(diag.str().empty());

    const auto off = interferograms(d / "off"), on = interferograms(d / "on");
    REQUIRE(off.size() == 9);
    REQUIRE(on.size() == 9);
    for (std::size_t i = 0; i < off.size(); ++i) {
        const DataFile f = read_data_file(off[i]);
        CHECK(f.meta("seed") == "none");
        CHECK(f.tables.front().columns == std::vector<std::string>{"chi_rad", "expected_counts", "sampled_counts"});
        for (const auto& row : f.tables.front().rows) CHECK(row[2].empty());

        const FitResult a = fit_file(off[i]), b = fit_file(on[i]);
        CHECK(a.amplitude / a.offset == doctest::Approx(0.9).epsilon(1e-9));
        CHECK(b.amplitude / a.amplitude == doctest::Approx(0.4).epsilon(1e-9));
        CHECK(std::abs(wrap_phase(a.phase - b.phase)) < 1e-9);
    }
}

TEST_CASE("seeded sweep is byte-reproducible") {
    const fs::path d = calibrated_dir();
    std::ostringstream diag;
    cli::cmd_sweep({std::nullopt, d / "cal" / "calibration.dat", 42, false, d / "s1"}, diag);
    const Run r = run_cli(fmt::format("sweep --calibration \"{}\" --seed 42 --out-dir \"{}\"",
                                      (d / "cal" / "calibration.dat").string(), (d / "s2").string()),
                          d);
    REQUIRE(r.code == 0);
    const auto a = interferograms(d / "s1"), b = interferograms(d / "s2");
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(slurp(a[i]) == slurp(b[i]));
    CHECK(slurp(d / "s1" / "sweep_manifest.json") == slurp(d / "s2" / "sweep_manifest.json"));
    const DataFile f = read_data_file(a.front());
    CHECK(f.meta("seed") == "42");
    CHECK_FALSE(f.tables.front().rows.front()[2].empty());

    CHECK(run_cli(fmt::format("sweep --calibration \"{}\" --seed 1 --noiseless",
                              (d / "cal" / "calibration.dat").string()),
                  d)
              .code == 2);
}

TEST_CASE("sweep needs a calibration row for every frequency") {
    const fs::path d = calibrated_dir();
    const fs::path run = scratch("missing_row");
    write_text(run / "run.yaml", "sweep:\n  frequencies: [0 Hz, 3 kHz]\n");
    std::ostringstream diag;
    try {
        cli::cmd_sweep({run / "run.yaml", d / "cal" / "calibration.dat", std::nullopt, false, run / "out"}, diag);
        FAIL("expected PhysicsError");
    } catch (const PhysicsError& e) {
        CHECK(std::string(e.what()).find("3000 Hz") != std::string::npos);
    }
    CHECK(diag.str().find("different configuration") != std::string::npos);

    const Run r = run_cli(fmt::format("sweep --calibration \"{}\"", (run / "absent.dat").string()), run);
    CHECK(r.code == 4);
}

TEST_CASE("fit recovers t1 and ignores input order") {
    const fs::path d = calibrated_dir();
    std::ostringstream diag;
    cli::cmd_sweep({std::nullopt, d / "cal" / "calibration.dat", std::nullopt, false, d / "fit_in"}, diag);
    auto files = interferograms(d / "fit_in");
    REQUIRE(files.size() == 9);

    cli::cmd_fit({files, d / "fit_a"}, diag);
    std::mt19937_64 rng(7);
    std::shuffle(files.begin(), files.end(), rng);
    cli::cmd_fit({files, d / "fit_b"}, diag);
    CHECK(slurp(d / "fit_a" / "fit_results.dat") == slurp(d / "fit_b" / "fit_results.dat"));

    const DataFile f = read_data_file(d / "fit_a" / "fit_results.dat");
    const double t1 = f.meta_number("configured_t1_s");
    REQUIRE(f.table("per_frequency"));
    CHECK(f.table("per_frequency")->rows.size() == 9);
    const DataTable* line = f.table("linear_fit");
    REQUIRE(line);
    const auto& cols = line->columns;
    const auto col = [&](const char* name) {
        return static_cast<std::size_t>(std::find(cols.begin(), cols.end(), name) - cols.begin());
    };
    const double estimate = std::stod(line->rows[0][col("t1_estimate_s")]);
    CHECK(std::abs(estimate / t1 - 1.0) < 1e-9);
    CHECK(std::stod(line->rows[0][col("slope_rad_per_Hz")]) == doctest::Approx(kPi * t1).epsilon(1e-9));
    CHECK(line->rows[0][col("dof")] == "7");

    // a single interferogram: per-frequency row only
    cli::cmd_fit({{files.front()}, d / "fit_single"}, diag);
    const DataFile single = read_data_file(d / "fit_single" / "fit_results.dat");
    CHECK(single.table("per_frequency")->rows.size() == 1);
    CHECK_FALSE(single.table("linear_fit"));

    const Run r = run_cli(fmt::format("fit \"{}\" \"{}\" --out-dir \"{}\"", files[0].string(), files[0].string(),
                                      (d / "fit_dup").string()),
                          d);
    CHECK(r.code == 3);
    CHECK(r.err.find("duplicate frequency") != std::string::npos);
}

TEST_CASE("fit reports malformed input with the line number") {
    const fs::path d = calibrated_dir();
    std::ostringstream diag;
    cli::cmd_sweep({std::nullopt, d / "cal" / "calibration.dat", std::nullopt, false, d / "malformed"}, diag);
    const fs::path good = interferograms(d / "malformed").front();
    std::string text = slurp(good);
    // corrupt the third data row
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    std::size_t header = 0;
    while (lines[header].rfind("#", 0) == 0) ++header;
    const std::size_t bad_line = header + 3;  // 0-based index of the 3rd data row
    lines[bad_line] = "0.5,abc,";
    std::string joined;
    for (const auto& l : lines) joined += l + "\n";
    const fs::path bad = d / "malformed" / "broken.dat";
    write_text(bad, joined);

    const Run r = run_cli(fmt::format("fit \"{}\" --out-dir \"{}\"", bad.string(), (d / "malformed_out").string()), d);
    CHECK(r.code == 4);
    CHECK(r.err.find(fmt::format("broken.dat:{}", bad_line + 1)) != std::string::npos);

    CHECK(run_cli(fmt::format("fit \"{}\"", (d / "nothing.dat").string()), d).code == 4);
}

TEST_CASE("selftest") {
    std::ostringstream out;
    CHECK(cli::cmd_selftest(20, 3, out) == cli::kOk);
    CHECK(out.str().find("[FAIL]") == std::string::npos);
    const fs::path d = scratch("selftest");
    const Run r = run_cli("selftest --cases 10", d);
    CHECK(r.code == 0);
    CHECK(r.out.find("[PASS]") != std::string::npos);
    CHECK(run_cli("--version", d).out.find(cli::kToolVersion) != std::string::npos);
}

TEST_CASE("interferogram file names sort by frequency") {
    CHECK(cli::interferogram_file_name(2500.0) == "interferogram_0002500.0Hz.dat");
    CHECK(cli::interferogram_file_name(0.0) < cli::interferogram_file_name(17500.0));
    CHECK(cli::interferogram_file_name(17500.0) < cli::interferogram_file_name(20000.0));
}
