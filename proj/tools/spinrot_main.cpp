#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinrot/commands.hpp"

namespace cli = spinrot::cli;

int main(int argc, char** argv) {
    CLI::App app{"spinrot: spin-rotation coupling simulator and phase analysis"};
    app.set_version_flag("--version", std::string(cli::kToolVersion));
    app.require_subcommand(1);

    std::string config, calibration, out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool noiseless = false, analyzer = false;
    std::vector<std::string> inputs;
    std::size_t cases = 1000;
    std::uint64_t selftest_seed = 20190101;

    auto* calibrate = app.add_subcommand("calibrate", "run the adjustment scans, write calibration.dat");
    calibrate->add_option("--config", config, "YAML run configuration")->check(CLI::ExistingFile);
    calibrate->add_option("--out-dir", out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "record one interferogram per configured frequency");
    sweep->add_option("--config", config, "YAML run configuration")->check(CLI::ExistingFile);
    sweep->add_option("--calibration", calibration, "calibration.dat from `calibrate`")->required();
    auto* seed_opt = sweep->add_option("--seed", seed, "64-bit seed for Poisson counting noise");
    sweep->add_flag("--noiseless", noiseless, "expected counts only (default when no seed)")->excludes(seed_opt);
    sweep->add_flag("--analyzer", analyzer, "insert the polarization analyzer");
    sweep->add_option("--out-dir", out_dir, "output directory");

    auto* fit = app.add_subcommand("fit", "fit interferograms and the phase-vs-frequency line");
    fit->add_option("inputs", inputs, "interferogram files")->required();
    fit->add_option("--out-dir", out_dir, "output directory");

    auto* selftest = app.add_subcommand("selftest", "closed form vs numeric integration and the cyclic law");
    selftest->add_option("--cases", cases, "randomized oracle cases");
    selftest->add_option("--seed", selftest_seed, "seed for the randomized cases");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::kOk : cli::kConfigError;
    }

    auto opt_path = [](const std::string& s) -> std::optional<std::filesystem::path> {
        if (s.empty()) return std::nullopt;
        return std::filesystem::path{s};
    };

    try {
        if (calibrate->parsed()) {
            cli::cmd_calibrate({opt_path(config), out_dir}, std::cerr);
        } else if (sweep->parsed()) {
            cli::SweepOptions o{opt_path(config), calibration, noiseless ? std::nullopt : seed, analyzer,
                                out_dir};
            cli::cmd_sweep(o, std::cerr);
        } else if (fit->parsed()) {
            cli::FitOptions o;
            o.inputs.assign(inputs.begin(), inputs.end());
            o.out_dir = out_dir;
            cli::cmd_fit(o, std::cerr);
        } else if (selftest->parsed()) {
            return cli::cmd_selftest(cases, selftest_seed, std::cout);
        }
    } catch (...) {
        return cli::report_exception(std::cerr);
    }
    return cli::kOk;
}
