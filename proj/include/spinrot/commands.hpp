#pragma once

// Subcommands of the command-line tool, callable without a process boundary.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spinrot::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kPhysicsError = 3,
    kIoError = 4,
};

struct CalibrateOptions {
    std::optional<std::filesystem::path> config;  // default configuration when absent
    std::filesystem::path out_dir = ".";
};

struct SweepOptions {
    std::optional<std::filesystem::path> config;
    std::filesystem::path calibration;
    std::optional<std::uint64_t> seed;  // none: noiseless
    bool analyzer = false;
    std::filesystem::path out_dir = ".";
};

struct FitOptions {
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path out_dir = ".";
};

struct CommandOutput {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> warnings;
};

/// Writes calibration.dat, the scan data files and calibrate_manifest.json.
/// Warnings (boundary-flagged scans) also go to `diagnostics`.
CommandOutput cmd_calibrate(const CalibrateOptions& options, std::ostream& diagnostics);

/// Writes one interferogram_<f>Hz.dat per configured frequency and sweep_manifest.json.
CommandOutput cmd_sweep(const SweepOptions& options, std::ostream& diagnostics);

/// Writes fit_results.dat and fit_manifest.json.
CommandOutput cmd_fit(const FitOptions& options, std::ostream& diagnostics);

/// Oracle-equivalence and cyclic-state checks; one line per check on `out`.
/// Returns kOk when all pass, kPhysicsError otherwise.
int cmd_selftest(std::size_t cases, std::uint64_t seed, std::ostream& out);

/// Maps the exception currently being handled to an exit code and prints it.
int report_exception(std::ostream& err);

/// File name used for the interferogram at frequency f (Hz).
std::string interferogram_file_name(double frequency);

}  // namespace spinrot::cli
