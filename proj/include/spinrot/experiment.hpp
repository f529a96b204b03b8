#pragma once

// Virtual reruns of the measurement protocol: adjustment scans, interferogram
// acquisition with seeded counting noise and frequency sweeps.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinrot/beamline.hpp"
#include "spinrot/constants.hpp"

namespace spinrot {

/// Experiment-level description from which the beamlines of the individual
/// stages are assembled. The three geometry fields at the bottom are what the
/// adjustment procedure determines; their defaults are uncalibrated guesses.
struct InterferometerSetup {
    double wavelength = 1.9e-10;
    double guide_field = 9.0 * kGauss;
    /// Coil length, hence the dwell time t1. Not a measured value; always configurable.
    double rfg_length = 0.02;
    PathId rfg_path = PathId::II;
    double contrast = 0.9;
    /// Spin analysis in front of the detector when inserted during a sweep.
    Analyzer analyzer{{0.0, 1.0, 0.0}, 0.4, 0.0};
    /// Turns |+z> into |+y>; DC2 uses the same rotation, mapping |+y> to |-z>.
    DCRotator spin_rotator{{1.0, 0.0, 0.0}, -kPi / 2.0};
    double rotator_length = 0.01;
    double accelerator_length = 0.01;
    /// Relative excess of the x amplitude of the coil (B_x = B1 (1 + imbalance)).
    double imbalance = 0.0;
    std::size_t integrator_steps = kDefaultIntegratorSteps;

    double dc1_rfg_distance = 0.25;
    double rfg_dc2_distance = 0.25;
    double larmor_accelerator_field = 0.0;

    NeutronKinematics kinematics() const { return NeutronKinematics{wavelength}; }
    /// t1, the flight time through the coil.
    double rfg_dwell_time() const { return dwell_time(rfg_length, kinematics()); }
};

/// Amplitude B1 at which alpha(t1) = 2 pi for rotation rate Omega.
/// Throws PhysicsError if Omega t1 >= 2 pi.
double cyclic_amplitude_closed_form(double omega, double t1,
                                    const PhysicalConstants& c = kCodata2018);

enum class ExtremumKind { Minimum, Maximum };

struct Extremum {
    double value = 0.0;
    double intensity = 0.0;
    ExtremumKind kind = ExtremumKind::Minimum;
    /// Located on a grid endpoint, or the scan was flat.
    bool boundary = true;
};

struct ScanResult {
    std::string parameter;
    std::vector<double> values;
    std::vector<double> intensities;
    /// First interior minimum, parabolically refined.
    Extremum extremum;
    /// All interior minima, refined, in increasing order.
    std::vector<double> minima;
    bool flat = false;
};

/// Locates minima on a strictly increasing grid. Throws std::invalid_argument
/// for fewer than 3 points, size mismatch or a non-increasing grid.
ScanResult locate_minima(std::string parameter, std::vector<double> values,
                         std::vector<double> intensities);

struct ScanGrid {
    double start = 0.0;
    double stop = 0.0;
    std::size_t points = 0;

    std::vector<double> values() const;
    double step() const;
};

enum class DistanceStage { Dc1ToRfg, RfgToDc2 };

/// Path II blocked, both rotators at pi/2 with guide-field flight of variable
/// length in between, spin analysis along +z. Minima are one Larmor
/// wavelength 2 pi v / omega0 apart.
ScanResult distance_scan(const InterferometerSetup& setup, std::span<const double> distances,
                         DistanceStage stage = DistanceStage::Dc1ToRfg);

/// Reference arm blocked; intensity behind DC2 and analyzer versus coil amplitude.
/// The first interior minimum marks the cyclic amplitude.
ScanResult amplitude_scan(const InterferometerSetup& setup, double omega,
                          std::span<const double> amplitudes);

/// Coil arm blocked; intensity versus Larmor accelerator field. The minimum
/// aligns the reference spin with +y at the last plate.
ScanResult bloc_scan(const InterferometerSetup& setup, std::span<const double> fields);

/// Picks the minimum closest to zero field from a bloc scan.
std::optional<double> preferred_bloc_minimum(const ScanResult& scan);

struct CalibrationRow {
    double frequency = 0.0;    // Hz
    double b1_cyclic = 0.0;    // T, closed form
    double b1_scan = 0.0;      // T, amplitude-scan minimum
    bool scan_boundary = false;
};

struct CalibrationTable {
    std::vector<CalibrationRow> rows;
    double dc1_rfg_distance = 0.0;
    double rfg_dc2_distance = 0.0;
    double larmor_accelerator_field = 0.0;

    /// Throws PhysicsError unless b1_cyclic is strictly decreasing in frequency.
    void validate() const;
    /// Throws PhysicsError naming the frequency when no row matches.
    const CalibrationRow& row_for(double frequency) const;
    /// Setup with the calibrated geometry filled in.
    InterferometerSetup apply_to(InterferometerSetup setup) const;
};

struct CalibrationPlan {
    std::vector<double> frequencies;
    ScanGrid distance{0.05, 0.30, 501};
    ScanGrid amplitude{0.0, 6e-3, 1201};
    ScanGrid bloc{-50.0 * kGauss, 50.0 * kGauss, 401};
};

struct CalibrationReport {
    CalibrationTable table;
    ScanResult entrance_distance;
    ScanResult exit_distance;
    ScanResult bloc;
    std::vector<ScanResult> amplitude;  // one per frequency, same order as rows
    std::vector<std::string> warnings;
};

/// Distance scans, then one amplitude scan per frequency, then the Larmor
/// accelerator scan. Throws PhysicsError if a frequency has no cyclic amplitude
/// or a required minimum cannot be located.
CalibrationReport calibrate(const InterferometerSetup& setup, const CalibrationPlan& plan);

/// Beamline for interferogram acquisition with the coil driven at `frequency`
/// (Hz) and amplitude `b1`. Frequency 0 is the static x-field case.
BeamlineConfig interferometer_beamline(const InterferometerSetup& setup, double frequency,
                                       double b1, bool analyzer_inserted);

struct Acquisition {
    std::vector<double> chi;
    double count_rate = 20.0;     // counts/s at unit intensity
    double counting_time = 20.0;  // s per point
    /// No seed: expected counts only.
    std::optional<std::uint64_t> seed;
};

/// n points evenly spaced on [0, span).
std::vector<double> chi_grid(std::size_t points, double span = 4.0 * kPi);

Acquisition default_acquisition();

struct InterferogramPoint {
    double chi = 0.0;
    double expected = 0.0;
    std::optional<std::int64_t> sampled;
};

struct Interferogram {
    double frequency = 0.0;  // Hz
    double b1 = 0.0;         // T
    double counting_time = 0.0;
    double count_rate = 0.0;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> stream_seed;
    bool analyzer = false;
    std::vector<InterferogramPoint> points;

    std::vector<double> chi() const;
    /// Sampled counts when present, else expected counts.
    std::vector<double> counts() const;
};

/// Generator seed for one acquisition, derived from the run seed and frequency.
std::uint64_t acquisition_stream_seed(std::uint64_t seed, double frequency);

Interferogram record_interferogram(const BeamlineConfig& beamline, double frequency,
                                   const Acquisition& acquisition);

Interferogram record_interferogram(const InterferometerSetup& setup, double omega, double b1,
                                   const Acquisition& acquisition, bool analyzer_inserted);

/// One interferogram per frequency at its calibrated amplitude, in the order given.
/// Throws PhysicsError naming the frequency when the table lacks a row.
std::vector<Interferogram> frequency_sweep(const InterferometerSetup& setup,
                                           std::span<const double> frequencies,
                                           const CalibrationTable& calibration,
                                           const Acquisition& acquisition,
                                           bool analyzer_inserted);

/// 0, step, 2 step, ... up to and including `stop`.
std::vector<double> frequency_list(double stop, double step);

}  // namespace spinrot
