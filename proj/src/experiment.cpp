#include "spinrot/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

#include "spinrot/errors.hpp"
#include "spinrot/poisson.hpp"

namespace spinrot {

namespace {

FieldSegment guide(const InterferometerSetup& s, double length) {
    return {StaticField{{0.0, 0.0, s.guide_field}}, length, "guide"};
}

void push_guide(std::vector<FieldSegment>& segs, const InterferometerSetup& s, double length) {
    if (length > 0.0) segs.push_back(guide(s, length));
}

FieldSegment rotator(const InterferometerSetup& s, const char* label) {
    return {s.spin_rotator, s.rotator_length, label};
}

FieldSegment coil(const InterferometerSetup& s, double omega, double b1) {
    RotatingField f;
    f.amplitude = b1;
    f.angular_frequency = omega;
    f.ambient_field = s.guide_field;
    f.imbalance = s.imbalance;
    return {f, s.rfg_length, omega == 0.0 ? "rfg(static)" : "rfg"};
}

// Reference arm: guide field opposite the coil with the Larmor accelerator
// at its end, then the common flight to DC2.
std::vector<FieldSegment> reference_arm(const InterferometerSetup& s, double bloc) {
    if (s.accelerator_length > s.rfg_length) {
        throw ConfigError("interferometer.larmor_accelerator_length: must not exceed rfg.length");
    }
    std::vector<FieldSegment> segs;
    push_guide(segs, s, s.rfg_length - s.accelerator_length);
    segs.push_back({StaticField{{0.0, 0.0, s.guide_field + bloc}}, s.accelerator_length,
                    "larmor_accelerator"});
    push_guide(segs, s, s.rfg_dc2_distance);
    return segs;
}

Arm& coil_arm(BeamlineConfig& b, PathId path) { return path == PathId::I ? b.path_i : b.path_ii; }
Arm& reference(BeamlineConfig& b, PathId path) {
    return path == PathId::I ? b.path_ii : b.path_i;
}

// Common skeleton of every stage: polarized |+z> beam, spin analysis along +z.
BeamlineConfig adjustment_base(const InterferometerSetup& s) {
    BeamlineConfig b;
    b.kinematics = s.kinematics();
    b.incident = Spinor::plus_z();
    b.guide_field = s.guide_field;
    b.contrast = s.contrast;
    b.rfg_path = s.rfg_path;
    b.rfg_length = s.rfg_length;
    b.integrator_steps = s.integrator_steps;
    b.analyzer = Analyzer{{0.0, 0.0, 1.0}, s.analyzer.pass_transmission,
                          s.analyzer.block_transmission};
    return b;
}

double intensity(const BeamlineConfig& b) { return detected_intensity(propagate_beamline(b, 0.0), b); }

double parabolic_vertex(double x0, double x1, double x2, double f0, double f1, double f2) {
    const double p = (x1 - x0) * (f1 - f2);
    const double q = (x1 - x2) * (f1 - f0);
    const double den = p - q;
    if (den == 0.0) return x1;
    const double v = x1 - 0.5 * ((x1 - x0) * p - (x1 - x2) * q) / den;
    return std::clamp(v, x0, x2);
}

double parabola_at(double x, double x0, double x1, double x2, double f0, double f1, double f2) {
    // Lagrange form
    return f0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2)) +
           f1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2)) +
           f2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
}

}  // namespace

double cyclic_amplitude_closed_form(double omega, double t1, const PhysicalConstants& c) {
    if (!(t1 > 0.0)) {
        throw std::invalid_argument("cyclic_amplitude_closed_form: t1 must be > 0");
    }
    const double cycle = kTwoPi / t1;
    if (std::abs(omega) >= cycle) {
        throw PhysicsError(fmt::format(
            "no cyclic amplitude at f = {} Hz: Omega t1 = {:.6g} >= 2 pi", omega / kTwoPi,
            std::abs(omega) * t1));
    }
    const double omega1 = std::sqrt(cycle * cycle - omega * omega);
    return field_for_larmor_frequency(omega1, c);
}

ScanResult locate_minima(std::string parameter, std::vector<double> values,
                         std::vector<double> intensities) {
    const std::size_t n = values.size();
    if (n < 3 || intensities.size() != n) {
        throw std::invalid_argument("scan: need >= 3 points with one intensity per value");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(values[i] > values[i - 1])) {
            throw std::invalid_argument("scan: grid must be strictly increasing");
        }
    }

    ScanResult r;
    r.parameter = std::move(parameter);
    const auto [lo, hi] = std::minmax_element(intensities.begin(), intensities.end());
    const double scale = std::max(1.0, std::max(std::abs(*lo), std::abs(*hi)));
    r.flat = (*hi - *lo) <= 1e-12 * scale;

    if (!r.flat) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double f0 = intensities[i - 1], f1 = intensities[i], f2 = intensities[i + 1];
            if (f1 < f0 && f1 <= f2) {
                const double x = parabolic_vertex(values[i - 1], values[i], values[i + 1], f0, f1, f2);
                if (r.minima.empty()) {
                    r.extremum.value = x;
                    r.extremum.intensity =
                        parabola_at(x, values[i - 1], values[i], values[i + 1], f0, f1, f2);
                    r.extremum.boundary = false;
                }
                r.minima.push_back(x);
            }
        }
    }
    if (r.minima.empty()) {
        const auto idx = static_cast<std::size_t>(lo - intensities.begin());
        r.extremum.value = values[idx];
        r.extremum.intensity = *lo;
        r.extremum.boundary = true;
    }
    r.extremum.kind = ExtremumKind::Minimum;
    r.values = std::move(values);
    r.intensities = std::move(intensities);
    return r;
}

std::vector<double> ScanGrid::values() const {
    if (points < 2 || !(stop > start)) {
        throw std::invalid_argument("scan grid: need >= 2 points and stop > start");
    }
    std::vector<double> v(points);
    for (std::size_t i = 0; i < points; ++i) {
        v[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return v;
}

double ScanGrid::step() const { return (stop - start) / static_cast<double>(points - 1); }

ScanResult distance_scan(const InterferometerSetup& setup, std::span<const double> distances,
                         DistanceStage stage) {
    std::vector<double> intensities;
    intensities.reserve(distances.size());
    for (double d : distances) {
        BeamlineConfig b = adjustment_base(setup);
        Arm& arm = coil_arm(b, setup.rfg_path);
        reference(b, setup.rfg_path).blocked = true;
        FieldSegment rfg_quarter = rotator(setup, "rfg(pi/2)");
        rfg_quarter.length = setup.rfg_length;
        if (stage == DistanceStage::Dc1ToRfg) {
            b.entrance.push_back(rotator(setup, "dc1"));
            push_guide(b.entrance, setup, d);
            arm.segments.push_back(rfg_quarter);
        } else {
            arm.segments.push_back(rfg_quarter);
            push_guide(arm.segments, setup, d);
            arm.segments.push_back(rotator(setup, "dc2"));
        }
        intensities.push_back(intensity(b));
    }
    const char* name = stage == DistanceStage::Dc1ToRfg ? "dc1_rfg_distance_m" : "rfg_dc2_distance_m";
    return locate_minima(name, {distances.begin(), distances.end()}, std::move(intensities));
}

ScanResult amplitude_scan(const InterferometerSetup& setup, double omega,
                          std::span<const double> amplitudes) {
    std::vector<double> intensities;
    intensities.reserve(amplitudes.size());
    for (double b1 : amplitudes) {
        BeamlineConfig b = adjustment_base(setup);
        b.entrance.push_back(rotator(setup, "dc1"));
        push_guide(b.entrance, setup, setup.dc1_rfg_distance);
        Arm& arm = coil_arm(b, setup.rfg_path);
        arm.segments.push_back(coil(setup, omega, b1));
        push_guide(arm.segments, setup, setup.rfg_dc2_distance);
        reference(b, setup.rfg_path).blocked = true;
        b.exit.push_back(rotator(setup, "dc2"));
        intensities.push_back(intensity(b));
    }
    return locate_minima("b1_T", {amplitudes.begin(), amplitudes.end()}, std::move(intensities));
}

ScanResult bloc_scan(const InterferometerSetup& setup, std::span<const double> fields) {
    std::vector<double> intensities;
    intensities.reserve(fields.size());
    for (double bloc : fields) {
        BeamlineConfig b = adjustment_base(setup);
        b.entrance.push_back(rotator(setup, "dc1"));
        push_guide(b.entrance, setup, setup.dc1_rfg_distance);
        coil_arm(b, setup.rfg_path).blocked = true;
        reference(b, setup.rfg_path).segments = reference_arm(setup, bloc);
        b.exit.push_back(rotator(setup, "dc2"));
        intensities.push_back(intensity(b));
    }
    return locate_minima("b_loc_T", {fields.begin(), fields.end()}, std::move(intensities));
}

std::optional<double> preferred_bloc_minimum(const ScanResult& scan) {
    if (scan.minima.empty()) return std::nullopt;
    return *std::min_element(scan.minima.begin(), scan.minima.end(),
                             [](double a, double b) { return std::abs(a) < std::abs(b); });
}

void CalibrationTable::validate() const {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (!(rows[i].frequency > rows[i - 1].frequency)) {
            throw PhysicsError("calibration: frequencies must be strictly increasing");
        }
        if (!(rows[i].b1_cyclic < rows[i - 1].b1_cyclic)) {
            throw PhysicsError(fmt::format(
                "calibration: B1 must decrease with frequency (row f = {} Hz)", rows[i].frequency));
        }
    }
}

const CalibrationRow& CalibrationTable::row_for(double frequency) const {
    for (const auto& row : rows) {
        if (std::abs(row.frequency - frequency) <= 1e-9 * std::max(1.0, std::abs(frequency))) {
            return row;
        }
    }
    throw PhysicsError(fmt::format("no calibration row for f = {} Hz", frequency));
}

InterferometerSetup CalibrationTable::apply_to(InterferometerSetup setup) const {
    setup.dc1_rfg_distance = dc1_rfg_distance;
    setup.rfg_dc2_distance = rfg_dc2_distance;
    setup.larmor_accelerator_field = larmor_accelerator_field;
    return setup;
}

CalibrationReport calibrate(const InterferometerSetup& base, const CalibrationPlan& plan) {
    CalibrationReport report;
    InterferometerSetup setup = base;

    std::vector<double> freqs = plan.frequencies;
    std::sort(freqs.begin(), freqs.end());
    if (freqs.empty()) {
        throw PhysicsError("calibration: no frequencies given");
    }
    if (std::adjacent_find(freqs.begin(), freqs.end()) != freqs.end()) {
        throw PhysicsError("calibration: duplicate frequency");
    }
    const double t1 = setup.rfg_dwell_time();
    // fail before scanning if any frequency is out of reach
    for (double f : freqs) cyclic_amplitude_closed_form(kTwoPi * f, t1);

    // each scan has to cover one Larmor period to be sure of an interior minimum
    const double v = setup.kinematics().velocity();
    const double distance_period = std::abs(kTwoPi * v / larmor_frequency(setup.guide_field));
    if (plan.distance.stop - plan.distance.start < distance_period) {
        report.warnings.push_back(fmt::format(
            "distance scan grid spans {:.4g} m, less than one Larmor period {:.4g} m",
            plan.distance.stop - plan.distance.start, distance_period));
    }
    const double bloc_period = std::abs(field_for_larmor_frequency(kTwoPi * v / setup.accelerator_length));
    if (plan.bloc.stop - plan.bloc.start < bloc_period) {
        report.warnings.push_back(fmt::format(
            "Larmor accelerator grid spans {:.4g} T, less than one Larmor period {:.4g} T",
            plan.bloc.stop - plan.bloc.start, bloc_period));
    }

    const auto distances = plan.distance.values();
    report.entrance_distance = distance_scan(setup, distances, DistanceStage::Dc1ToRfg);
    if (report.entrance_distance.extremum.boundary) {
        report.warnings.push_back("distance scan DC1-RFG: no interior minimum, keeping nominal distance");
    } else {
        setup.dc1_rfg_distance = report.entrance_distance.extremum.value;
    }
    report.exit_distance = distance_scan(setup, distances, DistanceStage::RfgToDc2);
    if (report.exit_distance.extremum.boundary) {
        report.warnings.push_back("distance scan RFG-DC2: no interior minimum, keeping nominal distance");
    } else {
        setup.rfg_dc2_distance = report.exit_distance.extremum.value;
    }

    const auto amplitudes = plan.amplitude.values();
    const double amp_step = plan.amplitude.step();
    for (double f : freqs) {
        CalibrationRow row;
        row.frequency = f;
        row.b1_cyclic = cyclic_amplitude_closed_form(kTwoPi * f, t1);
        ScanResult scan = amplitude_scan(setup, kTwoPi * f, amplitudes);
        row.b1_scan = scan.extremum.value;
        row.scan_boundary = scan.extremum.boundary;
        if (scan.extremum.boundary) {
            report.warnings.push_back(
                fmt::format("amplitude scan f = {} Hz: minimum on grid boundary", f));
        } else if (std::abs(row.b1_scan - row.b1_cyclic) > amp_step) {
            report.warnings.push_back(fmt::format(
                "amplitude scan f = {} Hz: minimum {:.6e} T differs from closed form {:.6e} T by more than one grid step",
                f, row.b1_scan, row.b1_cyclic));
        }
        report.table.rows.push_back(row);
        report.amplitude.push_back(std::move(scan));
    }

    report.bloc = bloc_scan(setup, plan.bloc.values());
    if (auto bloc = preferred_bloc_minimum(report.bloc)) {
        setup.larmor_accelerator_field = *bloc;
    } else {
        report.warnings.push_back("Larmor accelerator scan: no interior minimum, keeping nominal field");
    }

    report.table.dc1_rfg_distance = setup.dc1_rfg_distance;
    report.table.rfg_dc2_distance = setup.rfg_dc2_distance;
    report.table.larmor_accelerator_field = setup.larmor_accelerator_field;
    report.table.validate();
    return report;
}

BeamlineConfig interferometer_beamline(const InterferometerSetup& setup, double frequency,
                                       double b1, bool analyzer_inserted) {
    BeamlineConfig b = adjustment_base(setup);
    b.analyzer.reset();
    if (analyzer_inserted) b.analyzer = setup.analyzer;
    b.entrance.push_back(rotator(setup, "dc1"));
    push_guide(b.entrance, setup, setup.dc1_rfg_distance);
    Arm& arm = coil_arm(b, setup.rfg_path);
    arm.segments.push_back(coil(setup, kTwoPi * frequency, b1));
    push_guide(arm.segments, setup, setup.rfg_dc2_distance);
    reference(b, setup.rfg_path).segments = reference_arm(setup, setup.larmor_accelerator_field);
    return b;
}

std::vector<double> chi_grid(std::size_t points, double span) {
    std::vector<double> chi(points);
    for (std::size_t i = 0; i < points; ++i) {
        chi[i] = span * static_cast<double>(i) / static_cast<double>(points);
    }
    return chi;
}

Acquisition default_acquisition() {
    Acquisition a;
    a.chi = chi_grid(16);
    return a;
}

std::vector<double> Interferogram::chi() const {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.chi);
    return out;
}

std::vector<double> Interferogram::counts() const {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        out.push_back(p.sampled ? static_cast<double>(*p.sampled) : p.expected);
    }
    return out;
}

std::uint64_t acquisition_stream_seed(std::uint64_t seed, double frequency) {
    return mix64(seed ^ mix64(std::bit_cast<std::uint64_t>(frequency)));
}

Interferogram record_interferogram(const BeamlineConfig& beamline, double frequency,
                                   const Acquisition& acq) {
    if (acq.chi.empty()) {
        throw std::invalid_argument("record_interferogram: chi grid is empty");
    }
    if (!(acq.count_rate > 0.0) || !(acq.counting_time > 0.0)) {
        throw std::invalid_argument("record_interferogram: count rate and counting time must be > 0");
    }
    const TwoPathState state = propagate_beamline(beamline, 0.0);

    Interferogram out;
    out.frequency = frequency;
    out.counting_time = acq.counting_time;
    out.count_rate = acq.count_rate;
    out.seed = acq.seed;
    out.analyzer = beamline.analyzer.has_value();

    std::optional<CountingRng> rng;
    if (acq.seed) {
        out.stream_seed = acquisition_stream_seed(*acq.seed, frequency);
        rng.emplace(*out.stream_seed);
    }
    const double scale = acq.count_rate * acq.counting_time;
    for (double chi : acq.chi) {
        InterferogramPoint p;
        p.chi = chi;
        // clamp rounding noise at perfect destructive interference
        p.expected = std::max(0.0, scale * detected_intensity(apply_phase_shifter(state, chi), beamline));
        if (rng) p.sampled = rng->poisson(p.expected);
        out.points.push_back(p);
    }
    return out;
}

Interferogram record_interferogram(const InterferometerSetup& setup, double omega, double b1,
                                   const Acquisition& acquisition, bool analyzer_inserted) {
    const double f = omega / kTwoPi;
    Interferogram out = record_interferogram(
        interferometer_beamline(setup, f, b1, analyzer_inserted), f, acquisition);
    out.b1 = b1;
    return out;
}

std::vector<Interferogram> frequency_sweep(const InterferometerSetup& setup,
                                           std::span<const double> frequencies,
                                           const CalibrationTable& calibration,
                                           const Acquisition& acquisition,
                                           bool analyzer_inserted) {
    const InterferometerSetup calibrated = calibration.apply_to(setup);
    std::vector<double> amplitudes;
    for (double f : frequencies) amplitudes.push_back(calibration.row_for(f).b1_cyclic);

    std::vector<std::future<Interferogram>> tasks;
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        tasks.push_back(std::async(std::launch::async, [&, i] {
            return record_interferogram(calibrated, kTwoPi * frequencies[i], amplitudes[i],
                                        acquisition, analyzer_inserted);
        }));
    }
    std::vector<Interferogram> out;
    out.reserve(tasks.size());
    for (auto& t : tasks) out.push_back(t.get());
    return out;
}

std::vector<double> frequency_list(double stop, double step) {
    if (!(step > 0.0) || !(stop >= 0.0)) {
        throw std::invalid_argument("frequency_list: need step > 0 and stop >= 0");
    }
    const auto n = static_cast<std::size_t>(std::llround(stop / step));
    std::vector<double> f(n + 1);
    for (std::size_t i = 0; i <= n; ++i) f[i] = step * static_cast<double>(i);
    return f;
}

}  // namespace spinrot
