#pragma once

// Ordered-segment model of the interferometer: kinematics, field segments,
// the two arms between the first and last crystal plate, and the detector.

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spinrot/constants.hpp"
#include "spinrot/spinor.hpp"

namespace spinrot {

/// de Broglie velocity h / (m lambda). Throws std::invalid_argument for lambda <= 0.
double velocity_from_wavelength(double wavelength, const PhysicalConstants& c = kCodata2018);

class NeutronKinematics {
public:
    /// Throws std::invalid_argument unless wavelength > 0 and finite.
    explicit NeutronKinematics(double wavelength, const PhysicalConstants& c = kCodata2018);

    double wavelength() const { return wavelength_; }
    double velocity() const { return velocity_; }

private:
    double wavelength_;
    double velocity_;
};

/// Time of flight through a segment of the given length.
double dwell_time(double segment_length, const NeutronKinematics& kinematics);

struct FieldFree {};

struct StaticField {
    Vec3 field;  // T
};

/// Coil field B1 (1+imbalance) cos(Omega t) e_x + (B1 sin(Omega t) + ambient + z_offset) e_z,
/// with t measured from entry. The ambient field is the guide field the coil
/// sits in; the z offset defaults to -ambient, which leaves the pure rotating field.
struct RotatingField {
    double amplitude = 0.0;          // B1, T
    double angular_frequency = 0.0;  // Omega, rad/s
    double ambient_field = 0.0;      // T
    std::optional<double> z_offset;  // T
    double imbalance = 0.0;

    double resolved_z_offset() const { return z_offset.value_or(-ambient_field); }
    Vec3 field_at(double t) const;
    /// True when the rotating-frame closed form describes the segment exactly.
    bool has_closed_form() const;
};

/// Idealised DC spin rotator: a rotation by `angle` about `axis`, independent of length.
struct DCRotator {
    Vec3 axis{1.0, 0.0, 0.0};
    double angle = 0.0;
};

using SegmentKind = std::variant<FieldFree, StaticField, RotatingField, DCRotator>;

struct FieldSegment {
    SegmentKind kind;
    double length = 0.0;  // m
    std::string label;
};

enum class PathId { I, II };

const char* to_string(PathId path);

struct Arm {
    std::vector<FieldSegment> segments;
    /// Absorber in the arm; its amplitude is dropped.
    bool blocked = false;
};

/// Spin filter in front of the detector. The `axis` eigenstate passes with
/// `pass_transmission`, the opposite one with `block_transmission`.
struct Analyzer {
    Vec3 axis{0.0, 1.0, 0.0};
    double pass_transmission = 0.4;
    double block_transmission = 0.0;
};

inline constexpr std::size_t kDefaultIntegratorSteps = 20000;

struct BeamlineConfig {
    NeutronKinematics kinematics{1.9e-10};
    Spinor incident = Spinor::plus_y();
    /// Segments before the first plate, shared by both paths.
    std::vector<FieldSegment> entrance;
    Arm path_i;
    Arm path_ii;
    /// Segments between the last plate and the analyzer (e.g. DC2).
    std::vector<FieldSegment> exit;
    double guide_field = 9.0 * kGauss;
    double contrast = 1.0;
    std::optional<Analyzer> analyzer;
    PathId rfg_path = PathId::II;
    double rfg_length = 0.02;
    std::size_t integrator_steps = kDefaultIntegratorSteps;

    /// Throws ConfigError naming the offending field or segment index.
    void validate() const;
};

struct PathState {
    Complex amplitude{0.0};
    Spinor spinor;
};

struct TwoPathState {
    PathState path_i;
    PathState path_ii;
};

/// Evolves a spinor through one segment. Rotating fields without a closed form
/// are integrated numerically with `steps` steps.
Spinor propagate_segment(const Spinor& state, const FieldSegment& segment,
                         const NeutronKinematics& kinematics,
                         std::size_t steps = kDefaultIntegratorSteps);

Spinor propagate_segments(Spinor state, const std::vector<FieldSegment>& segments,
                          const NeutronKinematics& kinematics,
                          std::size_t steps = kDefaultIntegratorSteps);

/// Splits the incident state 50/50 after the entrance segments, evolves both
/// arms and the exit segments, and applies the phase shifter exp(i chi) to path II.
TwoPathState propagate_beamline(const BeamlineConfig& config, double chi);

/// Multiplies the path II amplitude by exp(i chi).
TwoPathState apply_phase_shifter(TwoPathState state, double chi);

/// O-beam intensity, 1 for identical paths in phase; the interference term is scaled by config.contrast and,
/// when an analyzer is present, each spin channel is weighted by its transmission.
double detected_intensity(const TwoPathState& state, const BeamlineConfig& config);

}  // namespace spinrot
