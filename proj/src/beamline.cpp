#include "spinrot/beamline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "spinrot/errors.hpp"

namespace spinrot {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// (I + s n.sigma)/2 applied to xi.
Spinor project(const Vec3& n, double s, const Spinor& xi) {
    const Complex a = n.z * xi.up + Complex{n.x, -n.y} * xi.down;
    const Complex b = Complex{n.x, n.y} * xi.up - n.z * xi.down;
    return {0.5 * (xi.up + s * a), 0.5 * (xi.down + s * b)};
}

bool is_unit(const Vec3& v) { return std::abs(norm(v) - 1.0) <= 1e-9; }

void validate_segment(const FieldSegment& seg, const std::string& where) {
    if (!(seg.length > 0.0) || !std::isfinite(seg.length)) {
        throw ConfigError(where + ".length: must be > 0");
    }
    std::visit(Overloaded{
                   [](const FieldFree&) {},
                   [&](const StaticField& f) {
                       if (!std::isfinite(norm(f.field))) {
                           throw ConfigError(where + ".field: must be finite");
                       }
                   },
                   [&](const RotatingField& f) {
                       if (!std::isfinite(f.amplitude) || !std::isfinite(f.angular_frequency) ||
                           !std::isfinite(f.ambient_field) || !std::isfinite(f.resolved_z_offset()) ||
                           !std::isfinite(f.imbalance)) {
                           throw ConfigError(where + ": rotating field parameters must be finite");
                       }
                   },
                   [&](const DCRotator& r) {
                       if (!is_unit(r.axis)) {
                           throw ConfigError(where + ".axis: must have unit norm");
                       }
                       if (!std::isfinite(r.angle)) {
                           throw ConfigError(where + ".angle: must be finite");
                       }
                   },
               },
               seg.kind);
}

void validate_segments(const std::vector<FieldSegment>& segs, const std::string& name) {
    for (std::size_t i = 0; i < segs.size(); ++i) {
        validate_segment(segs[i], name + "[" + std::to_string(i) + "]");
    }
}

}  // namespace

double velocity_from_wavelength(double wavelength, const PhysicalConstants& c) {
    if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
        throw std::invalid_argument("velocity_from_wavelength: wavelength must be > 0");
    }
    return c.planck / (c.neutron_mass * wavelength);
}

NeutronKinematics::NeutronKinematics(double wavelength, const PhysicalConstants& c)
    : wavelength_(wavelength), velocity_(velocity_from_wavelength(wavelength, c)) {}

double dwell_time(double segment_length, const NeutronKinematics& kinematics) {
    return segment_length / kinematics.velocity();
}

const char* to_string(PathId path) { return path == PathId::I ? "I" : "II"; }

Vec3 RotatingField::field_at(double t) const {
    const double phase = angular_frequency * t;
    return {amplitude * (1.0 + imbalance) * std::cos(phase), 0.0,
            amplitude * std::sin(phase) + ambient_field + resolved_z_offset()};
}

bool RotatingField::has_closed_form() const {
    return imbalance == 0.0 && ambient_field + resolved_z_offset() == 0.0;
}

void BeamlineConfig::validate() const {
    if (!(contrast >= 0.0 && contrast <= 1.0)) {
        throw ConfigError("contrast: must lie in [0, 1]");
    }
    if (!std::isfinite(guide_field)) {
        throw ConfigError("guide_field: must be finite");
    }
    if (!(rfg_length > 0.0)) {
        throw ConfigError("rfg_length: must be > 0");
    }
    if (integrator_steps == 0) {
        throw ConfigError("integrator_steps: must be >= 1");
    }
    if (std::abs(incident.norm_squared() - 1.0) > 1e-9) {
        throw ConfigError("incident: spinor must be normalized");
    }
    if (analyzer) {
        if (!is_unit(analyzer->axis)) {
            throw ConfigError("analyzer.axis: must have unit norm");
        }
        for (double t : {analyzer->pass_transmission, analyzer->block_transmission}) {
            if (!(t >= 0.0 && t <= 1.0)) {
                throw ConfigError("analyzer: transmissions must lie in [0, 1]");
            }
        }
    }
    validate_segments(entrance, "entrance");
    validate_segments(path_i.segments, "path_i");
    validate_segments(path_ii.segments, "path_ii");
    validate_segments(exit, "exit");
}

Spinor propagate_segment(const Spinor& state, const FieldSegment& segment,
                         const NeutronKinematics& kinematics, std::size_t steps) {
    require_normalized(state, "propagate_segment");
    const double t = dwell_time(segment.length, kinematics);
    return std::visit(
        Overloaded{
            [&](const FieldFree&) { return state; },
            [&](const StaticField& f) {
                const double b = norm(f.field);
                if (b == 0.0) return state;
                return rotation_unitary(f.field * (1.0 / b), larmor_frequency(b) * t) * state;
            },
            [&](const RotatingField& f) {
                if (f.has_closed_form()) {
                    return evolve_rotating_frame(state, f.amplitude, f.angular_frequency, t);
                }
                return numeric_integrate(state, [&f](double tau) { return f.field_at(tau); }, t,
                                         steps)
                    .state;
            },
            [&](const DCRotator& r) { return rotation_unitary(r.axis, r.angle) * state; },
        },
        segment.kind);
}

Spinor propagate_segments(Spinor state, const std::vector<FieldSegment>& segments,
                          const NeutronKinematics& kinematics, std::size_t steps) {
    for (const auto& seg : segments) {
        state = propagate_segment(state, seg, kinematics, steps);
    }
    return state;
}

TwoPathState apply_phase_shifter(TwoPathState state, double chi) {
    state.path_ii.amplitude *= std::polar(1.0, chi);
    return state;
}

TwoPathState propagate_beamline(const BeamlineConfig& config, double chi) {
    config.validate();
    const auto& kin = config.kinematics;
    const std::size_t steps = config.integrator_steps;
    const Spinor split = propagate_segments(config.incident, config.entrance, kin, steps);

    constexpr double kHalf = 0.70710678118654752440;
    auto arm = [&](const Arm& a) {
        PathState p;
        p.amplitude = a.blocked ? Complex{0.0} : Complex{kHalf};
        p.spinor = propagate_segments(split, a.segments, kin, steps);
        p.spinor = propagate_segments(p.spinor, config.exit, kin, steps);
        return p;
    };
    TwoPathState out{arm(config.path_i), arm(config.path_ii)};
    return apply_phase_shifter(out, chi);
}

double detected_intensity(const TwoPathState& state, const BeamlineConfig& config) {
    const Spinor a = state.path_i.amplitude * state.path_i.spinor;
    const Spinor b = state.path_ii.amplitude * state.path_ii.spinor;

    // each path reaches the O-beam through the last plate with amplitude 1/sqrt(2)
    auto channel = [&](const Spinor& pa, const Spinor& pb) {
        return 0.5 * (std::real(inner(pa, pa)) + std::real(inner(pb, pb)) +
                      2.0 * config.contrast * std::real(inner(pa, pb)));
    };
    if (!config.analyzer) {
        return channel(a, b);
    }
    const Analyzer& an = *config.analyzer;
    const Vec3 n = an.axis * (1.0 / norm(an.axis));
    // P+ and P- are orthogonal projectors, so <a|P|b> = <Pa|Pb>.
    return an.pass_transmission * channel(project(n, +1.0, a), project(n, +1.0, b)) +
           an.block_transmission * channel(project(n, -1.0, a), project(n, -1.0, b));
}

}  // namespace spinrot
