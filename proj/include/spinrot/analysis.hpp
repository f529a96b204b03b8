#pragma once

// Phase extraction from interferograms and the phase-versus-frequency line.

#include <array>
#include <span>
#include <vector>

#include "spinrot/experiment.hpp"

namespace spinrot {

/// Fit of c + A cos(chi + phase) = c + a cos(chi) + b sin(chi), so a = A cos(phase)
/// and b = -A sin(phase), i.e. phase = atan2(-b, a).
struct FitResult {
    double offset = 0.0;
    double amplitude = 0.0;  // >= 0
    double phase = 0.0;      // (-pi, pi]
    double offset_error = 0.0;
    double amplitude_error = 0.0;
    double phase_error = 0.0;  // capped at pi
    double reduced_chi_square = 0.0;
    /// False when amplitude < 2 amplitude_error; the phase then carries no information.
    bool phase_constrained = true;
};

/// Linear least squares with Poisson weights 1/max(count, 1); errors from the
/// inverse normal matrix. Throws std::invalid_argument for fewer than 4 points
/// or a rank-deficient design (e.g. all chi equal).
FitResult fit_sinusoid(std::span<const double> chi, std::span<const double> counts);
FitResult fit_sinusoid(const Interferogram& data);

/// Wraps to (-pi, pi].
double wrap_phase(double phase);

struct PhaseDifference {
    double value = 0.0;
    double error = 0.0;
};

/// fit.phase - reference.phase wrapped to (-pi, pi]; errors added in quadrature.
/// Throws std::invalid_argument if either phase is unconstrained.
PhaseDifference relative_phase(const FitResult& fit, const FitResult& reference);

struct PhasePoint {
    double frequency = 0.0;  // Hz
    double phase = 0.0;      // rad
    double error = 0.0;      // rad; <= 0 means unweighted
};

/// Shifts each phase by the multiple of 2 pi that brings it closest to the
/// linear extrapolation of the previous two points (the previous point for the
/// second one). Input must be sorted by frequency; the first point is unchanged.
std::vector<PhasePoint> unwrap_phases(std::span<const PhasePoint> series);

struct LinearFit {
    double slope = 0.0;      // rad/Hz
    double intercept = 0.0;  // rad
    double slope_error = 0.0;
    double intercept_error = 0.0;
    /// [var(slope), cov, cov, var(intercept)]
    std::array<double, 4> covariance{};  // row-major over (slope, intercept)
    double chi_square = 0.0;
    int degrees_of_freedom = 0;
    /// chi_square / dof, NaN with no degrees of freedom.
    double reduced_chi_square = 0.0;
};

/// Weighted (1/error^2) straight line through the series. Uses unit weights
/// unless every point has a positive error. Throws std::invalid_argument with
/// fewer than two distinct frequencies.
LinearFit fit_phase_vs_frequency(std::span<const PhasePoint> series);

}  // namespace spinrot
