#include "spinrot/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace spinrot {

FitResult fit_sinusoid(std::span<const double> chi, std::span<const double> counts) {
    const std::size_t n = chi.size();
    if (counts.size() != n) {
        throw std::invalid_argument("fit_sinusoid: chi and counts differ in length");
    }
    if (n < 4) {
        throw std::invalid_argument("fit_sinusoid: need at least 4 points");
    }

    Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d row{1.0, std::cos(chi[i]), std::sin(chi[i])};
        const double w = 1.0 / std::max(counts[i], 1.0);
        normal += w * row * row.transpose();
        rhs += w * counts[i] * row;
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
    lu.setThreshold(1e-10);
    if (lu.rank() < 3) {
        throw std::invalid_argument("fit_sinusoid: design is rank deficient (chi values do not span a period)");
    }
    const Eigen::Matrix3d cov = lu.inverse();
    const Eigen::Vector3d p = cov * rhs;
    const double c = p[0], a = p[1], b = p[2];

    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double model = c + a * std::cos(chi[i]) + b * std::sin(chi[i]);
        const double r = counts[i] - model;
        chi2 += r * r / std::max(counts[i], 1.0);
    }

    FitResult fit;
    fit.offset = c;
    fit.offset_error = std::sqrt(cov(0, 0));
    fit.amplitude = std::hypot(a, b);
    fit.phase = wrap_phase(std::atan2(-b, a));
    fit.reduced_chi_square = chi2 / static_cast<double>(n - 3);

    const double A = fit.amplitude;
    const double vaa = cov(1, 1), vbb = cov(2, 2), vab = cov(1, 2);
    if (A > 0.0) {
        fit.amplitude_error = std::sqrt(std::max(0.0, (a * a * vaa + b * b * vbb + 2.0 * a * b * vab) / (A * A)));
        const double var_phase = (b * b * vaa + a * a * vbb - 2.0 * a * b * vab) / (A * A * A * A);
        fit.phase_error = std::min(std::sqrt(std::max(0.0, var_phase)), kPi);
    } else {
        fit.amplitude_error = std::sqrt(0.5 * (vaa + vbb));
        fit.phase_error = kPi;
    }
    fit.phase_constrained = A >= 2.0 * fit.amplitude_error;
    return fit;
}

FitResult fit_sinusoid(const Interferogram& data) {
    const auto chi = data.chi();
    const auto counts = data.counts();
    return fit_sinusoid(chi, counts);
}

double wrap_phase(double phase) {
    double w = std::remainder(phase, kTwoPi);  // [-pi, pi]
    if (w <= -kPi) w += kTwoPi;
    return w;
}

PhaseDifference relative_phase(const FitResult& fit, const FitResult& reference) {
    if (!fit.phase_constrained || !reference.phase_constrained) {
        throw std::invalid_argument("relative_phase: phase is unconstrained (amplitude below 2 sigma)");
    }
    return {wrap_phase(fit.phase - reference.phase), std::hypot(fit.phase_error, reference.phase_error)};
}

std::vector<PhasePoint> unwrap_phases(std::span<const PhasePoint> series) {
    std::vector<PhasePoint> out(series.begin(), series.end());
    for (std::size_t i = 1; i < out.size(); ++i) {
        double predicted = out[i - 1].phase;
        if (i >= 2) {
            const double df = out[i - 1].frequency - out[i - 2].frequency;
            if (df != 0.0) {
                const double slope = (out[i - 1].phase - out[i - 2].phase) / df;
                predicted += slope * (out[i].frequency - out[i - 1].frequency);
            }
        }
        const double turns = std::round((predicted - out[i].phase) / kTwoPi);
        out[i].phase += kTwoPi * turns;
    }
    return out;
}

LinearFit fit_phase_vs_frequency(std::span<const PhasePoint> series) {
    std::vector<double> distinct;
    for (const auto& p : series) distinct.push_back(p.frequency);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) {
        throw std::invalid_argument("fit_phase_vs_frequency: need at least 2 distinct frequencies");
    }

    const bool weighted = std::all_of(series.begin(), series.end(),
                                      [](const PhasePoint& p) { return p.error > 0.0; });
    // centred frequencies keep the 2x2 system well conditioned for kHz abscissae
    double sw = 0.0, swf = 0.0;
    for (const auto& p : series) {
        const double w = weighted ? 1.0 / (p.error * p.error) : 1.0;
        sw += w;
        swf += w * p.frequency;
    }
    const double fbar = swf / sw;
    double sxx = 0.0, sxy = 0.0, sy = 0.0;
    for (const auto& p : series) {
        const double w = weighted ? 1.0 / (p.error * p.error) : 1.0;
        const double x = p.frequency - fbar;
        sxx += w * x * x;
        sxy += w * x * p.phase;
        sy += w * p.phase;
    }

    LinearFit fit;
    fit.slope = sxy / sxx;
    const double mean = sy / sw;  // value at fbar
    fit.intercept = mean - fit.slope * fbar;

    fit.chi_square = 0.0;
    for (const auto& p : series) {
        const double w = weighted ? 1.0 / (p.error * p.error) : 1.0;
        const double r = p.phase - (fit.intercept + fit.slope * p.frequency);
        fit.chi_square += w * r * r;
    }
    fit.degrees_of_freedom = static_cast<int>(series.size()) - 2;
    fit.reduced_chi_square = fit.degrees_of_freedom > 0
                                 ? fit.chi_square / fit.degrees_of_freedom
                                 : std::numeric_limits<double>::quiet_NaN();

    // Known-variance covariance when weighted; residual-scaled otherwise.
    double scale = 1.0;
    if (!weighted) {
        scale = fit.degrees_of_freedom > 0 ? fit.chi_square / fit.degrees_of_freedom : 0.0;
    }
    const double var_slope = scale / sxx;
    const double var_mean = scale / sw;
    const double var_intercept = var_mean + fbar * fbar * var_slope;
    const double cov = -fbar * var_slope;
    fit.covariance = {var_slope, cov, cov, var_intercept};
    fit.slope_error = std::sqrt(var_slope);
    fit.intercept_error = std::sqrt(var_intercept);
    return fit;
}

}  // namespace spinrot
