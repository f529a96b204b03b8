#pragma once

namespace spinrot {

/// Physical constants in SI units. The neutron magnetic moment is negative.
struct PhysicalConstants {
    double hbar;              // J s
    double planck;            // J s
    double neutron_mass;      // kg
    double neutron_moment;    // J/T
};

/// CODATA 2018 recommended values. Every data file echoes these.
inline constexpr PhysicalConstants kCodata2018{
    1.054571817e-34,
    6.62607015e-34,
    1.67492749804e-27,
    -9.6623651e-27,
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline constexpr double kGauss = 1e-4;  // tesla

/// Larmor precession rate omega = -2 mu B / hbar; positive for B > 0 since mu < 0.
constexpr double larmor_frequency(double field, const PhysicalConstants& c = kCodata2018) {
    return -2.0 * c.neutron_moment * field / c.hbar;
}

/// Inverse of larmor_frequency.
constexpr double field_for_larmor_frequency(double omega, const PhysicalConstants& c = kCodata2018) {
    return -omega * c.hbar / (2.0 * c.neutron_moment);
}

}  // namespace spinrot
