#pragma once

// Spin-1/2 algebra: states, SU(2) rotations, the closed-form evolution in a
// uniformly rotating field and a fixed-step integrator of the Pauli equation
// that serves as an independent check of the closed form.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>

#include "spinrot/constants.hpp"

namespace spinrot {

using Complex = std::complex<double>;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr bool operator==(const Vec3&) const = default;
};

double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);

/// Two-component spinor in the sigma_z eigenbasis.
struct Spinor {
    Complex up{1.0, 0.0};
    Complex down{0.0, 0.0};

    static Spinor plus_z() { return {{1.0, 0.0}, {0.0, 0.0}}; }
    static Spinor minus_z() { return {{0.0, 0.0}, {1.0, 0.0}}; }
    static Spinor plus_x();
    static Spinor minus_x();
    /// (1, i)/sqrt(2)
    static Spinor plus_y();
    /// (1, -i)/sqrt(2)
    static Spinor minus_y();

    double norm_squared() const { return std::norm(up) + std::norm(down); }
};

Spinor operator*(Complex s, const Spinor& v);
Spinor operator+(const Spinor& a, const Spinor& b);
Spinor operator-(const Spinor& a, const Spinor& b);

/// <a|b>
Complex inner(const Spinor& a, const Spinor& b);

/// Largest entrywise modulus of a - b.
double max_component_error(const Spinor& a, const Spinor& b);

/// Throws std::invalid_argument unless |up|^2 + |down|^2 = 1 within `tolerance`.
void require_normalized(const Spinor& s, const char* what, double tolerance = 1e-9);

/// 2x2 complex matrix, row-major.
struct Unitary2 {
    std::array<Complex, 4> m{Complex{1.0}, Complex{0.0}, Complex{0.0}, Complex{1.0}};

    static Unitary2 identity() { return {}; }

    Complex operator()(std::size_t row, std::size_t col) const { return m[2 * row + col]; }

    Spinor operator*(const Spinor& s) const;
    Unitary2 operator*(const Unitary2& o) const;
    Unitary2 adjoint() const;
    Complex determinant() const;
};

/// exp(-i angle (axis . sigma) / 2). Throws std::invalid_argument if |axis| != 1 within 1e-9.
Unitary2 rotation_unitary(const Vec3& axis, double angle);

/// (<sigma_x>, <sigma_y>, <sigma_z>) for a normalized spinor.
Vec3 bloch_vector(const Spinor& s);

/// Rotating-frame rotation vector (omega1 t, Omega t, 0).
Vec3 rotation_vector(double omega1, double omega, double t);

/// t sqrt(omega1^2 + Omega^2)
double alpha_magnitude(double omega1, double omega, double t);

/// Spinor after time t in the lab field B(t) = B1 (cos Omega t, 0, sin Omega t).
///
/// Uses the rotating-frame solution xi(t) = U(Omega) U(alpha_rot) xi(0) with
/// U(Omega) = exp(+i Omega S_y t / hbar) and U(alpha_rot) = exp(-i alpha_rot . sigma / 2).
/// At alpha(t1) = 2 pi a |+y> input returns as -exp(i Omega t1 / 2)|+y>.
Spinor evolve_rotating_frame(const Spinor& initial, double b1, double omega, double t,
                             const PhysicalConstants& constants = kCodata2018);

/// Lab-frame field, tesla, as a function of time since entry.
using FieldFunction = std::function<Vec3(double)>;

struct IntegrationResult {
    Spinor state;
    /// | |state|^2 - |initial|^2 |; the integrator never renormalizes.
    double norm_drift = 0.0;
};

/// Classical 4th-order Runge-Kutta for i hbar dxi/dt = -mu sigma . B(t) xi with
/// `steps` equal steps on [0, t_end]. Throws NumericError on non-finite field
/// values and std::invalid_argument if steps == 0 or t_end < 0.
IntegrationResult numeric_integrate(const Spinor& initial, const FieldFunction& field, double t_end,
                                    std::size_t steps,
                                    const PhysicalConstants& constants = kCodata2018);

}  // namespace spinrot
