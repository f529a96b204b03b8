#include "spinrot/spinor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spinrot/errors.hpp"

namespace spinrot {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr Complex kI{0.0, 1.0};

// -(i/2) (w . sigma) xi, with w the Larmor vector in rad/s.
Spinor pauli_rhs(const Vec3& w, const Spinor& s) {
    const Complex a = w.z * s.up + Complex{w.x, -w.y} * s.down;
    const Complex b = Complex{w.x, w.y} * s.up - w.z * s.down;
    return {-0.5 * kI * a, -0.5 * kI * b};
}

}  // namespace

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

Spinor Spinor::plus_x() { return {{kInvSqrt2, 0.0}, {kInvSqrt2, 0.0}}; }
Spinor Spinor::minus_x() { return {{kInvSqrt2, 0.0}, {-kInvSqrt2, 0.0}}; }
Spinor Spinor::plus_y() { return {{kInvSqrt2, 0.0}, {0.0, kInvSqrt2}}; }
Spinor Spinor::minus_y() { return {{kInvSqrt2, 0.0}, {0.0, -kInvSqrt2}}; }

Spinor operator*(Complex s, const Spinor& v) { return {s * v.up, s * v.down}; }
Spinor operator+(const Spinor& a, const Spinor& b) { return {a.up + b.up, a.down + b.down}; }
Spinor operator-(const Spinor& a, const Spinor& b) { return {a.up - b.up, a.down - b.down}; }

Complex inner(const Spinor& a, const Spinor& b) {
    return std::conj(a.up) * b.up + std::conj(a.down) * b.down;
}

double max_component_error(const Spinor& a, const Spinor& b) {
    return std::max(std::abs(a.up - b.up), std::abs(a.down - b.down));
}

void require_normalized(const Spinor& s, const char* what, double tolerance) {
    const double n2 = s.norm_squared();
    if (!std::isfinite(n2) || std::abs(n2 - 1.0) > tolerance) {
        throw std::invalid_argument(std::string(what) + ": spinor is not normalized (|xi|^2 = " +
                                    std::to_string(n2) + ")");
    }
}

Spinor Unitary2::operator*(const Spinor& s) const {
    return {m[0] * s.up + m[1] * s.down, m[2] * s.up + m[3] * s.down};
}

Unitary2 Unitary2::operator*(const Unitary2& o) const {
    Unitary2 r;
    r.m[0] = m[0] * o.m[0] + m[1] * o.m[2];
    r.m[1] = m[0] * o.m[1] + m[1] * o.m[3];
    r.m[2] = m[2] * o.m[0] + m[3] * o.m[2];
    r.m[3] = m[2] * o.m[1] + m[3] * o.m[3];
    return r;
}

Unitary2 Unitary2::adjoint() const {
    Unitary2 r;
    r.m = {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
    return r;
}

Complex Unitary2::determinant() const { return m[0] * m[3] - m[1] * m[2]; }

Unitary2 rotation_unitary(const Vec3& axis, double angle) {
    const double n = norm(axis);
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9) {
        throw std::invalid_argument("rotation_unitary: axis must have unit norm, got |axis| = " +
                                    std::to_string(n));
    }
    if (!std::isfinite(angle)) {
        throw std::invalid_argument("rotation_unitary: angle must be finite");
    }
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    // cos(a/2) I - i sin(a/2) (n . sigma)
    Unitary2 u;
    u.m[0] = {c, -s * axis.z};
    u.m[1] = Complex{0.0, -s} * Complex{axis.x, -axis.y};
    u.m[2] = Complex{0.0, -s} * Complex{axis.x, axis.y};
    u.m[3] = {c, s * axis.z};
    return u;
}

Vec3 bloch_vector(const Spinor& s) {
    const Complex cross = std::conj(s.up) * s.down;
    return {2.0 * cross.real(), 2.0 * cross.imag(), std::norm(s.up) - std::norm(s.down)};
}

Vec3 rotation_vector(double omega1, double omega, double t) { return {omega1 * t, omega * t, 0.0}; }

double alpha_magnitude(double omega1, double omega, double t) {
    return t * std::hypot(omega1, omega);
}

Spinor evolve_rotating_frame(const Spinor& initial, double b1, double omega, double t,
                             const PhysicalConstants& constants) {
    require_normalized(initial, "evolve_rotating_frame");
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("evolve_rotating_frame: t must be finite and >= 0");
    }
    if (!std::isfinite(b1) || !std::isfinite(omega)) {
        throw std::invalid_argument("evolve_rotating_frame: B1 and Omega must be finite");
    }
    const double omega1 = larmor_frequency(b1, constants);
    const Vec3 alpha_rot = rotation_vector(omega1, omega, t);
    const double alpha = alpha_magnitude(omega1, omega, t);

    Unitary2 in_rotating_frame = Unitary2::identity();
    if (alpha > 0.0) {
        in_rotating_frame = rotation_unitary(alpha_rot * (1.0 / alpha), alpha);
    }
    // exp(+i Omega S_y t / hbar) = exp(-i (-Omega t) sigma_y / 2)
    const Unitary2 to_lab = rotation_unitary({0.0, 1.0, 0.0}, -omega * t);
    return to_lab * (in_rotating_frame * initial);
}

IntegrationResult numeric_integrate(const Spinor& initial, const FieldFunction& field, double t_end,
                                    std::size_t steps, const PhysicalConstants& constants) {
    if (steps == 0) {
        throw std::invalid_argument("numeric_integrate: steps must be >= 1");
    }
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
        throw std::invalid_argument("numeric_integrate: t_end must be finite and >= 0");
    }
    const double gamma = -2.0 * constants.neutron_moment / constants.hbar;  // rad/(s T)
    auto larmor = [&](double t) {
        const Vec3 b = field(t);
        if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.z)) {
            throw NumericError("numeric_integrate: non-finite field at t = " + std::to_string(t));
        }
        return b * gamma;
    };

    const double h = t_end / static_cast<double>(steps);
    const double initial_norm = initial.norm_squared();
    Spinor s = initial;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = h * static_cast<double>(k);
        const Vec3 w0 = larmor(t);
        const Vec3 wm = larmor(t + 0.5 * h);
        const Vec3 w1 = larmor(t + h);
        const Spinor k1 = pauli_rhs(w0, s);
        const Spinor k2 = pauli_rhs(wm, s + Complex{0.5 * h} * k1);
        const Spinor k3 = pauli_rhs(wm, s + Complex{0.5 * h} * k2);
        const Spinor k4 = pauli_rhs(w1, s + Complex{h} * k3);
        s = s + Complex{h / 6.0} * (k1 + Complex{2.0} * k2 + Complex{2.0} * k3 + k4);
    }
    return {s, std::abs(s.norm_squared() - initial_norm)};
}

}  // namespace spinrot
