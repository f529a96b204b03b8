#include "spinrot/units.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spinrot {

namespace {

struct UnitEntry {
    std::string_view symbol;
    Dimension dimension;
    double factor;
};

constexpr double kPiValue = 3.14159265358979323846;

constexpr std::array kUnits{
    UnitEntry{"m", Dimension::Length, 1.0},
    UnitEntry{"cm", Dimension::Length, 1e-2},
    UnitEntry{"mm", Dimension::Length, 1e-3},
    UnitEntry{"um", Dimension::Length, 1e-6},
    UnitEntry{"nm", Dimension::Length, 1e-9},
    UnitEntry{"angstrom", Dimension::Length, 1e-10},
    UnitEntry{"Å", Dimension::Length, 1e-10},
    UnitEntry{"T", Dimension::MagneticField, 1.0},
    UnitEntry{"mT", Dimension::MagneticField, 1e-3},
    UnitEntry{"uT", Dimension::MagneticField, 1e-6},
    UnitEntry{"G", Dimension::MagneticField, 1e-4},
    UnitEntry{"mG", Dimension::MagneticField, 1e-7},
    UnitEntry{"kG", Dimension::MagneticField, 1e-1},
    UnitEntry{"Hz", Dimension::Frequency, 1.0},
    UnitEntry{"kHz", Dimension::Frequency, 1e3},
    UnitEntry{"MHz", Dimension::Frequency, 1e6},
    UnitEntry{"s", Dimension::Time, 1.0},
    UnitEntry{"ms", Dimension::Time, 1e-3},
    UnitEntry{"us", Dimension::Time, 1e-6},
    UnitEntry{"µs", Dimension::Time, 1e-6},
    UnitEntry{"ns", Dimension::Time, 1e-9},
    UnitEntry{"min", Dimension::Time, 60.0},
    UnitEntry{"1/s", Dimension::Rate, 1.0},
    UnitEntry{"cps", Dimension::Rate, 1.0},
    UnitEntry{"rad", Dimension::Angle, 1.0},
    UnitEntry{"mrad", Dimension::Angle, 1e-3},
    UnitEntry{"deg", Dimension::Angle, kPiValue / 180.0},
    UnitEntry{"pi", Dimension::Angle, kPiValue},
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

const char* to_string(Dimension d) {
    switch (d) {
        case Dimension::Length: return "length";
        case Dimension::MagneticField: return "magnetic field";
        case Dimension::Frequency: return "frequency";
        case Dimension::Time: return "time";
        case Dimension::Rate: return "rate";
        case Dimension::Angle: return "angle";
    }
    return "?";
}

double parse_quantity(std::string_view text, Dimension expected) {
    const std::string_view s = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{}) {
        throw std::invalid_argument("expected '<number> <unit>', got '" + std::string(s) + "'");
    }
    const std::string_view unit = trim(std::string_view(ptr, static_cast<std::size_t>(s.data() + s.size() - ptr)));
    if (unit.empty()) {
        throw std::invalid_argument("missing unit in '" + std::string(s) + "' (expected a " +
                                    to_string(expected) + ")");
    }
    for (const auto& u : kUnits) {
        if (u.symbol == unit) {
            if (u.dimension != expected && !(expected == Dimension::Rate && u.dimension == Dimension::Frequency)) {
                throw std::invalid_argument("unit '" + std::string(unit) + "' is a " +
                                            to_string(u.dimension) + ", expected a " +
                                            to_string(expected));
            }
            const double si = value * u.factor;
            if (!std::isfinite(si)) {
                throw std::invalid_argument("value '" + std::string(s) + "' is not finite");
            }
            return si;
        }
    }
    throw std::invalid_argument("unknown unit '" + std::string(unit) + "'");
}

}  // namespace spinrot
