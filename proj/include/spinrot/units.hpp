#pragma once

#include <string_view>

namespace spinrot {

enum class Dimension { Length, MagneticField, Frequency, Time, Rate, Angle };

const char* to_string(Dimension d);

/// Parses "<number> <unit>" (e.g. "9 G", "1.9 angstrom", "20 kHz") into SI.
/// A bare number is rejected; so is a unit of another dimension.
/// Throws std::invalid_argument with a message suitable for a config error.
double parse_quantity(std::string_view text, Dimension expected);

}  // namespace spinrot
