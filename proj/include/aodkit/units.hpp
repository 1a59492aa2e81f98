#pragma once

// SI is used everywhere inside the library. These helpers exist for the I/O
// boundary (config files, CSV, reports), which speak um / MHz / ns / deg.

#include <numbers>

namespace aodkit::units {

inline constexpr double pi = std::numbers::pi;

constexpr double um(double v) { return v * 1e-6; }
constexpr double nm(double v) { return v * 1e-9; }
constexpr double mm(double v) { return v * 1e-3; }
constexpr double MHz(double v) { return v * 1e6; }
constexpr double ns(double v) { return v * 1e-9; }
constexpr double us(double v) { return v * 1e-6; }
constexpr double ms(double v) { return v * 1e-3; }
constexpr double deg(double v) { return v * pi / 180.0; }

constexpr double to_um(double m) { return m * 1e6; }
constexpr double to_nm(double m) { return m * 1e9; }
constexpr double to_MHz(double hz) { return hz * 1e-6; }
constexpr double to_ns(double s) { return s * 1e9; }
constexpr double to_us(double s) { return s * 1e6; }
constexpr double to_deg(double rad) { return rad * 180.0 / pi; }

}  // namespace aodkit::units
