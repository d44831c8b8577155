#pragma once

namespace menr::constants {

inline constexpr double pi = 3.14159265358979323846;

// Exact by SI definition.
inline constexpr double speed_of_light = 299792458.0;  // m/s

// Sidereal Earth rotation rate.
inline constexpr double earth_rotation_rate = 7.2921159e-5;  // rad/s

// Default laboratory latitude, 43 deg.
inline constexpr double default_latitude_rad = 43.0 * pi / 180.0;

inline constexpr double fine_structure_alpha = 1.0 / 137.036;

}  // namespace menr::constants
