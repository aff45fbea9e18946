#pragma once

// Physical constants (CODATA 2018). Configs may carry their own overrides for
// testing; library code always uses these values.

namespace omcool::constants {

inline constexpr double hbar = 1.054571817e-34; // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J/K (exact)
inline constexpr double speed_of_light = 299792458.0; // m/s (exact)
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

} // namespace omcool::constants
