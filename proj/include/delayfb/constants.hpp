#pragma once

namespace delayfb {

// Physical constants (2019 SI redefinition, exact).
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

}  // namespace delayfb
