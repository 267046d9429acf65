#pragma once

namespace sapa::constants {

// CODATA 2018 exact values.
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double h_planck = 6.62607015e-34;       // J s
inline constexpr double k_boltzmann = 1.380649e-23;      // J / K
inline constexpr double elementary_charge = 1.602176634e-19;  // C

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Configs quote ordinary frequencies in Hz; the dynamics run on angular
// frequencies throughout.
inline constexpr double hz_to_rad(double f_hz) { return two_pi * f_hz; }
inline constexpr double rad_to_hz(double w) { return w / two_pi; }

inline constexpr double uev_to_joule(double uev)
{
    return uev * 1e-6 * elementary_charge;
}

inline constexpr double joule_to_uev(double joule)
{
    return joule / (1e-6 * elementary_charge);
}

}  // namespace sapa::constants
