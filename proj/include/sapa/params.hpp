#pragma once

#include "sapa/constants.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

// Physical parameter containers and the small closed-form relations
// derived from them. Everything is stored in SI: angular frequencies in
// rad/s, energies in J, times in s. Config-facing unit conversion lives
// in the config layer.

namespace sapa {

struct CavityParams {
    double omega_r = 0;    ///< cavity angular frequency, rad/s
    double kappa_in = 0;   ///< input port rate, rad/s
    double kappa_out = 0;  ///< output port rate, rad/s
    double kappa_int = 0;  ///< internal loss rate, rad/s

    double kappa_total() const { return kappa_in + kappa_out + kappa_int; }

    void validate() const
    {
        if (omega_r <= 0) {
            throw std::invalid_argument("cavity: omega_r must be > 0");
        }
        if (kappa_in < 0 || kappa_out < 0 || kappa_int < 0) {
            throw std::invalid_argument("cavity: port rates must be >= 0");
        }
        if (kappa_total() <= 0) {
            throw std::invalid_argument("cavity: total kappa must be > 0");
        }
    }
};

struct DqdParams {
    double epsilon = 0;    ///< interdot detuning, J
    double t_c = 0;        ///< tunnel coupling, J (gap at epsilon=0 is 2 t_c)
    double g_c = 0;        ///< bare charge-cavity coupling, rad/s
    double gamma_1 = 0;    ///< relaxation rate, rad/s
    double gamma_phi = 0;  ///< pure dephasing rate, rad/s
    double lever_arm = 0;  ///< gate-voltage to detuning conversion, eV/V

    double gamma_2() const { return 0.5 * gamma_1 + gamma_phi; }

    void validate() const
    {
        if (t_c < 0) {
            throw std::invalid_argument("dqd: t_c must be >= 0");
        }
        if (gamma_1 < 0 || gamma_phi < 0) {
            throw std::invalid_argument("dqd: rates must be >= 0");
        }
    }
};

struct SystemParams {
    CavityParams cavity;
    std::vector<DqdParams> dqds;  // one or two

    void validate() const
    {
        cavity.validate();
        if (dqds.empty() || dqds.size() > 2) {
            throw std::invalid_argument("system: need 1 or 2 DQDs");
        }
        for (const auto& d : dqds) {
            d.validate();
        }
    }
};

/// One coherent input tone referred to the device input port.
struct DriveTone {
    double frequency = 0;  ///< rad/s
    double amplitude = 0;  ///< sqrt(photons/s) incident flux amplitude
    double phase = 0;      ///< rad; the field is amplitude * e^{-i(w t + phase)}
};

/// Charge-qubit transition frequency, omega_q = sqrt(eps^2 + 4 t_c^2)/hbar.
inline double qubit_frequency(double epsilon, double t_c)
{
    return std::sqrt(epsilon * epsilon + 4.0 * t_c * t_c) / constants::hbar;
}

struct EffectiveCouplings {
    double transverse = 0;    ///< rad/s, multiplies sigma_x-like terms
    double longitudinal = 0;  ///< rad/s, multiplies sigma_z-like terms
};

/// Decomposition of the charge coupling g_c sigma_z (a + a^dag) in the
/// qubit eigenbasis. Satisfies g_t^2 + g_l^2 = g_c^2.
inline EffectiveCouplings effective_couplings(double epsilon, double t_c,
                                              double g_c)
{
    const double gap = std::sqrt(epsilon * epsilon + 4.0 * t_c * t_c);
    if (gap == 0) {
        throw std::invalid_argument(
            "effective_couplings: epsilon = t_c = 0 leaves the eigenbasis "
            "undefined");
    }
    return {g_c * 2.0 * t_c / gap, g_c * epsilon / gap};
}

/// Gate-voltage excursion to detuning energy via the lever arm.
inline double gate_to_detuning(double delta_v, double lever_arm)
{
    return lever_arm * constants::elementary_charge * delta_v;
}

/// Input power in dBm at the device to flux amplitude sqrt(photons/s).
inline double power_to_amplitude(double power_dbm, double omega)
{
    if (omega <= 0) {
        throw std::invalid_argument("power_to_amplitude: omega must be > 0");
    }
    const double watts = std::pow(10.0, (power_dbm - 30.0) / 10.0);
    return std::sqrt(watts / (constants::hbar * omega));
}

}  // namespace sapa
