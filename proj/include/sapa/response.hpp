#pragma once

#include "sapa/params.hpp"

#include <complex>

// Weak-probe (linear response) transmission of the cavity with 0-2
// dispersively or resonantly coupled DQDs, from input-output theory with
// the qubits adiabatically eliminated at first order in the probe.

namespace sapa {

/// Complex transmission amplitude t(omega_s) for a weak probe and no pump:
///   t = sqrt(kappa_in kappa_out) /
///       (i(omega_r - omega) + kappa_total/2
///        + sum_j g_t_j^2 / (i(omega_q_j - omega) + gamma_2_j)).
inline std::complex<double> linear_response_transmission(
    double omega_s, const SystemParams& system)
{
    using Cd = std::complex<double>;
    const auto& cav = system.cavity;
    Cd denom(0.5 * cav.kappa_total(), cav.omega_r - omega_s);
    for (const auto& d : system.dqds) {
        const double g_t =
            effective_couplings(d.epsilon, d.t_c, d.g_c).transverse;
        const double omega_q = qubit_frequency(d.epsilon, d.t_c);
        denom += g_t * g_t / Cd(d.gamma_2(), omega_q - omega_s);
    }
    return std::sqrt(cav.kappa_in * cav.kappa_out) / denom;
}

}  // namespace sapa
