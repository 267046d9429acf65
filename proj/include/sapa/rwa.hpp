#pragma once

#include "sapa/params.hpp"

#include <complex>
#include <vector>

// Pump-rotating-frame reduction of the cavity + DQD system. In this frame
// the pump drive is static and the probe beats at delta_omega = w_p - w_s.
// Counter-rotating transverse terms and the longitudinal sigma_z (a+a^dag)
// coupling (which carries e^{+-i w_p t} here) are dropped; validity is
// certified against lab-frame oracle runs at scaled frequencies.

namespace sapa {

struct DqdRwaTerms {
    double delta_q = 0;  ///< omega_q - omega_p, rad/s
    double g_t = 0;      ///< transverse coupling in the eigenbasis, rad/s
    double gamma_1 = 0;
    double gamma_2 = 0;
};

struct RwaModel {
    double delta_c = 0;  ///< omega_r - omega_p, rad/s
    double kappa_in = 0;
    double kappa_out = 0;
    double kappa_total = 0;
    double beat = 0;  ///< delta_omega = omega_p - omega_s, rad/s
    std::complex<double> pump_drive;   ///< sqrt(kappa_in) alpha_p e^{-i phi_p}
    std::complex<double> probe_drive;  ///< sqrt(kappa_in) alpha_s e^{-i phi_s}
    std::vector<DqdRwaTerms> dqds;
    double pump_frequency = 0;   ///< rad/s, frame frequency
    double probe_frequency = 0;  ///< rad/s
};

RwaModel build_rwa_model(const SystemParams& system, const DriveTone& pump,
                         const DriveTone& probe);

}  // namespace sapa
