#include "sapa/rwa.hpp"

#include "sapa/constants.hpp"

#include <cmath>
#include <stdexcept>

namespace sapa {

RwaModel build_rwa_model(const SystemParams& system, const DriveTone& pump,
                         const DriveTone& probe)
{
    system.validate();
    if (pump.frequency <= 0) {
        throw std::invalid_argument("build_rwa_model: pump frequency must be > 0");
    }
    const double beat = pump.frequency - probe.frequency;
    if (beat == 0.0) {
        throw std::invalid_argument(
            "build_rwa_model: degenerate pump-probe (beat = 0) must be driven "
            "as a single tone");
    }
    if (std::abs(beat) > 0.1 * pump.frequency) {
        throw std::invalid_argument(
            "build_rwa_model: |w_p - w_s| must be small against w_p for the "
            "beat-frame treatment");
    }
    if (pump.amplitude < 0 || probe.amplitude < 0) {
        throw std::invalid_argument("build_rwa_model: amplitudes must be >= 0");
    }

    RwaModel m;
    m.delta_c = system.cavity.omega_r - pump.frequency;
    m.kappa_in = system.cavity.kappa_in;
    m.kappa_out = system.cavity.kappa_out;
    m.kappa_total = system.cavity.kappa_total();
    m.beat = beat;
    m.pump_frequency = pump.frequency;
    m.probe_frequency = probe.frequency;

    const double root_kin = std::sqrt(system.cavity.kappa_in);
    const std::complex<double> i1(0, 1);
    m.pump_drive =
        root_kin * pump.amplitude * std::exp(-i1 * pump.phase);
    m.probe_drive =
        root_kin * probe.amplitude * std::exp(-i1 * probe.phase);

    m.dqds.reserve(system.dqds.size());
    for (const auto& d : system.dqds) {
        DqdRwaTerms terms;
        terms.delta_q = qubit_frequency(d.epsilon, d.t_c) - pump.frequency;
        terms.g_t = effective_couplings(d.epsilon, d.t_c, d.g_c).transverse;
        terms.gamma_1 = d.gamma_1;
        terms.gamma_2 = d.gamma_2();
        m.dqds.push_back(terms);
    }
    return m;
}

}  // namespace sapa
