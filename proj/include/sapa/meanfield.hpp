#pragma once

#include "sapa/operators.hpp"
#include "sapa/rwa.hpp"

#include <complex>
#include <vector>

// First-order cumulant (semiclassical) dynamics of the cavity + DQDs in
// the pump rotating frame: <sigma_z a> -> <sigma_z><a> etc. This is the
// minimal closure that exhibits the four-wave mixing behind the
// parametric gain; it is validated against the quantum oracle at small
// photon number.

namespace sapa {

struct MeanFieldState {
    std::complex<double> a;                   ///< cavity amplitude, sqrt(photons)
    std::vector<std::complex<double>> s_minus;  ///< per-DQD <sigma_->
    std::vector<double> s_z;                    ///< per-DQD <sigma_z>
};

MeanFieldState ground_state(std::size_t n_dqd);

/// Flat complex layout used by the integrator: [a, s-_0, sz_0, s-_1, sz_1].
CVector pack_state(const MeanFieldState& s);
MeanFieldState unpack_state(const CVector& y, std::size_t n_dqd);

/// Equations of motion in the pump frame at time t (d/dt of the packed
/// layout). The probe beats at e^{+i beat t} against the static pump.
void mean_field_derivative(const RwaModel& model, double t, const CVector& y,
                           CVector& dydt);

struct Trajectory {
    std::vector<double> times;          ///< uniform samples over one period
    std::vector<MeanFieldState> states;
    CVector cavity;                     ///< <a> at the sample times
    int periods_integrated = 0;
    double settle_residual = 0;         ///< last period-to-period L2 residual
};

struct PeriodicOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double settle_rel = 1e-6;    ///< period-to-period relative L2 threshold
    double settle_abs = 1e-9;    ///< RMS floor (sqrt photons) counting as zero;
                                 ///< undriven states hover at the atol noise
                                 ///< floor and never settle in relative terms
    int max_periods = 200;
    int samples_per_period = 256;
    double max_photons = 1e9;    ///< abort threshold on the cavity occupation
                                 ///< |<a>|^2; above the self-oscillation
                                 ///< threshold the field grows until the step
                                 ///< size collapses, so runaway drives must
                                 ///< fail fast instead
};

/// Integrates to the periodic steady state and returns the final beat
/// period, sampled uniformly. Throws on non-convergence, naming the last
/// residual.
Trajectory integrate_periodic(const RwaModel& model, const MeanFieldState& init,
                              const PeriodicOptions& opt = {});

struct HarmonicDecomposition {
    double beat = 0;       ///< rad/s
    int n_harmonics = 0;   ///< window half-width N
    CVector coefficients;  ///< a_n for n = -N..N, <a(t)> = sum a_n e^{-i n beat t}

    std::complex<double> coefficient(int n) const;
    std::complex<double> pump() const { return coefficient(0); }
    std::complex<double> signal() const { return coefficient(-1); }
    std::complex<double> idler() const { return coefficient(+1); }
    /// Lab frequency of harmonic n given the pump frequency.
    double lab_frequency(int n, double pump_frequency) const
    {
        return pump_frequency + n * beat;
    }
    /// True when the edge coefficients are small against the largest one.
    bool window_converged(double fraction = 0.05) const;
};

/// Fourier coefficients of the sampled period:
/// a_n = (1/T) \int_0^T <a(t)> e^{+i n beat t} dt on the uniform grid.
HarmonicDecomposition demodulate(const Trajectory& traj, double beat,
                                 int n_harmonics);

/// Same decomposition for raw uniform samples covering exactly one beat
/// period starting at absolute time t0 (any complex periodic signal, not
/// just the cavity amplitude).
HarmonicDecomposition demodulate(const CVector& samples, double t0,
                                 double beat, int n_harmonics);

}  // namespace sapa
