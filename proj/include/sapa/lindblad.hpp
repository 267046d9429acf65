#pragma once

#include "sapa/meanfield.hpp"
#include "sapa/operators.hpp"
#include "sapa/params.hpp"
#include "sapa/rwa.hpp"

#include <Eigen/SparseCore>

#include <complex>
#include <vector>

// Full master-equation oracle on a truncated cavity (x) qubit(s) Hilbert
// space. Deliberately desk-scale: it validates the mean-field engine at
// low photon number and certifies the rotating-frame approximation at
// scaled-down frequencies. It is not a production scanning engine.

namespace sapa {

using SparseCMatrix = Eigen::SparseMatrix<std::complex<double>>;

/// Density matrix with the usual physicality invariants.
struct DensityMatrix {
    CMatrix rho;

    int dim() const { return static_cast<int>(rho.rows()); }

    /// Throws std::invalid_argument unless rho is Hermitian (1e-10,
    /// relative), has unit trace (1e-10) and spectrum >= -1e-8.
    void validate() const;
};

/// One coherent drive envelope eps(t) = amplitude * e^{-i frequency t},
/// entering the Hamiltonian as eps(t) a^dag + conj(eps(t)) a. The frame
/// determines the frequency: 0 for a static (pump-frame) tone, -beat for
/// the probe beating against the pump, or the absolute tone frequency in
/// the lab frame.
struct QuantumDrive {
    std::complex<double> amplitude;  ///< includes sqrt(kappa_in) and phase
    double frequency = 0;            ///< rad/s in the model's frame
};

/// Vectorized master equation
///   d vec(rho)/dt = [L0 + u(t) Lx + v(t) Ly] vec(rho),
/// where u + iv = sum_k amplitude_k e^{-i frequency_k t}. Basis order is
/// cavity (x) DQD_0 ((x) DQD_1); qubit ground state is index 1 (sigma_z
/// eigenvalue -1).
struct QuantumModel {
    int cavity_dim = 0;  ///< Fock cutoff n_max + 1
    int n_qubits = 0;
    SparseCMatrix liouvillian_static;  ///< L0: static H + all dissipators
    SparseCMatrix liouvillian_x;       ///< Hamiltonian superop of a + a^dag
    SparseCMatrix liouvillian_y;       ///< Hamiltonian superop of i(a^dag - a)
    std::vector<QuantumDrive> drives;
    CMatrix annihilation;        ///< cavity operator on the full space
    CMatrix top_fock_projector;  ///< projector onto the highest Fock level

    int dim() const { return cavity_dim * (1 << n_qubits); }
};

/// Pump-rotating-frame oracle for the same model the mean-field engine
/// integrates: H = Delta_c a^dag a + sum_j [Delta_q^j sigma_z/2
/// + g_t^j (a^dag sigma_- + a sigma_+)] plus pump/probe drives, with
/// dissipators kappa_total D[a], gamma_1 D[sigma_-], gamma_phi/2 D[sigma_z].
/// n_max is the Fock cutoff: <= 30 with up to one DQD, <= 10 with two.
QuantumModel build_pump_frame_model(const RwaModel& rwa, int n_max);

/// Lab-frame model with the full (counter-rotating) coupling
/// (g_t sigma_x + g_l sigma_z)(a + a^dag) and drives at absolute tone
/// frequencies. Only intended for rotating-frame certification at scaled
/// frequencies; integrating at real GHz frequencies is infeasible.
QuantumModel build_lab_frame_model(const SystemParams& system,
                                   const std::vector<DriveTone>& tones,
                                   int n_max);

/// |vacuum, ground, ...><vacuum, ground, ...| on the model's space.
DensityMatrix ground_density(const QuantumModel& model);

struct EvolveOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    int checkpoints = 16;  ///< evenly spaced Fock-cutoff monitor points
};

/// Highest-Fock population above this level means the cutoff is biasing
/// the physics; evolutions abort with an "increase n_max" error.
inline constexpr double kFockCutoffTolerance = 1e-4;

/// Integrates rho0 from t = 0 to t_final. Monitors the highest-Fock
/// population at the checkpoints and verifies trace conservation to 1e-8.
DensityMatrix evolve(const DensityMatrix& rho0, const QuantumModel& model,
                     double t_final, const EvolveOptions& opt = {});

/// Periodic steady state of tr(rho * observable) against the beat,
/// demodulated into harmonics over the final period. Settling logic (and
/// PeriodicOptions semantics) mirror meanfield::integrate_periodic; the
/// Fock-cutoff monitor runs at every sample.
HarmonicDecomposition periodic_expectation(const QuantumModel& model,
                                           const CMatrix& observable,
                                           double beat, int n_harmonics,
                                           const PeriodicOptions& opt = {});

}  // namespace sapa
