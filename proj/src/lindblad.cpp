#include "sapa/lindblad.hpp"

#include "sapa/constants.hpp"
#include "sapa/ode.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sapa {

namespace {

using Cd = std::complex<double>;
constexpr Cd kI{0.0, 1.0};

/// Standard Kronecker product assembled directly in sparse form; the
/// factors stay small (full Hilbert space dim <= 64 in oracle scope) but
/// the product lives on the dim^2 superoperator space.
SparseCMatrix sparse_kron(const CMatrix& a, const CMatrix& b)
{
    const Eigen::Index ra = a.rows(), ca = a.cols();
    const Eigen::Index rb = b.rows(), cb = b.cols();
    std::vector<Eigen::Triplet<Cd>> triplets;
    for (Eigen::Index ja = 0; ja < ca; ++ja) {
        for (Eigen::Index ia = 0; ia < ra; ++ia) {
            const Cd va = a(ia, ja);
            if (va == 0.0) {
                continue;
            }
            for (Eigen::Index jb = 0; jb < cb; ++jb) {
                for (Eigen::Index ib = 0; ib < rb; ++ib) {
                    const Cd vb = b(ib, jb);
                    if (vb == 0.0) {
                        continue;
                    }
                    triplets.emplace_back(ia * rb + ib, ja * cb + jb, va * vb);
                }
            }
        }
    }
    SparseCMatrix s(ra * rb, ca * cb);
    s.setFromTriplets(triplets.begin(), triplets.end());
    return s;
}

/// -i (I (x) H - H^T (x) I) on column-stacked density matrices.
SparseCMatrix hamiltonian_superop(const CMatrix& h)
{
    if (!is_hermitian(h)) {
        throw std::invalid_argument(
            "lindblad: Hamiltonian must be Hermitian");
    }
    const CMatrix id = identity<double>(h.rows());
    return SparseCMatrix(
        -kI * (sparse_kron(id, h) - sparse_kron(h.transpose(), id)));
}

/// rate * (C* (x) C - I (x) C^dag C / 2 - (C^dag C)^T (x) I / 2).
SparseCMatrix dissipator_superop(const CMatrix& c, double rate)
{
    if (rate < 0) {
        throw std::invalid_argument("lindblad: collapse rates must be >= 0");
    }
    const CMatrix id = identity<double>(c.rows());
    const CMatrix cdc = c.adjoint() * c;
    return SparseCMatrix(
        Cd(rate) * (sparse_kron(c.conjugate(), c) -
                    Cd(0.5) * sparse_kron(id, cdc) -
                    Cd(0.5) * sparse_kron(cdc.transpose(), id)));
}

void check_oracle_scope(int n_max, int n_qubits)
{
    if (n_max < 2) {
        throw std::invalid_argument("lindblad: n_max must be >= 2");
    }
    const int cap = n_qubits >= 2 ? 10 : 30;
    if (n_max > cap) {
        throw std::invalid_argument(
            "lindblad: n_max = " + std::to_string(n_max) +
            " exceeds the oracle scope (max " + std::to_string(cap) + " with " +
            std::to_string(n_qubits) + " qubit(s))");
    }
}

/// Operator on the full cavity (x) qubits space with `op` at qubit slot j.
CMatrix embed_qubit(const CMatrix& op, int j, int n_qubits, int cavity_dim)
{
    CMatrix full = identity<double>(cavity_dim);
    for (int k = 0; k < n_qubits; ++k) {
        full = tensor(full, k == j ? op : identity<double>(2));
    }
    return full;
}

double pure_dephasing_rate(double gamma_1, double gamma_2)
{
    double gamma_phi = gamma_2 - 0.5 * gamma_1;
    if (gamma_phi < 0) {
        if (gamma_phi < -1e-9 * std::max(gamma_1, gamma_2)) {
            throw std::invalid_argument(
                "lindblad: gamma_2 < gamma_1/2 has no dissipator "
                "realization (negative pure dephasing)");
        }
        gamma_phi = 0;
    }
    return gamma_phi;
}

struct QubitOperators {
    CMatrix sigma_minus;
    CMatrix sigma_z;
};

QubitOperators qubit_operators(int j, int n_qubits, int cavity_dim)
{
    return {embed_qubit(pauli<double>(Pauli::Minus), j, n_qubits, cavity_dim),
            embed_qubit(pauli<double>(Pauli::Z), j, n_qubits, cavity_dim)};
}

/// Shared assembly once the full-space Hamiltonian and collapse channels
/// are known.
QuantumModel assemble(int n_max, int n_qubits, const CMatrix& a_full,
                      const CMatrix& h0,
                      const std::vector<std::pair<double, CMatrix>>& collapse,
                      std::vector<QuantumDrive> drives)
{
    QuantumModel model;
    model.cavity_dim = n_max + 1;
    model.n_qubits = n_qubits;
    model.annihilation = a_full;
    model.drives = std::move(drives);

    SparseCMatrix l0 = hamiltonian_superop(h0);
    for (const auto& [rate, c] : collapse) {
        if (rate > 0) {
            l0 = SparseCMatrix(l0 + dissipator_superop(c, rate));
        }
    }
    model.liouvillian_static = std::move(l0);

    const CMatrix x = a_full + a_full.adjoint();
    const CMatrix y = kI * (CMatrix(a_full.adjoint()) - a_full);
    model.liouvillian_x = hamiltonian_superop(x);
    model.liouvillian_y = hamiltonian_superop(y);

    CMatrix top = CMatrix::Zero(model.cavity_dim, model.cavity_dim);
    top(n_max, n_max) = 1.0;
    model.top_fock_projector = top;
    for (int k = 0; k < n_qubits; ++k) {
        model.top_fock_projector =
            tensor(model.top_fock_projector, identity<double>(2));
    }
    return model;
}

/// Static (frequency = 0) drives fold into the Liouvillian once;
/// oscillatory drives are applied per evaluation.
SparseCMatrix fold_static_drives(const QuantumModel& model,
                                 std::vector<QuantumDrive>& oscillatory)
{
    SparseCMatrix l = model.liouvillian_static;
    for (const auto& drive : model.drives) {
        if (drive.amplitude == 0.0) {
            continue;
        }
        if (drive.frequency == 0.0) {
            l = SparseCMatrix(l + Cd(drive.amplitude.real()) *
                                      model.liouvillian_x +
                              Cd(drive.amplitude.imag()) * model.liouvillian_y);
        } else {
            oscillatory.push_back(drive);
        }
    }
    return l;
}

struct MasterEquationRhs {
    const QuantumModel* model;
    SparseCMatrix l_static;
    std::vector<QuantumDrive> oscillatory;

    explicit MasterEquationRhs(const QuantumModel& m) : model(&m)
    {
        l_static = fold_static_drives(m, oscillatory);
    }

    void operator()(double t, const CVector& y, CVector& dydt) const
    {
        dydt.noalias() = l_static * y;
        if (oscillatory.empty()) {
            return;
        }
        Cd eps = 0;
        for (const auto& drive : oscillatory) {
            eps += drive.amplitude * std::exp(-kI * drive.frequency * t);
        }
        if (eps.real() != 0) {
            dydt.noalias() += Cd(eps.real()) * (model->liouvillian_x * y);
        }
        if (eps.imag() != 0) {
            dydt.noalias() += Cd(eps.imag()) * (model->liouvillian_y * y);
        }
    }
};

double top_fock_population(const QuantumModel& model, const CMatrix& rho)
{
    return expectation(rho, model.top_fock_projector).real();
}

void check_cutoff_headroom(const QuantumModel& model, const CMatrix& rho)
{
    const double population = top_fock_population(model, rho);
    if (population > kFockCutoffTolerance) {
        throw std::runtime_error(
            "lindblad: highest-Fock population " + std::to_string(population) +
            " exceeds " + std::to_string(kFockCutoffTolerance) +
            "; increase n_max");
    }
}

void check_trace(const CMatrix& rho)
{
    const double drift = std::abs(rho.trace() - Cd(1.0));
    if (drift > 1e-8) {
        throw std::runtime_error(
            "lindblad: trace drifted by " + std::to_string(drift) +
            "; tighten tolerances");
    }
}

}  // namespace

void DensityMatrix::validate() const
{
    if (rho.rows() == 0 || rho.rows() != rho.cols()) {
        throw std::invalid_argument("density matrix: must be square");
    }
    if (!is_hermitian(rho, 1e-10)) {
        throw std::invalid_argument("density matrix: not Hermitian to 1e-10");
    }
    if (std::abs(rho.trace() - Cd(1.0)) > 1e-10) {
        throw std::invalid_argument("density matrix: trace differs from 1");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver;
    solver.compute(rho, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -1e-8) {
        throw std::invalid_argument(
            "density matrix: negative eigenvalue beyond tolerance");
    }
}

QuantumModel build_pump_frame_model(const RwaModel& rwa, int n_max)
{
    const int n_qubits = static_cast<int>(rwa.dqds.size());
    check_oracle_scope(n_max, n_qubits);

    const int cavity_dim = n_max + 1;
    CMatrix a_full = fock_annihilation<double>(n_max);
    for (int k = 0; k < n_qubits; ++k) {
        a_full = tensor(a_full, identity<double>(2));
    }
    const CMatrix number = a_full.adjoint() * a_full;

    CMatrix h0 = rwa.delta_c * number;
    std::vector<std::pair<double, CMatrix>> collapse;
    collapse.emplace_back(rwa.kappa_total, a_full);
    for (int j = 0; j < n_qubits; ++j) {
        const auto& dqd = rwa.dqds[static_cast<std::size_t>(j)];
        const auto [sm, sz] = qubit_operators(j, n_qubits, cavity_dim);
        h0 += 0.5 * dqd.delta_q * sz +
              dqd.g_t * (CMatrix(a_full.adjoint() * sm) +
                         CMatrix(a_full * sm.adjoint()));
        collapse.emplace_back(dqd.gamma_1, sm);
        collapse.emplace_back(
            0.5 * pure_dephasing_rate(dqd.gamma_1, dqd.gamma_2), sz);
    }

    std::vector<QuantumDrive> drives;
    drives.push_back({rwa.pump_drive, 0.0});
    // The probe beats against the pump as e^{+i beat t}; as e^{-i f t}
    // that is frequency -beat.
    drives.push_back({rwa.probe_drive, -rwa.beat});
    return assemble(n_max, n_qubits, a_full, h0, collapse, std::move(drives));
}

QuantumModel build_lab_frame_model(const SystemParams& system,
                                   const std::vector<DriveTone>& tones,
                                   int n_max)
{
    system.validate();
    const int n_qubits = static_cast<int>(system.dqds.size());
    check_oracle_scope(n_max, n_qubits);

    const int cavity_dim = n_max + 1;
    CMatrix a_full = fock_annihilation<double>(n_max);
    for (int k = 0; k < n_qubits; ++k) {
        a_full = tensor(a_full, identity<double>(2));
    }
    const CMatrix number = a_full.adjoint() * a_full;
    const CMatrix x_cavity = a_full + CMatrix(a_full.adjoint());

    CMatrix h0 = system.cavity.omega_r * number;
    std::vector<std::pair<double, CMatrix>> collapse;
    collapse.emplace_back(system.cavity.kappa_total(), a_full);
    for (int j = 0; j < n_qubits; ++j) {
        const auto& dqd = system.dqds[static_cast<std::size_t>(j)];
        const auto [sm, sz] = qubit_operators(j, n_qubits, cavity_dim);
        const CMatrix sx = sm + CMatrix(sm.adjoint());
        const double omega_q = qubit_frequency(dqd.epsilon, dqd.t_c);
        const auto g = effective_couplings(dqd.epsilon, dqd.t_c, dqd.g_c);
        // Full coupling in the qubit eigenbasis, no rotating-frame
        // truncation: (g_t sigma_x + g_l sigma_z)(a + a^dag).
        h0 += 0.5 * omega_q * sz +
              CMatrix((g.transverse * sx + g.longitudinal * sz) * x_cavity);
        collapse.emplace_back(dqd.gamma_1, sm);
        collapse.emplace_back(0.5 * dqd.gamma_phi, sz);
    }

    std::vector<QuantumDrive> drives;
    for (const auto& tone : tones) {
        if (tone.frequency <= 0) {
            throw std::invalid_argument(
                "lab-frame model: tone frequencies must be > 0");
        }
        if (tone.amplitude < 0) {
            throw std::invalid_argument(
                "lab-frame model: tone amplitudes must be >= 0");
        }
        drives.push_back({std::sqrt(system.cavity.kappa_in) * tone.amplitude *
                              std::exp(-kI * tone.phase),
                          tone.frequency});
    }
    return assemble(n_max, n_qubits, a_full, h0, collapse, std::move(drives));
}

DensityMatrix ground_density(const QuantumModel& model)
{
    const int dim = model.dim();
    // Qubit ground state (sigma_z = -1) is index 1 in each 2-dim factor,
    // so |vac, g, ...> sits at flat index 2^n_qubits - 1.
    const int idx = (1 << model.n_qubits) - 1;
    CMatrix rho = CMatrix::Zero(dim, dim);
    rho(idx, idx) = 1.0;
    return {rho};
}

DensityMatrix evolve(const DensityMatrix& rho0, const QuantumModel& model,
                     double t_final, const EvolveOptions& opt)
{
    rho0.validate();
    if (rho0.dim() != model.dim()) {
        throw std::invalid_argument("evolve: state/model dimension mismatch");
    }
    if (t_final <= 0) {
        throw std::invalid_argument("evolve: t_final must be > 0");
    }
    if (opt.checkpoints < 1) {
        throw std::invalid_argument("evolve: need at least one checkpoint");
    }

    const MasterEquationRhs rhs(model);
    CVector y = vectorize(rho0.rho);
    OdeOptions ode;
    ode.rtol = opt.rtol;
    ode.atol = opt.atol;

    double t = 0;
    double h = 0;
    for (int k = 1; k <= opt.checkpoints; ++k) {
        const double t_next = t_final * k / opt.checkpoints;
        ode.h_init = h;
        h = integrate_adaptive(rhs, y, t, t_next, ode);
        t = t_next;
        check_cutoff_headroom(model, unvectorize(y, model.dim()));
    }

    CMatrix rho = unvectorize(y, model.dim());
    check_trace(rho);
    return {std::move(rho)};
}

HarmonicDecomposition periodic_expectation(const QuantumModel& model,
                                           const CMatrix& observable,
                                           double beat, int n_harmonics,
                                           const PeriodicOptions& opt)
{
    if (beat <= 0) {
        throw std::invalid_argument(
            "periodic_expectation: beat must be > 0");
    }
    if (observable.rows() != model.dim() ||
        observable.cols() != model.dim()) {
        throw std::invalid_argument(
            "periodic_expectation: observable dimension mismatch");
    }
    if (opt.rtol <= 0 || opt.atol <= 0 || opt.settle_rel <= 0 ||
        opt.settle_abs <= 0) {
        throw std::invalid_argument(
            "periodic_expectation: tolerances must be > 0");
    }
    if (opt.samples_per_period < 64) {
        throw std::invalid_argument(
            "periodic_expectation: need >= 64 samples per period");
    }
    if (opt.max_periods < 1) {
        throw std::invalid_argument(
            "periodic_expectation: max_periods must be >= 1");
    }

    const MasterEquationRhs rhs(model);
    CVector y = vectorize(ground_density(model).rho);
    OdeOptions ode;
    ode.rtol = opt.rtol;
    ode.atol = opt.atol;

    const int samples = opt.samples_per_period;
    const double period = constants::two_pi / beat;
    const double dt = period / samples;
    const double root_s = std::sqrt(static_cast<double>(samples));

    CVector current = CVector::Zero(samples);
    CVector previous = CVector::Zero(samples);
    double t = 0;
    double h = 0;
    double residual = 0;

    for (int p = 0; p < opt.max_periods; ++p) {
        for (int k = 0; k < samples; ++k) {
            const CMatrix rho = unvectorize(y, model.dim());
            check_cutoff_headroom(model, rho);
            current[k] = expectation(rho, observable);
            ode.h_init = h;
            h = integrate_adaptive(rhs, y, t, t + dt, ode);
            t += dt;
        }
        check_trace(unvectorize(y, model.dim()));

        const double rms_diff = (current - previous).norm() / root_s;
        residual =
            (current - previous).norm() / std::max(current.norm(), 1e-300);
        if (p > 0 &&
            (residual < opt.settle_rel || rms_diff < opt.settle_abs)) {
            return demodulate(current, t - period, beat, n_harmonics);
        }
        previous = current;
    }
    throw std::runtime_error(
        "periodic_expectation: no periodic steady state after " +
        std::to_string(opt.max_periods) + " periods (last residual " +
        std::to_string(residual) + ")");
}

}  // namespace sapa
