#include "sapa/meanfield.hpp"

#include "sapa/constants.hpp"
#include "sapa/ode.hpp"

#include <cmath>
#include <stdexcept>

namespace sapa {

namespace {

constexpr std::complex<double> kI(0.0, 1.0);

std::size_t state_size(std::size_t n_dqd) { return 1 + 2 * n_dqd; }

}  // namespace

MeanFieldState ground_state(std::size_t n_dqd)
{
    MeanFieldState s;
    s.a = 0.0;
    s.s_minus.assign(n_dqd, 0.0);
    s.s_z.assign(n_dqd, -1.0);
    return s;
}

CVector pack_state(const MeanFieldState& s)
{
    CVector y(state_size(s.s_minus.size()));
    y[0] = s.a;
    for (std::size_t j = 0; j < s.s_minus.size(); ++j) {
        y[1 + 2 * j] = s.s_minus[j];
        y[2 + 2 * j] = s.s_z[j];
    }
    return y;
}

MeanFieldState unpack_state(const CVector& y, std::size_t n_dqd)
{
    if (static_cast<std::size_t>(y.size()) != state_size(n_dqd)) {
        throw std::invalid_argument("unpack_state: layout mismatch");
    }
    MeanFieldState s;
    s.a = y[0];
    s.s_minus.resize(n_dqd);
    s.s_z.resize(n_dqd);
    for (std::size_t j = 0; j < n_dqd; ++j) {
        s.s_minus[j] = y[1 + 2 * j];
        s.s_z[j] = y[2 + 2 * j].real();
    }
    return s;
}

void mean_field_derivative(const RwaModel& model, double t, const CVector& y,
                           CVector& dydt)
{
    const std::complex<double> a = y[0];
    const std::complex<double> drive =
        model.pump_drive +
        model.probe_drive * std::exp(kI * (model.beat * t));

    std::complex<double> da =
        -(kI * model.delta_c + 0.5 * model.kappa_total) * a - kI * drive;

    for (std::size_t j = 0; j < model.dqds.size(); ++j) {
        const auto& q = model.dqds[j];
        const std::complex<double> sm = y[1 + 2 * j];
        const double sz = y[2 + 2 * j].real();

        da -= kI * q.g_t * sm;
        dydt[1 + 2 * j] =
            -(kI * q.delta_q + q.gamma_2) * sm + kI * q.g_t * sz * a;
        // Pump term 2 i g (<a*><s-> - <a><s+>) keeps excitation exchange
        // with the cavity balanced and saturates s_z toward 0 under drive.
        const double pump_term =
            2.0 * (kI * q.g_t * (std::conj(a) * sm - a * std::conj(sm))).real();
        dydt[2 + 2 * j] = -q.gamma_1 * (sz + 1.0) + pump_term;
    }
    dydt[0] = da;
}

Trajectory integrate_periodic(const RwaModel& model, const MeanFieldState& init,
                              const PeriodicOptions& opt)
{
    if (model.beat <= 0) {
        throw std::invalid_argument("integrate_periodic: beat must be > 0");
    }
    if (opt.settle_rel <= 0 || opt.rtol <= 0) {
        throw std::invalid_argument("integrate_periodic: tolerances must be > 0");
    }
    if (opt.samples_per_period < 64) {
        throw std::invalid_argument(
            "integrate_periodic: need >= 64 samples per period");
    }
    if (opt.max_photons <= 0) {
        throw std::invalid_argument(
            "integrate_periodic: max_photons must be > 0");
    }

    const std::size_t n_dqd = model.dqds.size();
    const double period = constants::two_pi / model.beat;
    const int samples = opt.samples_per_period;
    const double dt = period / samples;

    OdeOptions ode;
    ode.rtol = opt.rtol;
    ode.atol = opt.atol;

    auto rhs = [&](double t, const CVector& y, CVector& dydt) {
        mean_field_derivative(model, t, y, dydt);
    };

    CVector y = pack_state(init);
    CVector prev_cavity = CVector::Zero(samples);
    CVector cavity(samples);
    std::vector<CVector> sampled(samples);

    double t = 0;
    double h_carry = 0;
    double residual = 0;
    for (int p = 0; p < opt.max_periods; ++p) {
        for (int k = 0; k < samples; ++k) {
            cavity[k] = y[0];
            sampled[k] = y;
            ode.h_init = h_carry;
            h_carry = integrate_adaptive(rhs, y, t, t + dt, ode);
            t += dt;
            if (std::norm(y[0]) > opt.max_photons) {
                throw std::runtime_error(
                    "integrate_periodic: cavity occupation exceeded "
                    "max_photons (" + std::to_string(opt.max_photons) +
                    "); drive is past the self-oscillation threshold");
            }
        }
        const double root_s = std::sqrt(static_cast<double>(samples));
        const double rms_diff = (cavity - prev_cavity).norm() / root_s;
        residual = (cavity - prev_cavity).norm() /
                   std::max(cavity.norm(), 1e-300);
        if (p > 0 && (residual < opt.settle_rel || rms_diff < opt.settle_abs)) {
            Trajectory traj;
            traj.times.resize(samples);
            traj.states.resize(samples);
            traj.cavity = cavity;
            const double t0 = t - period;
            for (int k = 0; k < samples; ++k) {
                traj.times[k] = t0 + k * dt;
                traj.states[k] = unpack_state(sampled[k], n_dqd);
            }
            traj.periods_integrated = p + 1;
            traj.settle_residual = residual;
            return traj;
        }
        prev_cavity = cavity;
    }
    throw std::runtime_error(
        "integrate_periodic: no periodic steady state after " +
        std::to_string(opt.max_periods) +
        " periods (last residual " + std::to_string(residual) + ")");
}

std::complex<double> HarmonicDecomposition::coefficient(int n) const
{
    if (std::abs(n) > n_harmonics) {
        throw std::out_of_range("HarmonicDecomposition: harmonic out of window");
    }
    return coefficients[n + n_harmonics];
}

bool HarmonicDecomposition::window_converged(double fraction) const
{
    const double peak = coefficients.cwiseAbs().maxCoeff();
    const double edge = std::max(std::abs(coefficients[0]),
                                 std::abs(coefficients[coefficients.size() - 1]));
    return edge < fraction * peak;
}

HarmonicDecomposition demodulate(const Trajectory& traj, double beat,
                                 int n_harmonics)
{
    return demodulate(traj.cavity, traj.times.empty() ? 0.0 : traj.times.front(),
                      beat, n_harmonics);
}

HarmonicDecomposition demodulate(const CVector& samples, double t0, double beat,
                                 int n_harmonics)
{
    const int count = static_cast<int>(samples.size());
    if (n_harmonics < 1) {
        throw std::invalid_argument("demodulate: need n_harmonics >= 1");
    }
    if (count < 4 * n_harmonics) {
        throw std::invalid_argument(
            "demodulate: fewer than 4 samples per harmonic (aliasing)");
    }

    HarmonicDecomposition dec;
    dec.beat = beat;
    dec.n_harmonics = n_harmonics;
    dec.coefficients.resize(2 * n_harmonics + 1);

    // Uniform samples over exactly one period: the rectangle rule is
    // spectrally accurate here.
    for (int n = -n_harmonics; n <= n_harmonics; ++n) {
        std::complex<double> acc = 0;
        for (int k = 0; k < count; ++k) {
            const double phase =
                constants::two_pi * n * static_cast<double>(k) / count;
            acc += samples[k] * std::exp(kI * phase);
        }
        // Referencing the coefficients to absolute time keeps phases
        // comparable across trajectories that settled after different
        // numbers of periods.
        const double phase0 = n * beat * t0;
        dec.coefficients[n + n_harmonics] =
            acc / static_cast<double>(count) * std::exp(kI * phase0);
    }
    return dec;
}

}  // namespace sapa
