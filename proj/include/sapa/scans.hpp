#pragma once

#include "sapa/meanfield.hpp"
#include "sapa/metrics.hpp"
#include "sapa/params.hpp"
#include "sapa/response.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

// Experiment protocols orchestrating the engines into full scans: vacuum
// Rabi map, pump-on gain map, gain tunability map, tone spectrum, dispersive
// readout sweep, compression sweep, and the pump calibration that anchors
// all pump-on scans.
//
// Conventions shared by every scan:
//  - The swept DQD detuning axis acts on dqds[0] for the spectroscopy maps
//    and on the target (non-SAPA) dot for the readout sweep.
//  - A is the output flux amplitude of the signal harmonic,
//    sqrt(kappa_out) * |a_{-1}| (for the analytic pump-off map, the complex
//    transmission itself). A0 is the Coulomb-blockade reference: all
//    couplings zeroed, pump off, probe at the bare cavity resonance.
//  - Grid-point failures (non-settling integrations) are masked per point,
//    never fatal to a map.

namespace sapa {

struct AxisSpec {
    std::string name;
    std::string unit;
    Eigen::VectorXd values;
};

struct SpectrumMap {
    std::string scan_kind;
    AxisSpec axis1;  ///< rows of the value arrays
    AxisSpec axis2;  ///< columns (size-1 axis for 1D cuts)
    CMatrix amplitude;           ///< complex A per grid point
    Eigen::MatrixXd normalized;  ///< |A| / a0 (0 where masked)
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>
        valid;  ///< 1 = converged point, 0 = masked failure
    double a0 = 0;
    std::uint64_t config_hash = 0;

    void validate() const;
};

/// One demodulated output tone: harmonic index n (signal = -1, pump = 0,
/// idler = +1), absolute lab frequency omega_p + n*beat, and power in dB
/// relative to the probe input power.
struct TonePower {
    int harmonic = 0;
    double lab_frequency = 0;
    double power_db = 0;
};

struct ToneSpectrum {
    std::vector<TonePower> tones;  ///< harmonics -N..N with N >= 2
    double beat = 0;
    double pump_frequency = 0;
    double probe_frequency = 0;

    const TonePower& tone(int harmonic) const;
    void validate() const;
};

struct ReadoutLeg {
    Eigen::VectorXd amplitude;  ///< noise-free |A|/a0 per eps2 point
    std::vector<MeasurementEnsemble> ensembles;  ///< M noisy repeats each
    std::vector<std::uint8_t> valid;             ///< per-point mask
};

struct ReadoutSweepResult {
    Eigen::VectorXd eps2;
    ReadoutLeg pump_on;
    ReadoutLeg pump_off;
    double a0 = 0;
    int repeats = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;

    void validate() const;
};

/// Knobs shared by the pump-on scans. The default probe is far below the
/// compression point (about -139 dBm at 5.2 GHz) so pump-on maps stay in the
/// small-signal regime.
struct PumpScanOptions {
    double probe_amp = 2000.0;  ///< sqrt(photons/s) incident probe flux
    int n_harmonics = 2;        ///< demodulation window half-width
    PeriodicOptions periodic;   ///< steady-state integration controls
};

/// Coulomb-blockade reference amplitude per unit probe flux: |t| at the bare
/// resonance with every coupling zeroed (pump off).
double blockade_transmission(const SystemParams& system);

/// Pump-off transmission map vs (probe frequency, dqds[0] detuning), from
/// the weak-probe analytic response. amplitude = complex t; a0 =
/// blockade_transmission.
SpectrumMap rabi_map(const SystemParams& system,
                     const Eigen::VectorXd& probe_freq_grid,
                     const Eigen::VectorXd& eps_grid);

/// Pump-on gain map vs (probe frequency, dqds[0] detuning). The pump tracks
/// the probe at fixed beat = omega_p - omega_s (> 0) with the given flux
/// amplitude; per point the mean-field periodic steady state is demodulated
/// and A = sqrt(kappa_out)*|a_{-1}|, a0 = probe_amp * blockade_transmission.
SpectrumMap gain_map(const SystemParams& system, double pump_amp, double beat,
                     const Eigen::VectorXd& probe_freq_grid,
                     const Eigen::VectorXd& eps_grid,
                     const PumpScanOptions& options = {});

/// Gain tunability map vs (beat, dqds[0] detuning) at a fixed signal
/// frequency; the pump sits at omega_s_fixed + beat per row. Beat grid must
/// be strictly positive.
SpectrumMap tune_map(const SystemParams& system, double pump_amp,
                     double omega_s_fixed, const Eigen::VectorXd& beat_grid,
                     const Eigen::VectorXd& eps_grid,
                     const PumpScanOptions& options = {});

/// Demodulated output tone powers for one pump/probe operating point,
/// referenced to the probe input power. Contains harmonics -N..N
/// (N = max(2, options.n_harmonics)); the idler sits at 2*omega_p - omega_s.
ToneSpectrum tone_spectrum(const SystemParams& system, const DriveTone& pump,
                           const DriveTone& probe,
                           const PumpScanOptions& options = {});

struct ReadoutOptions {
    double bandwidth_hz = 1e3;  ///< noise bandwidth of one repeat
    int n_harmonics = 2;
    PeriodicOptions periodic;
};

/// Dispersive readout of the non-SAPA dot swept over eps2, with the SAPA dot
/// held at its amplification point. The pump-on leg runs the given tones on
/// the full two-dot system; the pump-off leg is the conventional dispersive
/// readout (no pump, SAPA decoupled, probe moved to the bare resonance at
/// the same flux amplitude). Each point carries an ensemble of `repeats`
/// noisy amplitude measurements: |A/a0 + zeta| with zeta complex Gaussian,
/// per-quadrature std = chain_noise_std(noise, bandwidth, omega_probe,
/// sapa_on, a0); streams are keyed by (seed, flat point index, repeat).
ReadoutSweepResult readout_sweep(const SystemParams& system, int sapa_index,
                                 const DriveTone& pump,
                                 const DriveTone& probe,
                                 const Eigen::VectorXd& eps2_grid,
                                 const NoiseChain& noise, int repeats,
                                 std::uint64_t seed,
                                 const ReadoutOptions& options = {});

struct CompressionResult {
    /// (probe power dBm, pump-on gain G_p dB) per converged grid point.
    std::vector<std::pair<double, double>> curve;
    double p1db_dbm = 0;  ///< interpolated 1 dB compression point
};

/// Gain vs probe input power at a fixed (calibrated) pump. The probe tone's
/// frequency and phase come from probe_template; its amplitude is set per
/// point from the dBm grid. The pump-off reference is measured at the same
/// probe power, so the curve rolls off to 0 dB once the probe itself
/// bleaches the dot. Throws if the grid does not bracket the 1 dB
/// compression point ("extend the power grid").
CompressionResult compression_sweep(const SystemParams& system,
                                    const DriveTone& pump,
                                    const DriveTone& probe_template,
                                    const Eigen::VectorXd& power_grid_dbm,
                                    const PumpScanOptions& options = {});

struct CalibrationOptions {
    double target_db = 11.28;  ///< parametric gain target
    double tol_db = 0.05;
    double initial_amp = 1000.0;  ///< sqrt(photons/s) starting guess
    double growth = 1.3;          ///< bracketing growth factor
    int max_steps = 200;
    double max_amp_factor = 300.0;  ///< cap on amplitude / initial_amp during
                                    ///< bracketing; keeps an unreachable
                                    ///< target from marching into ever slower
                                    ///< above-threshold integrations
    PumpScanOptions scan;
};

/// Pump amplitude achieving the target parametric gain 20*log10(A/A0) at
/// the given signal frequency, by growth bracketing plus bisection. Points
/// where the integration diverges (beyond the oscillation threshold) count
/// as "above target" for bracketing purposes. Gain is not monotone in the
/// pump amplitude (it peaks below the oscillation threshold and then
/// compresses), so the bracketing phase tracks the running peak: once the
/// gain has clearly fallen past a below-target peak the band around the
/// peak is re-sampled finely, and if the target is still out of reach the
/// call fails with the attainable maximum instead of growing the amplitude
/// forever.
double calibrate_pump(const SystemParams& system, double omega_s, double beat,
                      const CalibrationOptions& options = {});

/// Single-point parametric gain G_p: pump-on over pump-off signal amplitude
/// at the same probe tone, in dB. Throws if the point does not converge.
double pump_on_gain_db(const SystemParams& system, const DriveTone& pump,
                       const DriveTone& probe,
                       const PumpScanOptions& options = {});

/// Single-point effective gain G_e: pump-on signal amplitude over the
/// bare-cavity (blockade) reference at the probe's own amplitude, in dB.
double effective_gain_db(const SystemParams& system, const DriveTone& pump,
                         const DriveTone& probe,
                         const PumpScanOptions& options = {});

}  // namespace sapa
