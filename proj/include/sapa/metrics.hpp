#pragma once

#include "sapa/constants.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

// Scalar figures of merit: gains, cooperativity, linewidths, readout SNR,
// the amplifier noise-chain model, and the 1 dB compression point.

namespace sapa {

/// Repeated amplitude measurements of one readout point.
struct MeasurementEnsemble {
    Eigen::VectorXd repeats;
    double mean = 0;
    double std_dev = 0;  ///< unbiased (M-1) standard deviation

    /// Throws unless mean/std are consistent with the repeats to 1e-12.
    void validate() const
    {
        if (repeats.size() < 2) {
            throw std::invalid_argument(
                "measurement ensemble: need at least 2 repeats");
        }
        const double m = repeats.mean();
        const double var =
            (repeats.array() - m).square().sum() / (repeats.size() - 1.0);
        const double scale = std::max(std::abs(m), 1.0);
        if (std::abs(m - mean) > 1e-12 * scale ||
            std::abs(std::sqrt(var) - std_dev) > 1e-12 * scale) {
            throw std::invalid_argument(
                "measurement ensemble: mean/std inconsistent with repeats");
        }
    }
};

/// Builds an ensemble with consistent summary statistics.
inline MeasurementEnsemble make_ensemble(const Eigen::VectorXd& repeats)
{
    if (repeats.size() < 2) {
        throw std::invalid_argument(
            "measurement ensemble: need at least 2 repeats");
    }
    MeasurementEnsemble e;
    e.repeats = repeats;
    e.mean = repeats.mean();
    e.std_dev = std::sqrt((repeats.array() - e.mean).square().sum() /
                          (repeats.size() - 1.0));
    return e;
}

/// Input-referred added noise of the amplification chain, in photon quanta
/// per unit bandwidth. Vacuum contributions are folded into the two
/// input-referred totals.
struct NoiseChain {
    double n_sapa = 1.5;         ///< on-chip amplifier added noise, quanta
    double n_hemt = 10.0;        ///< downstream chain input-referred, quanta
    double g_sapa_linear = 1.0;  ///< amplifier power gain (dimensionless)

    void validate() const
    {
        if (n_sapa < 0 || n_hemt < 0) {
            throw std::invalid_argument(
                "noise chain: added noise quanta must be >= 0");
        }
        if (g_sapa_linear < 1) {
            throw std::invalid_argument(
                "noise chain: amplifier power gain must be >= 1");
        }
    }
};

/// Pump-on over pump-off amplitude ratio, in dB.
inline double parametric_gain(double a_on_max, double a_off)
{
    if (a_on_max <= 0 || a_off <= 0) {
        throw std::invalid_argument("parametric_gain: amplitudes must be > 0");
    }
    return 20.0 * std::log10(a_on_max / a_off);
}

/// Pump-on maximum over bare-cavity amplitude ratio, in dB.
inline double effective_gain(double a_on_max, double a_0)
{
    if (a_on_max <= 0 || a_0 <= 0) {
        throw std::invalid_argument("effective_gain: amplitudes must be > 0");
    }
    return 20.0 * std::log10(a_on_max / a_0);
}

/// C = 4 g^2 / (gamma kappa).
inline double cooperativity(double g_t, double gamma_2, double kappa_total)
{
    if (gamma_2 <= 0 || kappa_total <= 0) {
        throw std::invalid_argument("cooperativity: rates must be > 0");
    }
    return 4.0 * g_t * g_t / (gamma_2 * kappa_total);
}

/// Strong coupling: the coherent rate beats half of either decay rate.
inline bool is_strong_coupling(double g_t, double gamma, double kappa_total)
{
    return g_t > 0.5 * gamma && g_t > 0.5 * kappa_total;
}

/// Linear-interpolated full width at half of (peak - baseline) of a single
/// dominant peak sampled on a strictly increasing x grid. The returned
/// width is in x units.
inline double fwhm(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                   double baseline = 0.0)
{
    const Eigen::Index n = x.size();
    if (n < 3 || y.size() != n) {
        throw std::invalid_argument(
            "fwhm: need matching grids with at least 3 points");
    }
    for (Eigen::Index i = 1; i < n; ++i) {
        if (x[i] <= x[i - 1]) {
            throw std::invalid_argument(
                "fwhm: x grid must be strictly increasing");
        }
    }

    Eigen::Index peak = 0;
    y.maxCoeff(&peak);
    const double half = baseline + 0.5 * (y[peak] - baseline);
    if (y[peak] <= baseline) {
        throw std::invalid_argument("fwhm: peak does not rise above baseline");
    }

    auto cross = [&](Eigen::Index from, Eigen::Index step) -> double {
        for (Eigen::Index i = from; i + step >= 0 && i + step < n; i += step) {
            const Eigen::Index j = i + step;
            if ((y[i] - half) * (y[j] - half) <= 0 && y[i] != y[j]) {
                const double f = (half - y[i]) / (y[j] - y[i]);
                return x[i] + f * (x[j] - x[i]);
            }
        }
        throw std::invalid_argument(
            "fwhm: no half-maximum crossing within the grid");
    };

    const double left = cross(peak, -1);
    const double right = cross(peak, +1);
    return right - left;
}

/// Readout signal-to-noise ratio of two measurement ensembles:
/// (mean_on - mean_off) / sqrt(std_on^2 + std_off^2).
inline double snr(const MeasurementEnsemble& on, const MeasurementEnsemble& off)
{
    if (on.repeats.size() < 2 || off.repeats.size() < 2) {
        throw std::invalid_argument("snr: ensembles need at least 2 repeats");
    }
    const double combined =
        std::sqrt(on.std_dev * on.std_dev + off.std_dev * off.std_dev);
    if (combined <= 0) {
        throw std::invalid_argument("snr: combined standard deviation is zero");
    }
    return (on.mean - off.mean) / combined;
}

/// Output-referred noise quanta of the chain: g n_sapa + n_hemt with the
/// amplifier on, n_hemt with it bypassed.
inline double output_noise_quanta(const NoiseChain& chain, bool sapa_on)
{
    chain.validate();
    return sapa_on ? chain.g_sapa_linear * chain.n_sapa + chain.n_hemt
                   : chain.n_hemt;
}

/// Additive amplitude noise standard deviation in the map's normalized
/// units: sqrt(N_out * bandwidth) photon-flux amplitude divided by the
/// normalization constant a0_flux (the bare-cavity output amplitude in
/// sqrt(photons/s)). omega identifies the mode the quanta refer to.
inline double chain_noise_std(const NoiseChain& chain, double bandwidth_hz,
                              double omega, bool sapa_on,
                              double a0_flux = 1.0)
{
    if (bandwidth_hz <= 0) {
        throw std::invalid_argument("chain_noise_std: bandwidth must be > 0");
    }
    if (omega <= 0) {
        throw std::invalid_argument("chain_noise_std: omega must be > 0");
    }
    if (a0_flux <= 0) {
        throw std::invalid_argument(
            "chain_noise_std: normalization constant must be > 0");
    }
    return std::sqrt(output_noise_quanta(chain, sapa_on) * bandwidth_hz) /
           a0_flux;
}

/// Amplitude SNR improvement from switching the on-chip amplifier on:
/// sqrt(g n_hemt / (g n_sapa + n_hemt)).
inline double snr_improvement(const NoiseChain& chain)
{
    chain.validate();
    return std::sqrt(chain.g_sapa_linear * chain.n_hemt /
                     (chain.g_sapa_linear * chain.n_sapa + chain.n_hemt));
}

/// Effective noise temperature of n_add added quanta at mode frequency
/// omega: T = n_add hbar omega / k_B.
inline double effective_temperature(double n_add, double omega)
{
    if (n_add < 0) {
        throw std::invalid_argument(
            "effective_temperature: quanta must be >= 0");
    }
    if (omega <= 0) {
        throw std::invalid_argument(
            "effective_temperature: omega must be > 0");
    }
    return n_add * constants::hbar * omega / constants::k_boltzmann;
}

/// Input power (dBm) at which the gain first drops 1 dB below its
/// small-signal maximum, linearly interpolated in (dBm, dB) space. The
/// curve must be sampled on strictly increasing powers and bracket the
/// crossing.
inline double compression_point(
    const std::vector<std::pair<double, double>>& curve)
{
    if (curve.size() < 2) {
        throw std::invalid_argument(
            "compression_point: need at least 2 samples");
    }
    std::size_t i_max = 0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (i > 0 && curve[i].first <= curve[i - 1].first) {
            throw std::invalid_argument(
                "compression_point: powers must be strictly increasing");
        }
        if (curve[i].second > curve[i_max].second) {
            i_max = i;
        }
    }
    const double target = curve[i_max].second - 1.0;
    for (std::size_t i = i_max; i + 1 < curve.size(); ++i) {
        const auto& [p0, g0] = curve[i];
        const auto& [p1, g1] = curve[i + 1];
        if (g1 <= target && g0 > target) {
            return p0 + (target - g0) / (g1 - g0) * (p1 - p0);
        }
    }
    throw std::invalid_argument(
        "compression_point: crossing not bracketed; extend the power grid");
}

}  // namespace sapa
