// Scalar figures of merit: dB gains, cooperativity, FWHM extraction,
// readout SNR, the amplifier noise chain, and the compression point.

#include "sapa/metrics.hpp"

#include "sapa/constants.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sapa;

TEST_CASE("parametric gain in dB")
{
    CHECK(parametric_gain(1.0, 1.0) == doctest::Approx(0.0));
    CHECK(parametric_gain(10.0, 1.0) == doctest::Approx(20.0));
    CHECK(parametric_gain(3.6644, 1.0) == doctest::Approx(11.28).epsilon(1e-3));

    // Scale invariance of dB ratios.
    std::mt19937 rng(0x5eed0001u);
    std::uniform_real_distribution<double> dist(1e-6, 1e6);
    for (int i = 0; i < 50; ++i) {
        const double x = dist(rng);
        CHECK(parametric_gain(3.0 * x, x) == doctest::Approx(parametric_gain(3.0, 1.0)));
    }

    CHECK_THROWS_AS(parametric_gain(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(parametric_gain(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("effective gain in dB")
{
    CHECK(effective_gain(1.0, 1.0) == doctest::Approx(0.0));
    CHECK(effective_gain(1.6257, 1.0) == doctest::Approx(4.22).epsilon(1e-3));
    CHECK(effective_gain(1.5346, 1.0) == doctest::Approx(3.72).epsilon(1e-3));
    CHECK_THROWS_AS(effective_gain(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("cooperativity and the strong-coupling flag")
{
    const double g = constants::two_pi * 60e6;
    const double gamma = constants::two_pi * 100e6;
    const double kappa = constants::two_pi * 14e6;
    const double c = cooperativity(g, gamma, kappa);
    CHECK(c == doctest::Approx(10.2857).epsilon(1e-4));
    CHECK(std::abs(c - 10.3) < 0.1);

    CHECK(cooperativity(2 * g, gamma, kappa) == doctest::Approx(4.0 * c));
    CHECK_THROWS_AS(cooperativity(g, 0.0, kappa), std::invalid_argument);
    CHECK_THROWS_AS(cooperativity(g, gamma, -1.0), std::invalid_argument);

    CHECK(is_strong_coupling(g, gamma, kappa));
    CHECK_FALSE(is_strong_coupling(constants::two_pi * 3e6, gamma, kappa));
}

TEST_CASE("FWHM of a Lorentzian power spectrum equals kappa")
{
    const double kappa = constants::two_pi * 14e6;
    const double omega_r = constants::two_pi * 5.198e9;
    const int n = 201;
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = omega_r + constants::two_pi * 80e6 * (i / (n - 1.0) - 0.5);
        const double d = x[i] - omega_r;
        y[i] = (kappa * kappa / 4) / (d * d + kappa * kappa / 4);
    }
    const double width = fwhm(x, y);
    CHECK(std::abs(width / kappa - 1.0) < 0.02);

    // Doubling kappa doubles the width.
    Eigen::VectorXd y2(n);
    for (int i = 0; i < n; ++i) {
        const double d = x[i] - omega_r;
        y2[i] = (kappa * kappa) / (d * d + kappa * kappa);
    }
    CHECK(fwhm(x, y2) == doctest::Approx(2.0 * width).epsilon(0.02));

    // Invariant under amplitude rescaling, and under a common offset when
    // the baseline is declared.
    CHECK(fwhm(x, 7.3 * y) == doctest::Approx(width));
    CHECK(fwhm(x, (y.array() + 0.5).matrix(), 0.5) == doctest::Approx(width));
}

TEST_CASE("FWHM error paths")
{
    Eigen::VectorXd x(5), y(5);
    x << 0, 1, 2, 3, 4;
    y << 0.9, 0.95, 1.0, 0.95, 0.9;  // never falls below half maximum
    CHECK_THROWS_AS(fwhm(x, y), std::invalid_argument);

    Eigen::VectorXd flat = Eigen::VectorXd::Constant(5, 1.0);
    CHECK_THROWS_AS(fwhm(x, flat, 1.0), std::invalid_argument);

    Eigen::VectorXd unsorted(5);
    unsorted << 0, 2, 1, 3, 4;
    CHECK_THROWS_AS(fwhm(unsorted, y), std::invalid_argument);

    CHECK_THROWS_AS(fwhm(x.head(2), y.head(2)), std::invalid_argument);
}

TEST_CASE("measurement ensembles carry consistent statistics")
{
    Eigen::VectorXd r(4);
    r << 1.0, 1.2, 0.8, 1.0;
    const auto e = make_ensemble(r);
    CHECK(e.mean == doctest::Approx(1.0));
    CHECK(e.std_dev ==
          doctest::Approx(std::sqrt((0.04 + 0.04) / 3.0)).epsilon(1e-12));
    CHECK_NOTHROW(e.validate());

    auto tampered = e;
    tampered.mean += 1e-6;
    CHECK_THROWS_AS(tampered.validate(), std::invalid_argument);

    CHECK_THROWS_AS(make_ensemble(Eigen::VectorXd::Constant(1, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("readout SNR follows the two-ensemble contrast formula")
{
    const double s = 0.05 * std::sqrt(2.0);
    Eigen::VectorXd on(2), off(2);
    on << 1.0 - s, 1.0 + s;    // mean 1.0, unbiased std 0.1
    off << -s, s;              // mean 0.0, unbiased std 0.1
    const auto e_on = make_ensemble(on);
    const auto e_off = make_ensemble(off);
    CHECK(e_on.std_dev == doctest::Approx(0.1));
    CHECK(snr(e_on, e_off) == doctest::Approx(1.0 / (0.1 * std::sqrt(2.0))));

    // Equal means give zero.
    CHECK(snr(e_on, e_on) == doctest::Approx(0.0));

    // Invariant under a common offset; scales as 1/s with the std.
    const auto shift_on = make_ensemble((on.array() + 3.0).matrix());
    const auto shift_off = make_ensemble((off.array() + 3.0).matrix());
    CHECK(snr(shift_on, shift_off) == doctest::Approx(snr(e_on, e_off)));

    const auto wide_on = make_ensemble((1.0 + 2.0 * (on.array() - 1.0)).matrix());
    const auto wide_off = make_ensemble((2.0 * off.array()).matrix());
    CHECK(snr(wide_on, wide_off) ==
          doctest::Approx(0.5 * snr(e_on, e_off)));

    // Zero combined spread is rejected.
    auto degenerate = e_off;
    degenerate.repeats.setZero();
    degenerate.mean = 0;
    degenerate.std_dev = 0;
    CHECK_THROWS_AS(snr(degenerate, degenerate), std::invalid_argument);
}

TEST_CASE("noise chain output quanta and normalized amplitude std")
{
    NoiseChain chain;
    chain.n_sapa = 1.5;
    chain.n_hemt = 10.0;
    chain.g_sapa_linear = 13.4;

    CHECK(output_noise_quanta(chain, false) == doctest::Approx(10.0));
    CHECK(output_noise_quanta(chain, true) == doctest::Approx(30.1));

    // The noise-floor rise inverts back to the added quanta.
    const double rise =
        output_noise_quanta(chain, true) / output_noise_quanta(chain, false);
    CHECK(rise == doctest::Approx(3.01));
    CHECK((rise - 1.0) * chain.n_hemt / chain.g_sapa_linear ==
          doctest::Approx(1.5));

    const double omega = constants::two_pi * 5.198e9;
    const double bw = 40e3;
    const double a0 = 250.0;
    const double sigma = chain_noise_std(chain, bw, omega, true, a0);
    CHECK(sigma * sigma * a0 * a0 / bw == doctest::Approx(30.1));
    CHECK(chain_noise_std(chain, bw, omega, false, a0) ==
          doctest::Approx(std::sqrt(10.0 * bw) / a0));

    CHECK_THROWS_AS(chain_noise_std(chain, 0.0, omega, true),
                    std::invalid_argument);
    CHECK_THROWS_AS(chain_noise_std(chain, bw, -omega, true),
                    std::invalid_argument);

    NoiseChain bad = chain;
    bad.g_sapa_linear = 0.5;
    CHECK_THROWS_AS(output_noise_quanta(bad, true), std::invalid_argument);
    bad = chain;
    bad.n_sapa = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("SNR improvement from the amplified chain")
{
    NoiseChain chain;
    chain.n_sapa = 1.5;
    chain.n_hemt = 10.0;
    chain.g_sapa_linear = 13.4;
    CHECK(snr_improvement(chain) == doctest::Approx(2.11).epsilon(5e-3));
    CHECK(std::abs(snr_improvement(chain) - 2.11) < 0.01);

    // Noiseless preamp limit: sqrt(g).
    auto noiseless = chain;
    noiseless.n_sapa = 0;
    CHECK(snr_improvement(noiseless) == doctest::Approx(std::sqrt(13.4)));

    // Unity gain only adds noise.
    auto passive = chain;
    passive.g_sapa_linear = 1.0;
    CHECK(snr_improvement(passive) ==
          doctest::Approx(std::sqrt(10.0 / 11.5)));
    CHECK(snr_improvement(passive) <= 1.0);

    // Monotonicity: up in g and n_hemt, down in n_sapa.
    auto more_gain = chain;
    more_gain.g_sapa_linear *= 1.5;
    CHECK(snr_improvement(more_gain) > snr_improvement(chain));
    auto more_hemt = chain;
    more_hemt.n_hemt *= 1.5;
    CHECK(snr_improvement(more_hemt) > snr_improvement(chain));
    auto more_sapa = chain;
    more_sapa.n_sapa *= 1.5;
    CHECK(snr_improvement(more_sapa) < snr_improvement(chain));
}

TEST_CASE("effective temperature of added noise quanta")
{
    const double omega = constants::two_pi * 5.198e9;
    CHECK(effective_temperature(1.0, omega) ==
          doctest::Approx(0.249).epsilon(2e-3));
    CHECK(effective_temperature(1.5, omega) ==
          doctest::Approx(0.374).epsilon(2e-3));
    CHECK(effective_temperature(0.0, omega) == doctest::Approx(0.0));
    CHECK_THROWS_AS(effective_temperature(-0.1, omega), std::invalid_argument);
    CHECK_THROWS_AS(effective_temperature(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("compression point interpolation")
{
    // Synthetic curve: flat 11.28 dB plateau, then 0.2 dB/dBm compression.
    std::vector<std::pair<double, double>> curve;
    for (int p = -135; p <= -110; ++p) {
        const double over = std::max(0.0, (p + 125.0) * 0.2);
        curve.emplace_back(p, 11.28 - over);
    }
    CHECK(compression_point(curve) == doctest::Approx(-120.0));

    // Flat curve never crosses.
    std::vector<std::pair<double, double>> flat;
    for (int p = -135; p <= -110; ++p) {
        flat.emplace_back(p, 11.28);
    }
    CHECK_THROWS_AS(compression_point(flat), std::invalid_argument);

    // Grid that stops before the crossing asks for an extension.
    std::vector<std::pair<double, double>> short_grid(curve.begin(),
                                                      curve.begin() + 12);
    CHECK_THROWS_WITH_AS(compression_point(short_grid),
                         doctest::Contains("extend"), std::invalid_argument);

    // Non-monotone powers are rejected.
    auto unsorted = curve;
    std::swap(unsorted[3], unsorted[4]);
    CHECK_THROWS_AS(compression_point(unsorted), std::invalid_argument);

    const std::vector<std::pair<double, double>> lone = {{-120.0, 11.28}};
    CHECK_THROWS_AS(compression_point(lone), std::invalid_argument);
}
