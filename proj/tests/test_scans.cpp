#include "sapa/scans.hpp"

#include "sapa/constants.hpp"
#include "sapa/hash.hpp"
#include "sapa/response.hpp"
#include "sapa/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

using namespace sapa;
using constants::two_pi;
using Cd = std::complex<double>;

namespace {

SystemParams reference_system(double g_c = two_pi * 60e6)
{
    SystemParams sys;
    sys.cavity.omega_r = two_pi * 5.198e9;
    sys.cavity.kappa_in = two_pi * 7e6;
    sys.cavity.kappa_out = two_pi * 7e6;
    sys.cavity.kappa_int = 0;
    DqdParams d;
    d.epsilon = 0;
    d.t_c = 0.5 * constants::h_planck * 5.32e9;
    d.g_c = g_c;
    d.gamma_1 = two_pi * 100e6;
    d.gamma_phi = two_pi * 50e6;
    d.lever_arm = 0.072;
    sys.dqds.push_back(d);
    return sys;
}

SystemParams two_dot_system()
{
    SystemParams sys = reference_system();
    DqdParams sensor = sys.dqds[0];
    sensor.g_c = two_pi * 40e6;
    sys.dqds.push_back(sensor);
    return sys;
}

Eigen::VectorXd uev_grid(std::initializer_list<double> uev)
{
    Eigen::VectorXd g(static_cast<Eigen::Index>(uev.size()));
    Eigen::Index i = 0;
    for (double v : uev) {
        g[i++] = constants::uev_to_joule(v);
    }
    return g;
}

}  // namespace

TEST_CASE("noise streams are reproducible and key-separated")
{
    NoiseStream a(42, 7, 3);
    NoiseStream b(42, 7, 3);
    for (int i = 0; i < 16; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
    }

    NoiseStream base(1, 2, 3);
    NoiseStream other_repeat(1, 2, 4);
    NoiseStream other_point(1, 3, 3);
    NoiseStream other_seed(2, 2, 3);
    const double u0 = base.uniform();
    CHECK(u0 != other_repeat.uniform());
    CHECK(u0 != other_point.uniform());
    CHECK(u0 != other_seed.uniform());

    NoiseStream u(9, 0, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("noise stream normals have unit-normal statistics")
{
    NoiseStream s(123, 4, 5);
    const int n = 40000;
    double sum = 0, sum2 = 0, cross = 0;
    for (int i = 0; i < n; ++i) {
        const Cd z = s.complex_normal();
        sum += z.real() + z.imag();
        sum2 += z.real() * z.real() + z.imag() * z.imag();
        cross += z.real() * z.imag();
    }
    const double mean = sum / (2.0 * n);
    const double var = sum2 / (2.0 * n) - mean * mean;
    const double corr = cross / n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
    CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("byte hashing matches published vectors and is order-sensitive")
{
    CHECK(fnv1a64("", 0) == kFnvOffset);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);

    HashAccumulator ab;
    ab.add("a").add("b");
    HashAccumulator ba;
    ba.add("b").add("a");
    CHECK(ab.value() != ba.value());

    HashAccumulator x;
    x.add(1.0);
    HashAccumulator y;
    y.add(std::nextafter(1.0, 2.0));
    CHECK(x.value() != y.value());

    HashAccumulator m1;
    m1.add_matrix(Eigen::Vector2d(1.0, 2.0));
    HashAccumulator m2;
    m2.add_matrix(Eigen::Vector2d(2.0, 1.0));
    CHECK(m1.value() != m2.value());
}

TEST_CASE("pump-off map normalization, symmetry, and blockade reference")
{
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    const Eigen::VectorXd freqs =
        Eigen::VectorXd::LinSpaced(41, w_r - two_pi * 30e6, w_r + two_pi * 30e6);
    const Eigen::VectorXd eps =
        uev_grid({-100, -40, -8, 0, 8, 40, 100, 400});

    const SpectrumMap map = rabi_map(sys, freqs, eps);
    map.validate();
    CHECK(map.scan_kind == "rabi");
    CHECK((map.valid.array() == 1).all());

    // The detuning enters only through its square, so mirrored columns are
    // identical.
    for (int c : {0, 1, 2}) {
        const int mirror = 6 - c;
        CHECK((map.normalized.col(c).array() ==
               map.normalized.col(mirror).array())
                  .all());
    }

    // Zero-coupling system: unity transmission relative to the blockade
    // reference at the bare resonance.
    const SpectrumMap bare = rabi_map(reference_system(0.0), freqs, eps);
    const Eigen::Index i_res = 20;  // grid midpoint = bare resonance
    REQUIRE(freqs[i_res] == doctest::Approx(w_r));
    for (Eigen::Index j = 0; j < eps.size(); ++j) {
        CHECK(std::abs(bare.normalized(i_res, j) - 1.0) < 1e-6);
    }

    // Interacting dot at zero detuning suppresses on-resonance transmission.
    const Eigen::Index j_zero = 3;
    CHECK(map.normalized(i_res, j_zero) < 0.5);

    // Far-detuned column is back to the bare cavity line.
    const Eigen::Index j_far = 7;
    for (Eigen::Index i = 0; i < freqs.size(); ++i) {
        CHECK(map.normalized(i, j_far) ==
              doctest::Approx(bare.normalized(i, j_far)).epsilon(1e-3));
    }
}

TEST_CASE("zero-amplitude pump reproduces the analytic pump-off response")
{
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    const Eigen::VectorXd freqs =
        Eigen::VectorXd::LinSpaced(5, w_r - two_pi * 4e6, w_r + two_pi * 4e6);
    const Eigen::VectorXd eps = uev_grid({0, 8});

    const SpectrumMap off = gain_map(sys, 0.0, two_pi * 1e6, freqs, eps);
    off.validate();
    CHECK((off.valid.array() == 1).all());

    const SpectrumMap analytic = rabi_map(sys, freqs, eps);
    for (Eigen::Index j = 0; j < eps.size(); ++j) {
        for (Eigen::Index i = 0; i < freqs.size(); ++i) {
            CHECK(off.normalized(i, j) ==
                  doctest::Approx(analytic.normalized(i, j)).epsilon(1e-3));
        }
    }
}

TEST_CASE("pump-on amplification is localized near zero detuning")
{
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    const double pump_amp = 1.8e4;
    const double beat = two_pi * 1e6;
    Eigen::VectorXd freqs(1);
    freqs << w_r;
    const Eigen::VectorXd eps = uev_grid({0, 300});

    const SpectrumMap on = gain_map(sys, pump_amp, beat, freqs, eps);
    const SpectrumMap off = gain_map(sys, 0.0, beat, freqs, eps);
    on.validate();
    REQUIRE((on.valid.array() == 1).all());
    REQUIRE((off.valid.array() == 1).all());

    const double ratio_zero = on.normalized(0, 0) / off.normalized(0, 0);
    const double ratio_far = on.normalized(0, 1) / off.normalized(0, 1);
    CHECK(ratio_zero > 1.3);
    CHECK(std::abs(ratio_far - 1.0) < 0.02);
}

TEST_CASE("amplified line is narrower than the bare cavity line")
{
    // At zero detuning the dressed (lower-polariton) resonance sits a few
    // tens of MHz below the bare cavity; the amplified peak lives there.
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    const Eigen::VectorXd freqs = Eigen::VectorXd::LinSpaced(
        61, w_r - two_pi * 45e6, w_r + two_pi * 15e6);
    const Eigen::VectorXd eps = uev_grid({0});

    const SpectrumMap on = gain_map(sys, 1.8e4, two_pi * 1e6, freqs, eps);
    REQUIRE((on.valid.array() == 1).all());
    const Eigen::VectorXd power =
        on.normalized.col(0).array().square().matrix();
    const double width = fwhm(freqs, power);
    CHECK(width < 0.9 * sys.cavity.kappa_total());
    CHECK(width > 0.0);
}

TEST_CASE("gain falls off as the pump detaches from the signal")
{
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    const Eigen::VectorXd beats =
        (Eigen::VectorXd(3) << two_pi * 0.5e6, two_pi * 2e6, two_pi * 25e6)
            .finished();
    const Eigen::VectorXd eps = uev_grid({0});

    const SpectrumMap tm = tune_map(sys, 1.8e4, w_r, beats, eps);
    tm.validate();
    CHECK(tm.scan_kind == "tune");
    REQUIRE((tm.valid.array() == 1).all());

    const SpectrumMap off = rabi_map(sys, (Eigen::VectorXd(1) << w_r).finished(), eps);
    const double off_level = off.normalized(0, 0);
    CHECK(tm.normalized(0, 0) > tm.normalized(2, 0));
    CHECK(tm.normalized(0, 0) > 1.3 * off_level);
    CHECK(tm.normalized(2, 0) == doctest::Approx(off_level).epsilon(0.1));
}

TEST_CASE("tone spectrum places signal, pump, and idler correctly")
{
    const SystemParams sys = reference_system();
    const double w_s = sys.cavity.omega_r - two_pi * 4e6;
    const double beat = two_pi * 1e6;
    const double w_p = w_s + beat;
    const DriveTone pump{w_p, 2.0e4, 0.0};
    const DriveTone probe{w_s, 10.0, 0.0};

    const ToneSpectrum ts = tone_spectrum(sys, pump, probe);
    ts.validate();
    REQUIRE(ts.tones.size() == 5);
    CHECK(ts.tone(-1).lab_frequency == doctest::Approx(w_s).epsilon(1e-12));
    CHECK(std::abs(ts.tone(+1).lab_frequency - (2.0 * w_p - w_s)) < 1e-2);
    CHECK(ts.tone(0).lab_frequency == doctest::Approx(w_p).epsilon(1e-12));

    // Pump output dominates, then the transmitted signal, then the idler.
    CHECK(ts.tone(0).power_db > ts.tone(-1).power_db);
    CHECK(ts.tone(-1).power_db > ts.tone(+1).power_db);
    // The idler is a real mixing product, far above the numeric floor.
    CHECK(ts.tone(+1).power_db > ts.tone(-1).power_db - 60.0);

    // Without a pump the idler (and the pump tone) vanish.
    const DriveTone no_pump{w_p, 0.0, 0.0};
    const ToneSpectrum ts_off = tone_spectrum(sys, no_pump, probe);
    CHECK(ts_off.tone(+1).power_db < ts_off.tone(-1).power_db - 60.0);
    CHECK(ts_off.tone(0).power_db < ts_off.tone(-1).power_db - 60.0);

    // Without light-matter coupling there is no mixing either.
    const ToneSpectrum ts_bare =
        tone_spectrum(reference_system(0.0), pump, probe);
    CHECK(ts_bare.tone(+1).power_db < ts_bare.tone(-1).power_db - 60.0);

    CHECK_THROWS_AS(ts.tone(3), std::out_of_range);
}

TEST_CASE("readout sweep: determinism, leg conventions, noise statistics")
{
    const SystemParams sys = two_dot_system();
    const double w_r = sys.cavity.omega_r;
    const DriveTone pump{w_r + two_pi * 1e6, 1.8e4, 0.0};
    const DriveTone probe{w_r, 2000.0, 0.0};
    const Eigen::VectorXd eps2 = uev_grid({0, 20});
    NoiseChain noise;
    noise.n_sapa = 1.5;
    noise.n_hemt = 10.0;
    noise.g_sapa_linear = 13.4;
    const int repeats = 200;
    const std::uint64_t seed = 11;
    ReadoutOptions opts;
    opts.bandwidth_hz = 1e3;

    const ReadoutSweepResult r =
        readout_sweep(sys, 0, pump, probe, eps2, noise, repeats, seed, opts);
    r.validate();
    REQUIRE(r.pump_on.valid[0] == 1);
    REQUIRE(r.pump_off.valid[0] == 1);
    CHECK(r.a0 == doctest::Approx(2000.0).epsilon(1e-12));

    // Pump-off leg equals conventional dispersive readout: amplifier dot
    // decoupled, bare-resonance probe, analytic linear response.
    SystemParams conventional = sys;
    conventional.dqds[0].g_c = 0.0;
    for (Eigen::Index i = 0; i < eps2.size(); ++i) {
        conventional.dqds[1].epsilon = eps2[i];
        const double expect =
            std::abs(linear_response_transmission(w_r, conventional)) /
            blockade_transmission(sys);
        CHECK(r.pump_off.amplitude[i] ==
              doctest::Approx(expect).epsilon(1e-3));
    }

    // Ensemble spread matches the chain noise model on both legs.
    const double sig_on = chain_noise_std(noise, opts.bandwidth_hz,
                                          probe.frequency, true, r.a0);
    const double sig_off = chain_noise_std(noise, opts.bandwidth_hz, w_r,
                                           false, r.a0);
    for (Eigen::Index i = 0; i < eps2.size(); ++i) {
        CHECK(r.pump_on.ensembles[i].std_dev ==
              doctest::Approx(sig_on).epsilon(0.25));
        CHECK(r.pump_off.ensembles[i].std_dev ==
              doctest::Approx(sig_off).epsilon(0.25));
        CHECK(std::abs(r.pump_on.ensembles[i].mean -
                       r.pump_on.amplitude[i]) < 4.0 * sig_on);
        CHECK(std::abs(r.pump_off.ensembles[i].mean -
                       r.pump_off.amplitude[i]) < 4.0 * sig_off);
    }

    // Reruns are byte-identical; a different seed moves only the noise.
    const ReadoutSweepResult again =
        readout_sweep(sys, 0, pump, probe, eps2, noise, repeats, seed, opts);
    CHECK(again.config_hash == r.config_hash);
    CHECK((again.pump_on.amplitude.array() == r.pump_on.amplitude.array())
              .all());
    for (Eigen::Index i = 0; i < eps2.size(); ++i) {
        CHECK((again.pump_on.ensembles[i].repeats.array() ==
               r.pump_on.ensembles[i].repeats.array())
                  .all());
        CHECK((again.pump_off.ensembles[i].repeats.array() ==
               r.pump_off.ensembles[i].repeats.array())
                  .all());
    }
    const ReadoutSweepResult reseeded = readout_sweep(
        sys, 0, pump, probe, eps2, noise, repeats, seed + 1, opts);
    CHECK(reseeded.config_hash != r.config_hash);
    CHECK((reseeded.pump_on.amplitude.array() == r.pump_on.amplitude.array())
              .all());
    CHECK_FALSE((reseeded.pump_on.ensembles[0].repeats.array() ==
                 r.pump_on.ensembles[0].repeats.array())
                    .all());
}

TEST_CASE("readout sweep input validation")
{
    const SystemParams one_dot = reference_system();
    const SystemParams sys = two_dot_system();
    const DriveTone pump{sys.cavity.omega_r + two_pi * 1e6, 1e4, 0.0};
    const DriveTone probe{sys.cavity.omega_r, 2000.0, 0.0};
    const Eigen::VectorXd eps2 = uev_grid({0});
    const NoiseChain noise;

    CHECK_THROWS_AS(
        readout_sweep(one_dot, 0, pump, probe, eps2, noise, 4, 1, {}),
        std::invalid_argument);
    CHECK_THROWS_AS(readout_sweep(sys, 2, pump, probe, eps2, noise, 4, 1, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(readout_sweep(sys, 0, pump, probe, eps2, noise, 1, 1, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(readout_sweep(sys, 0, pump, probe, Eigen::VectorXd(),
                                  noise, 4, 1, {}),
                    std::invalid_argument);
}

TEST_CASE("compression sweep yields a flat plateau and a finite rolloff")
{
    const SystemParams sys = reference_system();
    const double w_s = sys.cavity.omega_r;
    const double beat = two_pi * 1e6;
    const double amp = calibrate_pump(sys, w_s, beat);
    const DriveTone pump{w_s + beat, amp, 0.0};
    const DriveTone probe_template{w_s, 1.0, 0.0};
    const Eigen::VectorXd powers = Eigen::VectorXd::LinSpaced(16, -140, -95);

    const CompressionResult res =
        compression_sweep(sys, pump, probe_template, powers);
    REQUIRE(res.curve.size() >= 10);
    CHECK(std::abs(res.curve[0].second - res.curve[1].second) < 0.1);
    CHECK(res.p1db_dbm > -130.0);
    CHECK(res.p1db_dbm < -110.0);

    // A grid that never leaves the plateau cannot bracket the rolloff.
    const Eigen::VectorXd flat = Eigen::VectorXd::LinSpaced(3, -150, -144);
    CHECK_THROWS_WITH_AS(compression_sweep(sys, pump, probe_template, flat),
                         doctest::Contains("extend"), std::invalid_argument);

    const Eigen::VectorXd lone = (Eigen::VectorXd(1) << -120.0).finished();
    CHECK_THROWS_AS(compression_sweep(sys, pump, probe_template, lone),
                    std::invalid_argument);
}

TEST_CASE("pump calibration reaches the target gain")
{
    const SystemParams sys = reference_system();
    const double w_s = sys.cavity.omega_r;
    const double beat = two_pi * 1e6;
    CalibrationOptions opts;

    const double amp = calibrate_pump(sys, w_s, beat, opts);
    CHECK(amp > 0.0);

    const DriveTone pump{w_s + beat, amp, 0.0};
    const DriveTone probe{w_s, opts.scan.probe_amp, 0.0};
    const double gain = pump_on_gain_db(sys, pump, probe, opts.scan);
    CHECK(std::abs(gain - opts.target_db) <= opts.tol_db);

    CHECK_THROWS_AS(calibrate_pump(sys, w_s, -beat, opts),
                    std::invalid_argument);
    CalibrationOptions bad = opts;
    bad.growth = 0.9;
    CHECK_THROWS_AS(calibrate_pump(sys, w_s, beat, bad),
                    std::invalid_argument);
    CalibrationOptions starved = opts;
    starved.max_steps = 1;
    CHECK_THROWS_WITH_AS(calibrate_pump(sys, w_s, beat, starved),
                         doctest::Contains("bracket"), std::runtime_error);

    // Detuned onto the gain ridge just below the resonator the target is
    // still reachable.
    const double w_near = sys.cavity.omega_r - two_pi * 4e6;
    const double amp_near = calibrate_pump(sys, w_near, beat, opts);
    const DriveTone pump_near{w_near + beat, amp_near, 0.0};
    const DriveTone probe_near{w_near, opts.scan.probe_amp, 0.0};
    const double gain_near = pump_on_gain_db(sys, pump_near, probe_near,
                                             opts.scan);
    CHECK(std::abs(gain_near - opts.target_db) <= opts.tol_db);

    // Far down on the lower polariton the gain tops out well below the
    // target; calibration must report the attainable maximum instead of
    // growing the pump forever.
    const double w_far = sys.cavity.omega_r - two_pi * 24e6;
    CHECK_THROWS_WITH_AS(calibrate_pump(sys, w_far, beat, opts),
                         doctest::Contains("attainable"), std::runtime_error);
}

TEST_CASE("photon guard masks runaway drive points")
{
    const SystemParams sys = reference_system();
    const Eigen::VectorXd freqs =
        Eigen::VectorXd::Constant(1, sys.cavity.omega_r);
    const Eigen::VectorXd eps = Eigen::VectorXd::Zero(1);

    PumpScanOptions opts;
    opts.periodic.max_photons = 1e-6;  // any drive trips the guard
    const SpectrumMap map =
        gain_map(sys, 1.8e4, two_pi * 1e6, freqs, eps, opts);
    map.validate();
    CHECK(map.valid(0, 0) == 0);
    CHECK(map.amplitude(0, 0) == std::complex<double>(0.0, 0.0));

    PumpScanOptions bad = opts;
    bad.periodic.max_photons = 0.0;
    CHECK_THROWS_AS(gain_map(sys, 1.8e4, two_pi * 1e6, freqs, eps, bad),
                    std::invalid_argument);
}

TEST_CASE("single-point gains tie together consistently")
{
    const SystemParams sys = reference_system();
    const double w_s = sys.cavity.omega_r;
    const DriveTone pump{w_s + two_pi * 1e6, 1.8e4, 0.0};
    const DriveTone probe{w_s, 2000.0, 0.0};

    const double g_p = pump_on_gain_db(sys, pump, probe);
    const double g_e = effective_gain_db(sys, pump, probe);
    // The two references differ exactly by the pump-off suppression level.
    const double suppression =
        std::abs(linear_response_transmission(w_s, sys)) /
        blockade_transmission(sys);
    CHECK(g_p - g_e ==
          doctest::Approx(-20.0 * std::log10(suppression)).epsilon(1e-9));
    CHECK(g_e < g_p);
}

TEST_CASE("failed grid points are masked, not fatal")
{
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    Eigen::VectorXd freqs(2);
    freqs << w_r - two_pi * 2e6, w_r + two_pi * 2e6;
    const Eigen::VectorXd eps = uev_grid({0});

    PumpScanOptions opts;
    opts.periodic.max_periods = 1;  // no point can certify a steady state
    const SpectrumMap map = gain_map(sys, 1.8e4, two_pi * 1e6, freqs, eps, opts);
    map.validate();
    CHECK((map.valid.array() == 0).all());
    CHECK((map.normalized.array() == 0).all());
}

TEST_CASE("spectrum map validation catches inconsistent contents")
{
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    const Eigen::VectorXd freqs =
        Eigen::VectorXd::LinSpaced(5, w_r - two_pi * 5e6, w_r + two_pi * 5e6);
    const SpectrumMap good = rabi_map(sys, freqs, uev_grid({0, 20}));
    good.validate();

    SpectrumMap tampered = good;
    tampered.normalized(0, 0) += 1e-6;
    CHECK_THROWS_AS(tampered.validate(), std::invalid_argument);

    SpectrumMap masked = good;
    masked.valid(1, 1) = 0;  // masked points must hold zeros
    CHECK_THROWS_AS(masked.validate(), std::invalid_argument);

    SpectrumMap no_ref = good;
    no_ref.a0 = 0.0;
    CHECK_THROWS_AS(no_ref.validate(), std::invalid_argument);

    SpectrumMap short_axis = good;
    short_axis.axis1.values.conservativeResize(3);
    CHECK_THROWS_AS(short_axis.validate(), std::invalid_argument);

    SpectrumMap unnamed = good;
    unnamed.scan_kind.clear();
    CHECK_THROWS_AS(unnamed.validate(), std::invalid_argument);
}

TEST_CASE("config hashes separate scans and react to any input change")
{
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    const Eigen::VectorXd freqs =
        Eigen::VectorXd::LinSpaced(5, w_r - two_pi * 5e6, w_r + two_pi * 5e6);
    const Eigen::VectorXd eps = uev_grid({0, 20});

    const SpectrumMap a = rabi_map(sys, freqs, eps);
    const SpectrumMap b = rabi_map(sys, freqs, eps);
    CHECK(a.config_hash == b.config_hash);

    Eigen::VectorXd eps_shift = eps;
    eps_shift[1] = std::nextafter(eps_shift[1], 1.0);
    CHECK(rabi_map(sys, freqs, eps_shift).config_hash != a.config_hash);

    SystemParams sys_shift = sys;
    sys_shift.dqds[0].g_c *= 1.0 + 1e-12;
    CHECK(rabi_map(sys_shift, freqs, eps).config_hash != a.config_hash);
}

TEST_CASE("pump-on maps rerun byte-identically")
{
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    Eigen::VectorXd freqs(3);
    freqs << w_r - two_pi * 3e6, w_r, w_r + two_pi * 3e6;
    const Eigen::VectorXd eps = uev_grid({0, 12});

    const SpectrumMap m1 = gain_map(sys, 1.5e4, two_pi * 1e6, freqs, eps);
    const SpectrumMap m2 = gain_map(sys, 1.5e4, two_pi * 1e6, freqs, eps);
    CHECK(m1.config_hash == m2.config_hash);
    CHECK((m1.valid.array() == m2.valid.array()).all());
    CHECK((m1.normalized.array() == m2.normalized.array()).all());
    CHECK((m1.amplitude.array() == m2.amplitude.array()).all());
}

TEST_CASE("scan input validation")
{
    const SystemParams sys = reference_system();
    const double w_r = sys.cavity.omega_r;
    const Eigen::VectorXd freqs = (Eigen::VectorXd(1) << w_r).finished();
    const Eigen::VectorXd eps = uev_grid({0});

    CHECK_THROWS_AS(rabi_map(sys, Eigen::VectorXd(), eps),
                    std::invalid_argument);
    CHECK_THROWS_AS(gain_map(sys, 1e4, 0.0, freqs, eps),
                    std::invalid_argument);
    CHECK_THROWS_AS(gain_map(sys, -1.0, two_pi * 1e6, freqs, eps),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        tune_map(sys, 1e4, w_r, (Eigen::VectorXd(1) << -1.0).finished(), eps),
        std::invalid_argument);
    PumpScanOptions bad;
    bad.probe_amp = 0.0;
    CHECK_THROWS_AS(gain_map(sys, 1e4, two_pi * 1e6, freqs, eps, bad),
                    std::invalid_argument);
    const DriveTone pump{w_r + two_pi * 1e6, 1e4, 0.0};
    const DriveTone mute_probe{w_r, 0.0, 0.0};
    CHECK_THROWS_AS(tone_spectrum(sys, pump, mute_probe),
                    std::invalid_argument);
}
