#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "flexboc/channel.hpp"
#include "flexboc/signal.hpp"

using namespace flexboc;

namespace {

// group-delay oracle: least-squares phase-slope fit of the cross-spectrum
// over the occupied band, exact for a pure delay
double measure_delay_s(const std::vector<double>& x, const std::vector<double>& y,
                       double fs, double f_lo, double f_hi) {
    const std::size_t n = std::min(x.size(), y.size());
    const std::size_t k_lo = static_cast<std::size_t>(f_lo / fs * n);
    const std::size_t k_hi = static_cast<std::size_t>(f_hi / fs * n);
    const std::size_t stride = 64;  // keeps the direct DFT affordable
    double sww = 0, swf = 0, swp = 0, swfp = 0, swff = 0;
    double prev_phi = 0.0;
    double unwrap = 0.0;
    for (std::size_t k = k_lo; k <= k_hi; k += stride) {
        std::complex<double> X = 0, Y = 0;
        const double w0 = 2 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        std::complex<double> ph(1, 0);
        const std::complex<double> step = std::polar(1.0, -w0);
        for (std::size_t i = 0; i < n; ++i) {
            X += x[i] * ph;
            Y += y[i] * ph;
            ph *= step;
            if ((i & 1023u) == 0u) ph /= std::abs(ph);
        }
        const std::complex<double> c = Y * std::conj(X);
        const double wgt = std::abs(c);
        double phi = std::arg(c) + unwrap;
        if (k > k_lo) {
            while (phi - prev_phi > M_PI) { phi -= 2 * M_PI; unwrap -= 2 * M_PI; }
            while (phi - prev_phi < -M_PI) { phi += 2 * M_PI; unwrap += 2 * M_PI; }
        }
        prev_phi = phi;
        const double f = static_cast<double>(k) * fs / static_cast<double>(n);
        sww += wgt;
        swf += wgt * f;
        swp += wgt * phi;
        swfp += wgt * f * phi;
        swff += wgt * f * f;
    }
    const double slope = (sww * swfp - swf * swp) / (sww * swff - swf * swf);
    return -slope / (2 * M_PI);
}

} // namespace

TEST_CASE("drift profile interpolation with end holds") {
    DriftProfile p;
    CHECK(p.at(5.0) == 0.0);
    p.time_s = {0, 10, 20};
    p.delay_ps = {0, 100, 50};
    CHECK(p.at(-1) == doctest::Approx(0));
    CHECK(p.at(5) == doctest::Approx(50));
    CHECK(p.at(15) == doctest::Approx(75));
    CHECK(p.at(99) == doctest::Approx(50));
}

TEST_CASE("delay series: constant, 30 m base delay, reciprocity") {
    LinkModel m;
    m.turb_sigma_ps = 0.0;
    const auto d = sample_delay_series(m, 100, 1e-3, 1);
    REQUIRE(d.tau_ab_s.size() == 100);
    for (double t : d.tau_ab_s) CHECK(t == doctest::Approx(100.069e-9).epsilon(1e-12));
    CHECK(d.tau_ab_s == d.tau_ba_s);  // bitwise reciprocity

    m.turb_sigma_ps = 2.0;
    const auto dn = sample_delay_series(m, 1000, 1e-3, 2);
    CHECK(dn.tau_ab_s == dn.tau_ba_s);
    CHECK(sample_delay_series(m, 1000, 1e-3, 2).tau_ab_s == dn.tau_ab_s);
}

TEST_CASE("delay series: constant asymmetry splits the directions") {
    LinkModel m;
    m.reciprocal = false;
    m.asymmetry_ps = 30.0;
    const auto d = sample_delay_series(m, 10, 1e-3, 3);
    for (std::size_t k = 0; k < 10; ++k)
        CHECK((d.tau_ba_s[k] - d.tau_ab_s[k]) * 1e12 == doctest::Approx(30.0).epsilon(1e-9));
}

TEST_CASE("fig7-style drift profile gives ~170 ps one-way peak-to-peak") {
    LinkModel m;
    m.temp_drift.time_s = {0, 900, 1800, 2700, 3600};
    m.temp_drift.delay_ps = {-85, 85, -85, 85, -85};
    const auto d = sample_delay_series(m, 3600, 1.0, 4);
    double lo = 1e99, hi = -1e99;
    for (double t : d.tau_ab_s) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    CHECK((hi - lo) * 1e12 == doctest::Approx(170.0).epsilon(0.01));
}

TEST_CASE("apply_channel identity and attenuation") {
    FlexBocConfig c;
    const PnCode code = gen_pn_code(c, 1);
    const Waveform w = synth_flexboc(c, code, {}, 0, 1e-3);

    const Waveform id = apply_channel(w, 0.0, 0.0, 0.0, 1);
    REQUIRE(id.samples.size() == w.samples.size());
    double worst = 0;
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        worst = std::max(worst, std::abs(id.samples[i] - w.samples[i]));
    CHECK(worst < 1e-9);

    const Waveform att = apply_channel(w, 0.0, 40.0, 0.0, 1);
    for (std::size_t i = 0; i < 1000; ++i)
        CHECK(att.samples[i] == doctest::Approx(0.01 * w.samples[i]).epsilon(1e-9));
}

TEST_CASE("3.6 ns fractional delay lands within 1 ps") {
    FlexBocConfig c;
    const PnCode code = gen_pn_code(c, 1);
    const Waveform w = synth_flexboc(c, code, {}, 0, 1e-3);
    const Waveform d = apply_channel(w, 3.6e-9, 0.0, 0.0, 1);
    const double est = measure_delay_s(w.samples, d.samples, c.sample_rate, 58e6, 82e6);
    CHECK(std::abs(est - 3.6e-9) < 1e-12);
}

TEST_CASE("fractional delay composes linearly within 0.1 ps") {
    FlexBocConfig c;
    const PnCode code = gen_pn_code(c, 1);
    const Waveform w = synth_flexboc(c, code, {}, 0, 1e-3);
    const Waveform once = apply_channel(w, 2.9e-9, 0.0, 0.0, 1);
    const Waveform twice = apply_channel(apply_channel(w, 1.7e-9, 0.0, 0.0, 1), 1.2e-9, 0.0, 0.0, 1);
    const double resid =
        measure_delay_s(once.samples, twice.samples, c.sample_rate, 58e6, 82e6);
    CHECK(std::abs(resid) < 1e-13);
}

TEST_CASE("channel noise level matches the configured density") {
    FlexBocConfig c;
    const PnCode code = gen_pn_code(c, 1);
    const Waveform w = synth_flexboc(c, code, {}, 0, 1e-3);
    const double noise_psd = cn0_to_noise_psd(45.0);
    const Waveform y = apply_channel(w, 0.0, 40.0, noise_psd, 7);

    double p_sig = 0, p_out = 0;
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const double s = 0.01 * w.samples[i];
        p_sig += s * s;
        const double n = y.samples[i] - s;
        p_out += n * n;
    }
    p_sig /= static_cast<double>(w.samples.size());
    p_out /= static_cast<double>(w.samples.size());
    // sigma^2 = N0 * P * fs / 2
    const double expect = noise_psd * p_sig * c.sample_rate / 2.0;
    CHECK(10 * std::log10(p_out / expect) == doctest::Approx(0.0).epsilon(1.0).scale(1.0));
}
