#include <doctest.h>

#include <cmath>
#include <vector>

#include "flexboc/twoway.hpp"

using namespace flexboc;

namespace {

double mean_ps(const ClockDiffSeries& s) {
    double sum = 0;
    for (fs_t v : s.delta_t_fs) sum += fs_to_ps(v);
    return sum / static_cast<double>(s.size());
}

double std_ps(const ClockDiffSeries& s) {
    const double mu = mean_ps(s);
    double acc = 0;
    for (fs_t v : s.delta_t_fs) {
        const double d = fs_to_ps(v) - mu;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(s.size() - 1));
}

} // namespace

TEST_CASE("clock diff solution arithmetic") {
    CalibrationSet cal;
    TwoWayEpochRecord rec{0, 0, 0, true, true};
    CHECK(*compute_clock_diff(rec, cal) == 0);

    rec.t_a_fs = fs_from_ps(200000);
    rec.t_b_fs = fs_from_ps(100000);
    CHECK(*compute_clock_diff(rec, cal) == fs_from_ps(50000));

    // (tTXB + tRXA - tTXA - tRXB) = 10 000 ps
    cal.tau_tx_b_ps = 7000;
    cal.tau_rx_a_ps = 3000;
    CHECK(*compute_clock_diff(rec, cal) == fs_from_ps(45000));

    rec.valid_b = false;
    CHECK_FALSE(compute_clock_diff(rec, cal).has_value());
}

TEST_CASE("calibration linearity: +delta on tau_TXA shifts dT by +delta/2") {
    const TwoWayEpochRecord rec{0, fs_from_ps(123456), fs_from_ps(-9876), true, true};
    CalibrationSet cal;
    cal.tau_tx_b_ps = 40;
    cal.tau_rx_a_ps = 11;
    const fs_t base = *compute_clock_diff(rec, cal);
    for (double delta : {10.0, 500.0, -64.0}) {
        CalibrationSet shifted = cal;
        shifted.tau_tx_a_ps += delta;
        CHECK(*compute_clock_diff(rec, shifted) - base == fs_from_ps(delta) / 2);
    }
}

TEST_CASE("jitter surrogate: anchor value, dB scaling, domain") {
    CHECK(jitter_sigma_ps(80.0) == doctest::Approx(0.8).epsilon(1e-12));
    // sigma scales as 10^(-dB/20): +6 dB halves it (x0.5012)
    const double s45 = jitter_sigma_ps(45.0);
    CHECK(jitter_sigma_ps(51.0) / s45 == doctest::Approx(std::pow(10.0, -0.3)).epsilon(1e-9));
    CHECK(jitter_sigma_ps(35.0) > s45);
    CHECK(jitter_sigma_ps(55.0) < s45);
    CHECK_THROWS(jitter_sigma_ps(19.0));
    CHECK_THROWS(jitter_sigma_ps(81.0));
}

TEST_CASE("measurement level: exact closure under reciprocity") {
    SiteClock a{SiteId::A, fs_from_ns(1.0)};
    SiteClock b{SiteId::B};
    LinkModel link;
    link.turb_sigma_ps = 3.0;  // reciprocal turbulence cancels exactly
    link.temp_drift.time_s = {0, 1};
    link.temp_drift.delay_ps = {0, 80};
    CalibrationSet cal;
    const auto series =
        run_exchange_measurement_level(a, b, link, cal, 5000, 1e-3, JitterModel{}, 42);
    REQUIRE(series.size() == 5000);
    for (fs_t v : series.delta_t_fs) CHECK(v == 1000000);
}

TEST_CASE("calibration terms cancel when solver knows them") {
    SiteClock a{SiteId::A, fs_from_ps(250)};
    SiteClock b{SiteId::B};
    LinkModel link;
    CalibrationSet cal;
    cal.tau_tx_a_ps = 120;
    cal.tau_rx_a_ps = 35;
    cal.tau_tx_b_ps = 260;
    cal.tau_rx_b_ps = 90;
    const auto series =
        run_exchange_measurement_level(a, b, link, cal, 100, 1e-3, JitterModel{}, 1);
    for (fs_t v : series.delta_t_fs) CHECK(v == fs_from_ps(250));
}

TEST_CASE("unmodeled asymmetry epsilon biases dT by epsilon/2") {
    SiteClock a{SiteId::A}, b{SiteId::B};
    LinkModel link;
    link.reciprocal = false;
    link.asymmetry_ps = 30.0;  // tau_BA - tau_AB
    const auto series = run_exchange_measurement_level(a, b, link, CalibrationSet{}, 50,
                                                       1e-3, JitterModel{}, 1);
    for (fs_t v : series.delta_t_fs) CHECK(fs_to_ps(v) == doctest::Approx(15.0).epsilon(1e-9));

    // a solver told the true asymmetry removes the bias
    const auto fixed = run_exchange_measurement_level(a, b, link, CalibrationSet{}, 50,
                                                      1e-3, JitterModel{}, 1, fs_from_ps(30.0));
    for (fs_t v : fixed.delta_t_fs) CHECK(v == 0);
}

TEST_CASE("drift cancels two-way while one-way sees it") {
    SiteClock a{SiteId::A}, b{SiteId::B};
    LinkModel link;
    link.temp_drift.time_s = {0, 1800, 3600};
    link.temp_drift.delay_ps = {-85, 85, -85};
    const auto series = run_exchange_measurement_level(a, b, link, CalibrationSet{}, 3600,
                                                       1.0, JitterModel{}, 9);
    double lo_a = 1e300, hi_a = -1e300;
    for (fs_t v : series.t_a_fs) {
        lo_a = std::min(lo_a, fs_to_ps(v));
        hi_a = std::max(hi_a, fs_to_ps(v));
    }
    CHECK(hi_a - lo_a == doctest::Approx(170.0).epsilon(0.01));
    for (fs_t v : series.delta_t_fs) CHECK(v == 0);
}

TEST_CASE("jitter model: white sigma matches and cn0 adds in quadrature") {
    SiteClock a{SiteId::A}, b{SiteId::B};
    LinkModel link;
    JitterModel jm;
    jm.sigma_ps = 4.0;
    const auto s1 = run_exchange_measurement_level(a, b, link, CalibrationSet{}, 20000,
                                                   1e-3, jm, 3);
    // dT = (T_A - T_B)/2 with independent per-site jitter: sigma/sqrt(2)
    CHECK(std_ps(s1) == doctest::Approx(4.0 / std::sqrt(2.0)).epsilon(0.05));

    jm.cn0_db_hz = 45.0;
    const double expect =
        std::sqrt(16.0 + std::pow(jitter_sigma_ps(45.0), 2)) / std::sqrt(2.0);
    const auto s2 = run_exchange_measurement_level(a, b, link, CalibrationSet{}, 20000,
                                                   1e-3, jm, 3);
    CHECK(std_ps(s2) == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("common-clock noise cancels in the difference") {
    SiteClock a{SiteId::A}, b{SiteId::B};
    a.reference = b.reference = true;
    a.white_pm_sigma_ps = b.white_pm_sigma_ps = 10.0;
    const auto s = run_exchange_measurement_level(a, b, LinkModel{}, CalibrationSet{}, 200,
                                                  1e-3, JitterModel{}, 4);
    // common draw enters T_A and T_B identically; halving is exact for even sums
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(std::abs(fs_to_ps(s.delta_t_fs[i])) <= 0.0005);
}

TEST_CASE("waveform level: noiseless reciprocal run recovers the offset") {
    SiteClock a{SiteId::A, fs_from_ns(1.0)};
    SiteClock b{SiteId::B};
    LinkModel link;
    link.attenuation_db = 0.0;
    WaveformRunOptions opts;
    opts.n_epochs = 100;
    const auto res = run_exchange_waveform_level(a, b, link, CalibrationSet{},
                                                 FlexBocConfig{}, opts, 21);
    REQUIRE(res.series.size() >= 20);
    CHECK(std::abs(mean_ps(res.series) - 1000.0) < 1.0);
}

TEST_CASE("waveform level: in-band frames carry epoch-tagged measurements") {
    SiteClock a{SiteId::A}, b{SiteId::B};
    LinkModel link;
    link.attenuation_db = 20.0;
    WaveformRunOptions opts;
    opts.n_epochs = 300;
    const auto res = run_exchange_waveform_level(a, b, link, CalibrationSet{},
                                                 FlexBocConfig{}, opts, 22);
    REQUIRE(!res.frames_at_a.empty());
    REQUIRE(!res.frames_at_b.empty());
    CHECK(res.crc_failures_a == 0);
    CHECK(res.crc_failures_b == 0);
    for (const auto& f : res.frames_at_a) CHECK(f.site_id == SiteId::B);
    for (const auto& f : res.frames_at_b) CHECK(f.site_id == SiteId::A);
    // payloads are the sender's measured one-way interval, ~ base delay
    for (const auto& f : res.frames_at_a)
        CHECK(std::abs(static_cast<double>(f.payload_ps) - 100069.0) < 100.0);
}
