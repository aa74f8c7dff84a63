#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexboc/channel.hpp"
#include "flexboc/receiver.hpp"
#include "flexboc/signal.hpp"
#include "flexboc/time_fs.hpp"

namespace flexboc {

struct SiteClock {
    SiteId site_id = SiteId::A;
    fs_t offset_fs = 0;            // contribution to the clock difference
    double drift = 0.0;            // s/s
    double white_pm_sigma_ps = 0.0;  // clock/counter noise per epoch
    bool reference = false;        // shared-reference setups set this on both
};

struct CalibrationSet {
    double tau_tx_a_ps = 0.0;
    double tau_rx_a_ps = 0.0;
    double tau_tx_b_ps = 0.0;
    double tau_rx_b_ps = 0.0;

    // (tau_TXB + tau_RXA - tau_TXA - tau_RXB), the term subtracted in the
    // clock-difference solution
    fs_t differential_fs() const {
        return fs_from_ps(tau_tx_b_ps) + fs_from_ps(tau_rx_a_ps) -
               fs_from_ps(tau_tx_a_ps) - fs_from_ps(tau_rx_b_ps);
    }
};

struct TwoWayEpochRecord {
    std::int64_t epoch_index = 0;
    fs_t t_a_fs = 0;
    fs_t t_b_fs = 0;
    bool valid_a = false;
    bool valid_b = false;

    bool usable() const { return valid_a && valid_b; }
};

struct ClockDiffSeries {
    double epoch_period_s = 1e-3;
    std::vector<std::int64_t> epoch_index;  // strictly increasing, gaps allowed
    std::vector<fs_t> delta_t_fs;
    std::vector<fs_t> t_a_fs, t_b_fs;
    std::vector<double> cn0_a_db_hz, cn0_b_db_hz;
    std::uint64_t seed = 0;
    std::string scenario;

    std::size_t size() const { return epoch_index.size(); }
    std::vector<double> delta_t_sec() const;  // phase data for the stability estimators
};

// Eq.-style clock-difference solution:
// dT = 1/2 [ (T_A - T_B) - (tau_BA - tau_AB) - (tTXB + tRXA - tTXA - tRXB) ]
// path_asym_fs supplies (tau_BA - tau_AB); 0 under the reciprocity assumption.
std::optional<fs_t> compute_clock_diff(const TwoWayEpochRecord& rec,
                                       const CalibrationSet& cal,
                                       fs_t path_asym_fs = 0);

// Measurement-noise surrogate: sigma = K / (2 pi f_sc sqrt(2 (C/N0) T)),
// with K pinned so the anchor C/N0 yields the anchor jitter.
double jitter_sigma_ps(double cn0_db_hz, double f_sc = 10e6, double t_int = 1e-3,
                       double anchor_cn0_db_hz = 80.0, double anchor_sigma_ps = 0.8);

struct JitterModel {
    double sigma_ps = 0.0;        // explicit white measurement jitter per site per epoch
    double cn0_db_hz = 0.0;       // > 0 adds jitter_sigma_ps(cn0) in quadrature
    double random_walk_ps = 0.0;  // per-epoch step of a shared instrument drift
};

// Fast mode: synthesizes T_A(k), T_B(k) directly from the delay
// realization, clock offsets, calibration and per-epoch jitter, then
// solves for the clock difference per epoch.
ClockDiffSeries run_exchange_measurement_level(const SiteClock& clock_a,
                                               const SiteClock& clock_b,
                                               const LinkModel& link,
                                               const CalibrationSet& cal,
                                               std::int64_t n_epochs,
                                               double epoch_period_s,
                                               const JitterModel& jitter,
                                               std::uint64_t seed,
                                               fs_t path_asym_fs = 0);

struct WaveformRunOptions {
    std::int64_t n_epochs = 100;
    std::int64_t blackout_start = -1;  // inclusive epoch range with no signal
    std::int64_t blackout_end = -1;    // exclusive
    LoopConfig loops;
    int sinc_taps = 64;
};

struct WaveformRunResult {
    ClockDiffSeries series;
    std::vector<DataFrame> frames_at_a;  // decoded from B's in-band stream
    std::vector<DataFrame> frames_at_b;
    std::size_t crc_failures_a = 0;
    std::size_t crc_failures_b = 0;
};

// Full pipeline per epoch and direction: synthesis, channel, tracking,
// time-interval measurement, in-band frame exchange.
WaveformRunResult run_exchange_waveform_level(const SiteClock& clock_a,
                                              const SiteClock& clock_b,
                                              const LinkModel& link,
                                              const CalibrationSet& cal,
                                              const FlexBocConfig& config,
                                              const WaveformRunOptions& opts,
                                              std::uint64_t seed,
                                              fs_t path_asym_fs = 0);

} // namespace flexboc
