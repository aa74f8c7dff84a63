#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "flexboc/signal.hpp"

namespace flexboc {

struct LoopConfig {
    double pll_bw_hz = 50.0;        // IF carrier Costas loop, one-sided
    double sll_bw_hz = 10.0;        // sub-carrier lock loop
    double dll_bw_hz = 1.0;         // code loop
    double el_spacing_chips = 0.5;  // early-late spacing
    double acq_threshold = 12.0;    // peak excess over the floor, in floor sigmas
    double lock_snr_db = 3.0;       // prompt vs noise-reference power
    int unlock_after = 5;           // consecutive below-threshold epochs
};

struct AcquisitionResult {
    double code_phase = 0.0;     // chips into the remote epoch at buffer start
    double freq_offset_hz = 0.0; // carrier offset from nominal f_if
    double metric = 0.0;         // normalized peak-to-floor
    bool detected = false;
};

struct TrackingState {
    double carrier_phase = 0.0;     // rad, wrapped [0, 2pi)
    double carrier_freq_hz = 0.0;   // absolute
    double subcarrier_phase = 0.0;  // rad, incoming sub-carrier phase at epoch start
    double code_phase = 0.0;        // chips into the remote epoch at epoch start
    double pll_acc = 0.0;           // loop integrators
    double sll_acc = 0.0;
    double dll_acc = 0.0;
    double subcarrier_rate_hz = 0.0;  // NCO rates in effect for the next epoch
    double code_rate_cps = 0.0;
    bool lock_carrier = false;
    bool lock_subcarrier = false;
    bool lock_code = false;
    double cn0_db_hz = 0.0;
    double snr_ema = -1.0;      // smoothed lock metrics; -1 = not seeded yet
    double power_ema = -1.0;    // smoothed prompt power
    double costas_ema = 0.0;
    double sub_err_ema = 0.0;
    int below_count = 0;
    int good_count = 0;

    bool locked() const { return lock_carrier && lock_subcarrier && lock_code; }
};

struct EpochOutput {
    double prompt_i = 0.0, prompt_q = 0.0;
    double prompt_power = 0.0;
    double noise_ref_power = 0.0;
    double code_error_chips = 0.0;
    double subcarrier_error_rad = 0.0;
    double carrier_error_rad = 0.0;
    int symbol = 0;  // sign of prompt I
};

struct TimeInterval {
    std::int64_t epoch_index = 0;
    double coarse_ps = 0.0;
    double fine_ps = 0.0;     // ambiguous mod the 50 ns sub-carrier half-period
    double combined_ps = 0.0;
    bool valid = false;
};

// Exhaustive code-phase x frequency search over the first two code epochs
// of w, with a phase-slope frequency refinement at the winning cell.
AcquisitionResult acquire(const Waveform& w, const FlexBocConfig& config,
                          const PnCode& code, double f_min, double f_max,
                          double f_step, double threshold = 12.0);

TrackingState init_tracking(const AcquisitionResult& acq, const FlexBocConfig& config);

// One code epoch of the three parallel loops: Costas carrier PLL,
// sub-carrier phase loop on the 10 MHz fundamental, carrier-aided
// early-late code DLL. samples must hold exactly one epoch.
EpochOutput track_epoch(TrackingState& state, const double* samples,
                        const FlexBocConfig& config, const PnCode& code,
                        const LoopConfig& loops);

// Double-estimator combination: snap the ambiguous fine value onto the
// 50 ns grid cycle nearest the coarse value; flag instead of committing a
// cycle slip when the residual exceeds the guard band.
struct CombineResult {
    double combined_ps = 0.0;
    bool valid = false;
};
CombineResult combine_coarse_fine(double coarse_ps, double fine_ps,
                                  double half_period_ps, double guard_ps);

TimeInterval measure_time_interval(const TrackingState& state, std::int64_t epoch_index,
                                   const FlexBocConfig& config, fs_t extra_offset_fs = 0);

// Narrowband/wideband power-ratio C/N0 estimate over >= 20 prompt pairs.
std::optional<double> estimate_cn0(const std::vector<double>& prompt_i,
                                   const std::vector<double>& prompt_q,
                                   double integration_s);

// Differential decode of the per-epoch prompt sign stream; frames failing
// CRC are dropped and counted.
std::vector<DataFrame> demodulate_data(const std::vector<double>& prompt_i,
                                       std::size_t* crc_failures = nullptr);

// Single-owner receiver: acquisition, tracking, re-acquisition after
// signal loss, per-epoch measurements and symbol capture.
class Receiver {
public:
    Receiver(const FlexBocConfig& config, const PnCode& code, const LoopConfig& loops);

    // Feed exactly one epoch of samples aligned to the local epoch grid.
    // Returns a measurement when all three loops are locked.
    std::optional<TimeInterval> process_epoch(const std::vector<double>& samples);

    const TrackingState& state() const { return state_; }
    std::int64_t epochs_processed() const { return epoch_count_; }
    const std::vector<double>& prompt_history_i() const { return prompt_i_; }
    std::vector<DataFrame> decoded_frames(std::size_t* crc_failures = nullptr) const;

private:
    void try_acquire();

    FlexBocConfig config_;
    PnCode code_;
    LoopConfig loops_;
    TrackingState state_;
    bool tracking_ = false;
    std::int64_t epoch_count_ = 0;
    std::int64_t settle_left_ = 0;
    double err_sum_carrier_ = 0.0, err_sum_sub_ = 0.0, err_sum_code_ = 0.0;
    int err_count_ = 0;
    std::vector<double> acq_buf_;
    std::vector<double> prompt_i_, prompt_q_;
};

} // namespace flexboc
