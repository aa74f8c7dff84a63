#include "flexboc/twoway.hpp"

#include <cmath>
#include <deque>
#include <map>

#include "flexboc/rng.hpp"

namespace flexboc {

std::vector<double> ClockDiffSeries::delta_t_sec() const {
    std::vector<double> out(delta_t_fs.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = fs_to_sec(delta_t_fs[i]);
    return out;
}

std::optional<fs_t> compute_clock_diff(const TwoWayEpochRecord& rec,
                                       const CalibrationSet& cal,
                                       fs_t path_asym_fs) {
    if (!rec.usable()) return std::nullopt;
    const fs_t num = (rec.t_a_fs - rec.t_b_fs) - path_asym_fs - cal.differential_fs();
    return fs_half(num);
}

double jitter_sigma_ps(double cn0_db_hz, double f_sc, double t_int,
                       double anchor_cn0_db_hz, double anchor_sigma_ps) {
    if (cn0_db_hz < 20.0 || cn0_db_hz > 80.0)
        throw std::invalid_argument("cn0 must be within [20, 80] dB-Hz");
    const double anchor_lin = std::pow(10.0, anchor_cn0_db_hz / 10.0);
    const double k = anchor_sigma_ps * 1e-12 * 2.0 * M_PI * f_sc *
                     std::sqrt(2.0 * anchor_lin * t_int);
    const double lin = std::pow(10.0, cn0_db_hz / 10.0);
    return k / (2.0 * M_PI * f_sc * std::sqrt(2.0 * lin * t_int)) * 1e12;
}

ClockDiffSeries run_exchange_measurement_level(const SiteClock& clock_a,
                                               const SiteClock& clock_b,
                                               const LinkModel& link,
                                               const CalibrationSet& cal,
                                               std::int64_t n_epochs,
                                               double epoch_period_s,
                                               const JitterModel& jitter,
                                               std::uint64_t seed,
                                               fs_t path_asym_fs) {
    if (n_epochs < 1) throw std::invalid_argument("n_epochs must be >= 1");
    const DelayRealization delays =
        sample_delay_series(link, n_epochs, epoch_period_s, Rng::derive(seed, 0));

    double meas_sigma_ps = jitter.sigma_ps;
    if (jitter.cn0_db_hz > 0.0) {
        const double s = jitter_sigma_ps(jitter.cn0_db_hz);
        meas_sigma_ps = std::sqrt(meas_sigma_ps * meas_sigma_ps + s * s);
    }
    const bool common_clock = clock_a.reference && clock_b.reference;

    Rng rng(Rng::derive(seed, 1));
    ClockDiffSeries series;
    series.epoch_period_s = epoch_period_s;
    series.seed = seed;
    series.epoch_index.reserve(static_cast<std::size_t>(n_epochs));
    series.delta_t_fs.reserve(static_cast<std::size_t>(n_epochs));
    series.t_a_fs.reserve(static_cast<std::size_t>(n_epochs));
    series.t_b_fs.reserve(static_cast<std::size_t>(n_epochs));

    const fs_t cal_tx_a = fs_from_ps(cal.tau_tx_a_ps), cal_rx_a = fs_from_ps(cal.tau_rx_a_ps);
    const fs_t cal_tx_b = fs_from_ps(cal.tau_tx_b_ps), cal_rx_b = fs_from_ps(cal.tau_rx_b_ps);
    const bool noisy = meas_sigma_ps > 0.0 || clock_a.white_pm_sigma_ps > 0.0 ||
                       clock_b.white_pm_sigma_ps > 0.0 || jitter.random_walk_ps > 0.0;
    double walk_ps = 0.0;

    for (std::int64_t k = 0; k < n_epochs; ++k) {
        const double t = static_cast<double>(k) * epoch_period_s;
        const std::size_t ki = static_cast<std::size_t>(k);
        const fs_t dt_true = clock_a.offset_fs - clock_b.offset_fs +
                             fs_from_sec((clock_a.drift - clock_b.drift) * t);

        fs_t t_a = fs_from_sec(delays.tau_ba_s[ki]) + cal_tx_b + cal_rx_a + dt_true;
        fs_t t_b = fs_from_sec(delays.tau_ab_s[ki]) + cal_tx_a + cal_rx_b - dt_true;

        if (noisy) {
            if (meas_sigma_ps > 0.0) {
                t_a += fs_from_ps(meas_sigma_ps * rng.next_gaussian());
                t_b += fs_from_ps(meas_sigma_ps * rng.next_gaussian());
            }
            if (common_clock) {
                const double sigma =
                    std::max(clock_a.white_pm_sigma_ps, clock_b.white_pm_sigma_ps);
                if (sigma > 0.0) {
                    const fs_t c = fs_from_ps(sigma * rng.next_gaussian());
                    t_a += c;
                    t_b += c;  // common clock noise cancels in the difference
                }
            } else {
                if (clock_a.white_pm_sigma_ps > 0.0)
                    t_a += fs_from_ps(clock_a.white_pm_sigma_ps * rng.next_gaussian());
                if (clock_b.white_pm_sigma_ps > 0.0)
                    t_b += fs_from_ps(clock_b.white_pm_sigma_ps * rng.next_gaussian());
            }
            if (jitter.random_walk_ps > 0.0) {
                walk_ps += jitter.random_walk_ps * rng.next_gaussian();
                t_a += fs_from_ps(walk_ps);
                t_b -= fs_from_ps(walk_ps);
            }
        }

        TwoWayEpochRecord rec{k, t_a, t_b, true, true};
        if (auto dt = compute_clock_diff(rec, cal, path_asym_fs)) {
            series.epoch_index.push_back(k);
            series.delta_t_fs.push_back(*dt);
            series.t_a_fs.push_back(t_a);
            series.t_b_fs.push_back(t_b);
        }
    }
    return series;
}

namespace {

// Per-site transmit symbol scheduler: one differential symbol per epoch,
// frames of the latest measurement injected on a fixed 96-epoch grid so
// the receiver's frame groups stay aligned.
class TxStream {
public:
    explicit TxStream(SiteId site) : site_(site) {}

    void offer_measurement(std::int64_t epoch, double combined_ps) {
        latest_epoch_ = epoch;
        latest_ps_ = combined_ps;
        have_measurement_ = true;
    }

    int symbol_for_epoch(std::int64_t k) {
        if (k == 0) return 1;  // differential reference
        if (pending_.empty()) {
            if (have_measurement_) {
                DataFrame f;
                f.site_id = site_;
                f.epoch_index = static_cast<std::uint32_t>(latest_epoch_ & 0x0FFFFFFF);
                f.payload_ps = static_cast<std::int64_t>(std::llround(latest_ps_));
                for (auto b : encode_data_frame(f)) pending_.push_back(b);
            } else {
                pending_.assign(kFrameBits, 0);  // idle group
            }
        }
        const std::uint8_t bit = pending_.front();
        pending_.pop_front();
        diff_state_ ^= bit;
        return diff_state_ ? -1 : 1;
    }

private:
    SiteId site_;
    std::deque<std::uint8_t> pending_;
    std::uint8_t diff_state_ = 0;
    bool have_measurement_ = false;
    std::int64_t latest_epoch_ = 0;
    double latest_ps_ = 0.0;
};

// One direction of the link: delayed/attenuated epoch buffers plus the
// receiving modem. The two-epoch synthesis window keeps the interpolator
// transient out of the epoch being measured.
class DirectionSim {
public:
    DirectionSim(const FlexBocConfig& config, const PnCode& code, const LoopConfig& loops,
                 double attenuation_db, double noise_psd, int taps, std::uint64_t noise_seed)
        : config_(config), loops_(loops), attenuation_db_(attenuation_db),
          noise_psd_(noise_psd), taps_(taps), noise_seed_(noise_seed),
          receiver_(config, code, loops) {
        base_ = synth_flexboc(config, code, {}, 0, config.epoch_period()).samples;
    }

    std::optional<TimeInterval> step(std::int64_t epoch, int sym_prev, int sym_cur,
                                     int sym_next, double delay_s, bool blackout) {
        const std::size_t n = base_.size();
        const fs_t key = fs_from_sec(delay_s);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            if (cache_.size() >= 4) cache_.clear();
            // by linearity, the received epoch is a symbol-weighted sum of
            // the delayed responses of the previous, current and next
            // transmit epochs
            const double delay_samples = delay_s * config_.sample_rate;
            Cached c;
            std::vector<double> three(3 * n, 0.0);
            for (int part = 0; part < 3; ++part) {
                std::fill(three.begin(), three.end(), 0.0);
                std::copy(base_.begin(), base_.end(),
                          three.begin() + static_cast<std::ptrdiff_t>(part) * static_cast<std::ptrdiff_t>(n));
                auto d = fractional_delay(three, delay_samples, taps_);
                auto* dst = part == 0 ? &c.d_prev : (part == 1 ? &c.d_cur : &c.d_next);
                dst->assign(d.begin() + static_cast<std::ptrdiff_t>(n),
                            d.begin() + 2 * static_cast<std::ptrdiff_t>(n));
            }
            it = cache_.emplace(key, std::move(c)).first;
        }
        const Cached& c = it->second;

        const double gain = std::pow(10.0, -attenuation_db_ / 20.0);
        std::vector<double> buf(n);
        double p = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = gain * (sym_prev * c.d_prev[i] + sym_cur * c.d_cur[i] +
                                     sym_next * c.d_next[i]);
            buf[i] = blackout ? 0.0 : s;
            p += s * s;
        }
        if (noise_psd_ > 0.0) {
            p /= static_cast<double>(n);
            const double sigma = std::sqrt(noise_psd_ * p * config_.sample_rate / 2.0);
            Rng rng(Rng::derive(noise_seed_, static_cast<std::uint64_t>(epoch)));
            for (auto& s : buf) s += sigma * rng.next_gaussian();
        }
        return receiver_.process_epoch(buf);
    }

    Receiver& receiver() { return receiver_; }

private:
    struct Cached {
        std::vector<double> d_prev, d_cur, d_next;
    };
    FlexBocConfig config_;
    LoopConfig loops_;
    double attenuation_db_;
    double noise_psd_;
    int taps_;
    std::uint64_t noise_seed_;
    std::vector<double> base_;
    std::map<fs_t, Cached> cache_;
    Receiver receiver_;
};

} // namespace

WaveformRunResult run_exchange_waveform_level(const SiteClock& clock_a,
                                              const SiteClock& clock_b,
                                              const LinkModel& link,
                                              const CalibrationSet& cal,
                                              const FlexBocConfig& config,
                                              const WaveformRunOptions& opts,
                                              std::uint64_t seed,
                                              fs_t path_asym_fs) {
    config.validate();
    link.validate();
    if (opts.n_epochs < 3) throw std::invalid_argument("waveform run needs >= 3 epochs");

    const double ep = config.epoch_period();
    const DelayRealization delays =
        sample_delay_series(link, opts.n_epochs, ep, Rng::derive(seed, 0));

    const PnCode code_a = gen_pn_code(config, 1);
    const PnCode code_b = gen_pn_code(config, 2);

    // arrival delay in each receiver's local timescale
    const double off_ab = fs_to_sec(clock_b.offset_fs - clock_a.offset_fs) +
                          (cal.tau_tx_a_ps + cal.tau_rx_b_ps) * 1e-12;
    const double off_ba = fs_to_sec(clock_a.offset_fs - clock_b.offset_fs) +
                          (cal.tau_tx_b_ps + cal.tau_rx_a_ps) * 1e-12;

    DirectionSim dir_ab(config, code_a, opts.loops, link.attenuation_db, link.noise_psd,
                        opts.sinc_taps, Rng::derive(seed, 10));
    DirectionSim dir_ba(config, code_b, opts.loops, link.attenuation_db, link.noise_psd,
                        opts.sinc_taps, Rng::derive(seed, 11));
    TxStream tx_a(SiteId::A), tx_b(SiteId::B);

    WaveformRunResult result;
    result.series.epoch_period_s = ep;
    result.series.seed = seed;

    int sym_a_prev = 1, sym_a_cur = tx_a.symbol_for_epoch(0);
    int sym_a_next = tx_a.symbol_for_epoch(1);
    int sym_b_prev = 1, sym_b_cur = tx_b.symbol_for_epoch(0);
    int sym_b_next = tx_b.symbol_for_epoch(1);
    for (std::int64_t k = 0; k < opts.n_epochs; ++k) {
        const std::size_t ki = static_cast<std::size_t>(k);
        const bool blackout = k >= opts.blackout_start && k < opts.blackout_end;

        auto ti_b = dir_ab.step(k, sym_a_prev, sym_a_cur, sym_a_next,
                                delays.tau_ab_s[ki] + off_ab, blackout);
        auto ti_a = dir_ba.step(k, sym_b_prev, sym_b_cur, sym_b_next,
                                delays.tau_ba_s[ki] + off_ba, blackout);

        if (ti_a && ti_a->valid) tx_a.offer_measurement(k, ti_a->combined_ps);
        if (ti_b && ti_b->valid) tx_b.offer_measurement(k, ti_b->combined_ps);
        sym_a_prev = sym_a_cur; sym_a_cur = sym_a_next;
        sym_a_next = tx_a.symbol_for_epoch(k + 2);
        sym_b_prev = sym_b_cur; sym_b_cur = sym_b_next;
        sym_b_next = tx_b.symbol_for_epoch(k + 2);

        // paired by epoch index; both directions must be valid
        if (ti_a && ti_b && ti_a->valid && ti_b->valid) {
            TwoWayEpochRecord rec{k, fs_from_ps(ti_a->combined_ps),
                                  fs_from_ps(ti_b->combined_ps), true, true};
            if (auto dt = compute_clock_diff(rec, cal, path_asym_fs)) {
                result.series.epoch_index.push_back(k);
                result.series.delta_t_fs.push_back(*dt);
                result.series.t_a_fs.push_back(rec.t_a_fs);
                result.series.t_b_fs.push_back(rec.t_b_fs);
                result.series.cn0_a_db_hz.push_back(dir_ba.receiver().state().cn0_db_hz);
                result.series.cn0_b_db_hz.push_back(dir_ab.receiver().state().cn0_db_hz);
            }
        }
    }

    result.frames_at_b = dir_ab.receiver().decoded_frames(&result.crc_failures_b);
    result.frames_at_a = dir_ba.receiver().decoded_frames(&result.crc_failures_a);
    return result;
}

} // namespace flexboc
