#include "flexboc/receiver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>

namespace flexboc {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double wrap_2pi(double phase) {
    phase = std::fmod(phase, kTwoPi);
    return phase < 0 ? phase + kTwoPi : phase;
}

// second-order loop: proportional + integrator, damping 0.7071
struct LoopGains {
    double wn;
    explicit LoopGains(double bn) : wn(bn / 0.53) {}
    double k_int(double t) const { return wn * wn * t; }
    double k_prop() const { return std::sqrt(2.0) * wn; }
};

} // namespace

AcquisitionResult acquire(const Waveform& w, const FlexBocConfig& config,
                          const PnCode& code, double f_min, double f_max,
                          double f_step, double threshold) {
    config.validate();
    const std::int64_t spe = config.samples_per_epoch();
    if (static_cast<std::int64_t>(w.samples.size()) < 2 * spe)
        throw std::invalid_argument("acquisition needs at least two code epochs");
    if (f_step <= 0 || f_max < f_min)
        throw std::invalid_argument("bad frequency search range");

    const std::vector<double> replica = flexboc_baseband(config, code, config.epoch_period());
    const std::size_t n = static_cast<std::size_t>(spe);
    const int n_ep = static_cast<int>(
        std::min<std::int64_t>(static_cast<std::int64_t>(w.samples.size()) / spe, 24));

    fftw_complex* buf = fftw_alloc_complex(n);
    fftw_complex* spec = fftw_alloc_complex(n);
    fftw_complex* rep_spec = fftw_alloc_complex(n);
    fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, spec, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_1d(static_cast<int>(n), spec, buf, FFTW_BACKWARD, FFTW_ESTIMATE);

    for (std::size_t i = 0; i < n; ++i) {
        buf[i][0] = replica[i];
        buf[i][1] = 0.0;
    }
    fftw_execute_dft(fwd, buf, rep_spec);

    const double fs = config.sample_rate;
    double best_metric = 0.0, best_freq = 0.0, best_power = 0.0;
    std::size_t best_lag = 0;
    double best_m_prev = 0.0, best_m_peak = 0.0, best_m_next = 0.0;

    // non-coherently accumulated power across epochs; a data flip inside an
    // epoch costs at most 3 dB here while the cell count keeps the floor tight
    std::vector<double> pow_acc(n);
    for (double f = f_min; f <= f_max + 1e-9; f += f_step) {
        const double fc = config.f_if + f;
        std::fill(pow_acc.begin(), pow_acc.end(), 0.0);
        for (int ep = 0; ep < n_ep; ++ep) {
            const std::size_t off = static_cast<std::size_t>(ep) * n;
            const std::complex<double> step = std::polar(1.0, -kTwoPi * fc / fs);
            std::complex<double> ph = std::polar(1.0, -kTwoPi * fc / fs * static_cast<double>(off));
            for (std::size_t i = 0; i < n; ++i) {
                buf[i][0] = w.samples[off + i] * ph.real();
                buf[i][1] = w.samples[off + i] * ph.imag();
                ph *= step;
                if ((i & 1023u) == 0u) ph /= std::abs(ph);
            }
            fftw_execute_dft(fwd, buf, spec);
            for (std::size_t k = 0; k < n; ++k) {
                const std::complex<double> x(spec[k][0], spec[k][1]);
                const std::complex<double> r(rep_spec[k][0], -rep_spec[k][1]);
                const std::complex<double> p = x * r;
                spec[k][0] = p.real();
                spec[k][1] = p.imag();
            }
            fftw_execute_dft(inv, spec, buf);
            for (std::size_t i = 0; i < n; ++i)
                pow_acc[i] += buf[i][0] * buf[i][0] + buf[i][1] * buf[i][1];
        }
        const std::size_t peak = static_cast<std::size_t>(
            std::max_element(pow_acc.begin(), pow_acc.end()) - pow_acc.begin());
        if (pow_acc[peak] > best_power) {
            // winner by raw peak power; the detection metric is the peak
            // excess in floor standard deviations, which stays
            // threshold-stable as the non-coherent epoch count varies
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += pow_acc[i];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = pow_acc[i] - mean;
                var += d * d;
            }
            const double sd = std::sqrt(var / static_cast<double>(n));
            best_power = pow_acc[peak];
            best_metric = sd > 0 ? (pow_acc[peak] - mean) / sd : 0.0;
            best_freq = f;
            best_lag = peak;
            best_m_prev = std::sqrt(pow_acc[(peak + n - 1) % n]);
            best_m_peak = std::sqrt(pow_acc[peak]);
            best_m_next = std::sqrt(pow_acc[(peak + 1) % n]);
        }
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(buf);
    fftw_free(spec);
    fftw_free(rep_spec);

    AcquisitionResult res;
    res.metric = best_metric;
    res.detected = best_metric > threshold;
    // parabolic sub-sample refinement on the magnitude-domain peak
    double lag = static_cast<double>(best_lag);
    const double den = best_m_prev - 2.0 * best_m_peak + best_m_next;
    if (den < 0.0) {
        const double shift = 0.5 * (best_m_prev - best_m_next) / den;
        if (std::abs(shift) < 1.0) lag += shift;
    }
    // lag of the correlation peak is the remote code's delay against the
    // local epoch grid; reported directly in chips
    const double lag_chips = lag * config.code_len / static_cast<double>(spe);
    res.code_phase = std::fmod(lag_chips + config.code_len, config.code_len);
    // fine frequency from averaged epoch-to-epoch phase advances at the
    // winning cell; data bits make each advance ambiguous by pi, fold into
    // +-1/(4T)
    std::vector<std::complex<double>> peaks(static_cast<std::size_t>(n_ep));
    const double fc = config.f_if + best_freq;
    for (int ep = 0; ep < n_ep; ++ep) {
        const std::size_t off = static_cast<std::size_t>(ep) * n;
        const std::complex<double> step = std::polar(1.0, -kTwoPi * fc / fs);
        std::complex<double> ph = std::polar(1.0, -kTwoPi * fc / fs * static_cast<double>(off));
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += w.samples[off + i] * ph * replica[(i + n - best_lag) % n];
            ph *= step;
            if ((i & 1023u) == 0u) ph /= std::abs(ph);
        }
        peaks[static_cast<std::size_t>(ep)] = acc;
    }
    double dphi_sum = 0.0;
    for (int ep = 1; ep < n_ep; ++ep) {
        double dphi = std::arg(peaks[static_cast<std::size_t>(ep)] *
                               std::conj(peaks[static_cast<std::size_t>(ep - 1)]));
        while (dphi > M_PI / 2) dphi -= M_PI;
        while (dphi < -M_PI / 2) dphi += M_PI;
        dphi_sum += dphi;
    }
    const double dphi = n_ep > 1 ? dphi_sum / static_cast<double>(n_ep - 1) : 0.0;
    res.freq_offset_hz = best_freq + dphi / (kTwoPi * config.epoch_period());
    return res;
}

TrackingState init_tracking(const AcquisitionResult& acq, const FlexBocConfig& config) {
    TrackingState st;
    const double l = config.code_len;
    // acquisition reports the remote delay; tracking state keeps the
    // position inside the remote epoch at local epoch start
    st.code_phase = std::fmod(l - acq.code_phase, l);
    st.carrier_freq_hz = config.f_if + acq.freq_offset_hz;
    st.carrier_phase = 0.0;
    st.pll_acc = kTwoPi * acq.freq_offset_hz;
    const double tau = std::fmod(acq.code_phase, l) / config.chip_rate;
    st.subcarrier_phase = wrap_2pi(-kTwoPi * config.f_sc * tau);
    const double aid = st.carrier_freq_hz / config.f_if;
    st.subcarrier_rate_hz = config.f_sc * aid;
    st.code_rate_cps = config.chip_rate * aid;
    return st;
}

EpochOutput track_epoch(TrackingState& state, const double* samples,
                        const FlexBocConfig& config, const PnCode& code,
                        const LoopConfig& loops) {
    const std::int64_t spe = config.samples_per_epoch();
    const double fs = config.sample_rate;
    const double t_int = config.epoch_period();
    const int len = config.code_len;
    const double half_sp = loops.el_spacing_chips / 2.0;

    const double d_theta = kTwoPi * state.carrier_freq_hz / fs;
    const double d_psi = kTwoPi * state.subcarrier_rate_hz / fs;
    const double d_chip = state.code_rate_cps / fs;

    std::complex<double> carrier = std::polar(1.0, state.carrier_phase);
    const std::complex<double> carrier_step = std::polar(1.0, d_theta);
    std::complex<double> sub = std::polar(1.0, state.subcarrier_phase);
    const std::complex<double> sub_step = std::polar(1.0, d_psi);
    double chip_pos = state.code_phase;

    double ip = 0, qp = 0, ie = 0, qe = 0, il = 0, ql = 0, in_ = 0, qn = 0;
    double su_re = 0, su_im = 0, sv_re = 0, sv_im = 0;
    const double sub_guard = config.chip_rate / (2.0 * config.f_sc);  // chips

    const int* chips = code.chips.data();
    for (std::int64_t n = 0; n < spe; ++n) {
        const double x = samples[n];
        const double xc = x * carrier.real();
        const double xs = -x * carrier.imag();

        const int i_p0 = static_cast<int>(chip_pos);
        int i_p = i_p0;
        int i_e = static_cast<int>(chip_pos + half_sp);
        int i_l = static_cast<int>(chip_pos - half_sp + len);
        int i_n = static_cast<int>(chip_pos + 0.5 * len);
        if (i_p >= len) i_p -= len;
        if (i_e >= len) i_e -= len;
        while (i_l >= len) i_l -= len;
        while (i_n >= len) i_n -= len;

        const double sq = sub.imag() >= 0.0 ? 1.0 : -1.0;
        const double cp = chips[i_p];
        const double bp = cp * sq;
        ip += bp * xc;
        qp += bp * xs;
        ie += chips[i_e] * sq * xc;
        qe += chips[i_e] * sq * xs;
        il += chips[i_l] * sq * xc;
        ql += chips[i_l] * sq * xs;
        in_ += chips[i_n] * sq * xc;
        qn += chips[i_n] * sq * xs;
        // sub-carrier fundamental correlators. One full sub-carrier period
        // is blanked around each chip edge: code-phase error there gates
        // transition samples with the wrong sign and pulls the phase null,
        // and a whole-period cut keeps the correlation window unbiased.
        const double d_edge = chip_pos - static_cast<double>(i_p0);
        if (d_edge >= sub_guard && d_edge <= 1.0 - sub_guard) {
            su_re += cp * sub.real() * xc;
            su_im += cp * sub.real() * xs;
            sv_re += cp * sub.imag() * xc;
            sv_im += cp * sub.imag() * xs;
        }

        carrier *= carrier_step;
        sub *= sub_step;
        chip_pos += d_chip;
        if (chip_pos >= len) chip_pos -= len;
        if ((n & 1023) == 0) {
            carrier /= std::abs(carrier);
            sub /= std::abs(sub);
        }
    }

    EpochOutput out;
    out.prompt_i = ip;
    out.prompt_q = qp;
    out.prompt_power = ip * ip + qp * qp;
    out.noise_ref_power = in_ * in_ + qn * qn;
    out.symbol = ip >= 0 ? 1 : -1;

    // discriminators
    out.carrier_error_rad = (ip == 0.0 && qp == 0.0) ? 0.0 : std::atan2(qp, ip);
    if (out.carrier_error_rad > M_PI / 2) out.carrier_error_rad -= M_PI;
    if (out.carrier_error_rad < -M_PI / 2) out.carrier_error_rad += M_PI;

    const double e_mag = std::hypot(ie, qe);
    const double l_mag = std::hypot(il, ql);
    const double denom = e_mag + l_mag;
    const double eml = denom > 0 ? (e_mag - l_mag) / denom : 0.0;
    out.code_error_chips = eml * (2.0 - loops.el_spacing_chips) / 2.0;

    const double r_u = su_re * ip + su_im * qp;
    const double r_v = sv_re * ip + sv_im * qp;
    double delta = (r_u == 0.0 && r_v == 0.0) ? 0.0 : std::atan2(r_u, r_v);
    if (delta > M_PI / 2) delta -= M_PI;
    if (delta < -M_PI / 2) delta += M_PI;
    out.subcarrier_error_rad = delta;

    // propagate NCO phases across the epoch at the rates just used
    state.carrier_phase = wrap_2pi(state.carrier_phase + d_theta * static_cast<double>(spe));
    state.subcarrier_phase = wrap_2pi(state.subcarrier_phase + d_psi * static_cast<double>(spe));
    state.code_phase = std::fmod(chip_pos, static_cast<double>(len));
    if (state.code_phase < 0) state.code_phase += len;

    // loop filter updates set the rates for the next epoch
    const LoopGains gp(loops.pll_bw_hz), gs(loops.sll_bw_hz), gd(loops.dll_bw_hz);
    state.pll_acc += gp.k_int(t_int) * out.carrier_error_rad;
    const double carr_corr = state.pll_acc + gp.k_prop() * out.carrier_error_rad;
    state.carrier_freq_hz = config.f_if + carr_corr / kTwoPi;
    const double aid = state.carrier_freq_hz / config.f_if;

    state.sll_acc += gs.k_int(t_int) * out.subcarrier_error_rad;
    const double sc_corr = state.sll_acc + gs.k_prop() * out.subcarrier_error_rad;
    state.subcarrier_rate_hz = config.f_sc * aid + sc_corr / kTwoPi;

    state.dll_acc += gd.k_int(t_int) * out.code_error_chips;
    const double code_corr = state.dll_acc + gd.k_prop() * out.code_error_chips;
    state.code_rate_cps = config.chip_rate * aid + code_corr;

    // lock bookkeeping on ~20-epoch smoothed metrics; the raw per-epoch
    // ratios are exponential-tailed and flap near threshold at low C/N0
    const double snr = out.prompt_power / std::max(out.noise_ref_power, 1e-300);
    const double costas = out.prompt_power > 0
                              ? (ip * ip - qp * qp) / out.prompt_power
                              : 0.0;
    const double alpha = 0.05;
    if (state.snr_ema < 0.0) {
        state.snr_ema = snr;
        state.power_ema = out.prompt_power;
        state.costas_ema = costas;
        state.sub_err_ema = std::abs(delta);
    } else {
        state.snr_ema += alpha * (snr - state.snr_ema);
        state.power_ema += alpha * (out.prompt_power - state.power_ema);
        state.costas_ema += alpha * (costas - state.costas_ema);
        state.sub_err_ema += alpha * (std::abs(delta) - state.sub_err_ema);
    }
    const double snr_db = 10.0 * std::log10(std::max(state.snr_ema, 1e-300));
    const bool healthy = snr_db > loops.lock_snr_db;
    if (healthy) {
        state.below_count = 0;
        if (state.good_count < 1000) ++state.good_count;
    } else {
        ++state.below_count;
        state.good_count = 0;
    }
    if (state.good_count >= 3) {
        state.lock_code = true;
        state.lock_carrier = state.costas_ema > 0.2;
        state.lock_subcarrier = state.sub_err_ema < 0.5;
    }
    if (state.below_count >= loops.unlock_after) {
        state.lock_code = state.lock_carrier = state.lock_subcarrier = false;
    }
    return out;
}

CombineResult combine_coarse_fine(double coarse_ps, double fine_ps,
                                  double half_period_ps, double guard_ps) {
    CombineResult res;
    const double n_cycles = std::round((coarse_ps - fine_ps) / half_period_ps);
    res.combined_ps = fine_ps + n_cycles * half_period_ps;
    res.valid = std::abs(coarse_ps - res.combined_ps) <= guard_ps;
    return res;
}

TimeInterval measure_time_interval(const TrackingState& state, std::int64_t epoch_index,
                                   const FlexBocConfig& config, fs_t extra_offset_fs) {
    TimeInterval ti;
    ti.epoch_index = epoch_index;
    if (!state.locked()) {
        ti.valid = false;
        return ti;
    }
    const double l = config.code_len;
    const double tau_code_s = std::fmod(l - state.code_phase, l) / config.chip_rate;
    const double offset_ps = fs_to_ps(extra_offset_fs);
    ti.coarse_ps = tau_code_s * 1e12 + offset_ps;

    double psi = std::fmod(state.subcarrier_phase, M_PI);
    if (psi < 0) psi += M_PI;
    const double tau_fine_s = std::fmod(M_PI - psi, M_PI) / (kTwoPi * config.f_sc);
    const double half_ps = 0.5e12 / config.f_sc;  // 50 ns at defaults
    double fine_ps = std::fmod(tau_fine_s * 1e12 + offset_ps, half_ps);
    if (fine_ps < 0) fine_ps += half_ps;
    ti.fine_ps = fine_ps;

    const auto comb = combine_coarse_fine(ti.coarse_ps, ti.fine_ps, half_ps, half_ps / 4.0);
    ti.combined_ps = comb.combined_ps;
    ti.valid = comb.valid;
    return ti;
}

std::optional<double> estimate_cn0(const std::vector<double>& prompt_i,
                                   const std::vector<double>& prompt_q,
                                   double integration_s) {
    constexpr std::size_t M = 20;
    if (prompt_i.size() != prompt_q.size() || prompt_i.size() < M) return std::nullopt;
    const std::size_t n_blocks = prompt_i.size() / M;
    double mu_sum = 0.0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        double ni = 0, nq = 0, wbp = 0;
        for (std::size_t k = 0; k < M; ++k) {
            const double i = prompt_i[b * M + k];
            const double q = prompt_q[b * M + k];
            const double s = i >= 0 ? 1.0 : -1.0;  // strip data sign
            ni += s * i;
            nq += s * q;
            wbp += i * i + q * q;
        }
        if (wbp <= 0) return std::nullopt;
        mu_sum += (ni * ni + nq * nq) / (M * wbp);
    }
    const double mu = mu_sum / static_cast<double>(n_blocks) * M;
    if (mu >= M - 1e-9) return 99.0;
    const double snr = std::max((mu - 1.0) / (M - mu), 1e-12);
    return 10.0 * std::log10(snr / integration_s);
}

std::vector<DataFrame> demodulate_data(const std::vector<double>& prompt_i,
                                       std::size_t* crc_failures) {
    std::vector<int> symbols(prompt_i.size());
    for (std::size_t k = 0; k < prompt_i.size(); ++k)
        symbols[k] = prompt_i[k] >= 0 ? 1 : -1;
    return symbols_to_frames(symbols, crc_failures);
}

Receiver::Receiver(const FlexBocConfig& config, const PnCode& code, const LoopConfig& loops)
    : config_(config), code_(code), loops_(loops) {
    config_.validate();
}

void Receiver::try_acquire() {
    Waveform w;
    w.sample_rate = config_.sample_rate;
    w.samples = acq_buf_;
    AcquisitionResult acq =
        acquire(w, config_, code_, -300.0, 300.0, 100.0, loops_.acq_threshold);
    if (acq.detected) {
        state_ = init_tracking(acq, config_);
        tracking_ = true;
        settle_left_ = 40;
        err_sum_carrier_ = err_sum_sub_ = err_sum_code_ = 0.0;
        err_count_ = 0;
    }
}

std::optional<TimeInterval> Receiver::process_epoch(const std::vector<double>& samples) {
    const std::int64_t spe = config_.samples_per_epoch();
    if (static_cast<std::int64_t>(samples.size()) != spe)
        throw std::invalid_argument("process_epoch expects exactly one code epoch");
    const std::int64_t idx = epoch_count_++;

    if (!tracking_) {
        acq_buf_.insert(acq_buf_.end(), samples.begin(), samples.end());
        if (static_cast<std::int64_t>(acq_buf_.size()) >= 24 * spe) {
            try_acquire();
            acq_buf_.clear();
        }
        prompt_i_.push_back(0.0);
        prompt_q_.push_back(0.0);
        return std::nullopt;
    }

    EpochOutput out;
    if (settle_left_ > 0) {
        // pull-in: loop filters frozen, errors removed by direct phase
        // stepping; the mean residual correction over the last settle
        // epochs measures the rate error and preloads the integrators at
        // handoff so the narrow loops start converged
        LoopConfig frozen = loops_;
        frozen.pll_bw_hz = frozen.sll_bw_hz = frozen.dll_bw_hz = 0.0;
        out = track_epoch(state_, samples.data(), config_, code_, frozen);
        const double g = 0.5;
        state_.carrier_phase = wrap_2pi(state_.carrier_phase + g * out.carrier_error_rad);
        state_.subcarrier_phase =
            wrap_2pi(state_.subcarrier_phase + g * out.subcarrier_error_rad);
        // code phase is not stepped: the interpolated acquisition estimate
        // is already well inside the coarse/fine guard band and the EML
        // noise would only dilute it; carrier aiding holds the rate
        if (settle_left_ <= 10) {
            err_sum_carrier_ += out.carrier_error_rad;
            ++err_count_;
        }
        if (settle_left_ == 1 && err_count_ > 0) {
            // residual carrier frequency, bounded against noisy estimates
            double df = g * err_sum_carrier_ / (err_count_ * config_.epoch_period());
            df = std::clamp(df, -kTwoPi * 2.0, kTwoPi * 2.0);
            state_.pll_acc += df;
            state_.carrier_freq_hz = config_.f_if + state_.pll_acc / kTwoPi;
            const double aid = state_.carrier_freq_hz / config_.f_if;
            state_.subcarrier_rate_hz = config_.f_sc * aid + state_.sll_acc / kTwoPi;
            state_.code_rate_cps = config_.chip_rate * aid + state_.dll_acc;
            // snap the code phase onto the sub-carrier grid: the settled
            // sub-carrier phase carries the sub-cycle truth, so removing
            // the fractional coarse/fine disagreement here starts tracking
            // with the combine guard centred instead of a coin toss
            const double len = static_cast<double>(config_.code_len);
            const double tau_code =
                std::fmod(len - state_.code_phase, len) / config_.chip_rate;
            double psi = std::fmod(state_.subcarrier_phase, M_PI);
            if (psi < 0) psi += M_PI;
            const double tau_fine = std::fmod(M_PI - psi, M_PI) / (kTwoPi * config_.f_sc);
            const double half_s = 0.5 / config_.f_sc;
            const double r = std::remainder(tau_code - tau_fine, half_s);
            state_.code_phase =
                std::fmod(state_.code_phase + r * config_.chip_rate + len, len);
        }
    } else {
        out = track_epoch(state_, samples.data(), config_, code_, loops_);
    }
    prompt_i_.push_back(out.prompt_i);
    prompt_q_.push_back(out.prompt_q);

    if (state_.below_count >= loops_.unlock_after) {
        tracking_ = false;
        acq_buf_.clear();
        state_ = TrackingState{};
        return std::nullopt;
    }
    if (settle_left_ > 0) {
        --settle_left_;
        return std::nullopt;
    }
    if (!state_.locked()) return std::nullopt;
    // the smoothed lock flags lag an abrupt signal loss by several epochs;
    // a collapsed instantaneous prompt power vetoes the measurement now
    if (state_.power_ema > 0.0 && out.prompt_power < 0.25 * state_.power_ema)
        return std::nullopt;

    if (prompt_i_.size() >= 20) {
        std::vector<double> wi(prompt_i_.end() - 20, prompt_i_.end());
        std::vector<double> wq(prompt_q_.end() - 20, prompt_q_.end());
        if (auto cn0 = estimate_cn0(wi, wq, config_.epoch_period()))
            state_.cn0_db_hz = *cn0;
    }

    TimeInterval ti = measure_time_interval(state_, idx, config_);
    return ti;
}

std::vector<DataFrame> Receiver::decoded_frames(std::size_t* crc_failures) const {
    return demodulate_data(prompt_i_, crc_failures);
}

} // namespace flexboc
