#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "flexboc/signal.hpp"

namespace flexboc {

// Piecewise-linear delay-vs-time profile in picoseconds. Empty profile
// evaluates to zero; outside the knot range the end values hold.
struct DriftProfile {
    std::vector<double> time_s;
    std::vector<double> delay_ps;

    double at(double t_s) const;
    void validate() const;
};

struct LinkModel {
    double base_delay_s = 100.069e-9;  // 30 m at c
    DriftProfile temp_drift;           // common-mode thermal drift
    double turb_sigma_ps = 0.0;        // Gauss-Markov turbulence, stationary sigma
    double turb_corr_s = 1.0;          // Gauss-Markov correlation time
    double attenuation_db = 40.0;
    double noise_psd = 0.0;            // one-sided N0 relative to received power; 1/(C/N0 linear)
    bool reciprocal = true;
    double asymmetry_ps = 0.0;         // constant tau_BA - tau_AB when non-reciprocal
    DriftProfile asym_drift;           // time-varying part of tau_BA - tau_AB

    void validate() const;
};

inline double cn0_to_noise_psd(double cn0_db_hz) {
    return std::pow(10.0, -cn0_db_hz / 10.0);
}

struct DelayRealization {
    std::vector<double> tau_ab_s;
    std::vector<double> tau_ba_s;
    std::uint64_t rng_seed = 0;
};

DelayRealization sample_delay_series(const LinkModel& model, std::int64_t n_epochs,
                                     double epoch_period_s, std::uint64_t seed);

// Physical channel on a sample buffer: fractional delay (windowed-sinc
// band-limited interpolation), power attenuation, additive white gaussian
// noise of the given density. t0 is preserved.
Waveform apply_channel(const Waveform& w, double delay_s, double attenuation_db,
                       double noise_psd, std::uint64_t seed, int sinc_taps = 64);

// Band-limited fractional resampling of x at positions n - delay_samples.
std::vector<double> fractional_delay(const std::vector<double>& x, double delay_samples,
                                     int taps);

} // namespace flexboc
