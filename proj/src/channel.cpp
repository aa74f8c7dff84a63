#include "flexboc/channel.hpp"

#include <algorithm>
#include <cmath>

#include "flexboc/rng.hpp"

namespace flexboc {

double DriftProfile::at(double t_s) const {
    if (time_s.empty()) return 0.0;
    if (t_s <= time_s.front()) return delay_ps.front();
    if (t_s >= time_s.back()) return delay_ps.back();
    auto it = std::upper_bound(time_s.begin(), time_s.end(), t_s);
    const std::size_t i = static_cast<std::size_t>(it - time_s.begin());
    const double f = (t_s - time_s[i - 1]) / (time_s[i] - time_s[i - 1]);
    return delay_ps[i - 1] + f * (delay_ps[i] - delay_ps[i - 1]);
}

void DriftProfile::validate() const {
    if (time_s.size() != delay_ps.size())
        throw ConfigError("drift profile time/delay size mismatch");
    for (std::size_t i = 1; i < time_s.size(); ++i)
        if (time_s[i] <= time_s[i - 1])
            throw ConfigError("drift profile times must be strictly increasing");
}

void LinkModel::validate() const {
    if (attenuation_db < 0) throw ConfigError("attenuation_db must be >= 0");
    if (turb_sigma_ps < 0) throw ConfigError("turbulence sigma must be >= 0");
    if (turb_corr_s <= 0) throw ConfigError("turbulence correlation time must be > 0");
    if (noise_psd < 0) throw ConfigError("noise_psd must be >= 0");
    if (base_delay_s < 0) throw ConfigError("base_delay must be >= 0");
    temp_drift.validate();
    asym_drift.validate();
}

DelayRealization sample_delay_series(const LinkModel& model, std::int64_t n_epochs,
                                     double epoch_period_s, std::uint64_t seed) {
    model.validate();
    if (n_epochs <= 0) throw std::invalid_argument("n_epochs must be positive");

    DelayRealization real;
    real.rng_seed = seed;
    real.tau_ab_s.resize(static_cast<std::size_t>(n_epochs));
    real.tau_ba_s.resize(static_cast<std::size_t>(n_epochs));

    Rng rng(seed);
    const double a = std::exp(-epoch_period_s / model.turb_corr_s);
    const double g = model.turb_sigma_ps * std::sqrt(1.0 - a * a);
    double turb_ps = model.turb_sigma_ps > 0 ? model.turb_sigma_ps * rng.next_gaussian() : 0.0;

    for (std::int64_t k = 0; k < n_epochs; ++k) {
        const double t = static_cast<double>(k) * epoch_period_s;
        if (k > 0 && model.turb_sigma_ps > 0)
            turb_ps = a * turb_ps + g * rng.next_gaussian();
        const double common =
            model.base_delay_s + (model.temp_drift.at(t) + turb_ps) * 1e-12;
        if (model.reciprocal) {
            real.tau_ab_s[static_cast<std::size_t>(k)] = common;
            real.tau_ba_s[static_cast<std::size_t>(k)] = common;
        } else {
            const double asym_s = (model.asymmetry_ps + model.asym_drift.at(t)) * 1e-12;
            real.tau_ab_s[static_cast<std::size_t>(k)] = common - 0.5 * asym_s;
            real.tau_ba_s[static_cast<std::size_t>(k)] = common + 0.5 * asym_s;
        }
    }
    return real;
}

std::vector<double> fractional_delay(const std::vector<double>& x, double delay_samples,
                                     int taps) {
    if (taps < 8 || taps % 2 != 0) throw std::invalid_argument("taps must be even and >= 8");
    const double d_floor = std::floor(delay_samples);
    const std::int64_t d_int = static_cast<std::int64_t>(d_floor);
    const double frac = delay_samples - d_floor;

    // Kaiser-windowed shifted sinc centered at the fractional offset
    const int half = taps / 2;
    const double beta = 10.0;
    const double i0b = std::cyl_bessel_i(0.0, beta);
    std::vector<double> h(static_cast<std::size_t>(taps));
    for (int m = -half + 1; m <= half; ++m) {
        const double u = static_cast<double>(m) - frac;
        const double sinc = (u == 0.0) ? 1.0 : std::sin(M_PI * u) / (M_PI * u);
        const double r = u / static_cast<double>(half);
        const double win = std::abs(r) >= 1.0
                               ? 0.0
                               : std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0b;
        h[static_cast<std::size_t>(m + half - 1)] = sinc * win;
    }

    const std::int64_t n = static_cast<std::int64_t>(x.size());
    std::vector<double> y(x.size(), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        // y[i] = sum_m h[m] * x[i - d_int - m]
        for (int m = -half + 1; m <= half; ++m) {
            const std::int64_t j = i - d_int - m;
            if (j >= 0 && j < n)
                acc += h[static_cast<std::size_t>(m + half - 1)] * x[static_cast<std::size_t>(j)];
        }
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

Waveform apply_channel(const Waveform& w, double delay_s, double attenuation_db,
                       double noise_psd, std::uint64_t seed, int sinc_taps) {
    if (delay_s < 0) throw std::invalid_argument("delay must be >= 0");
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.t0_fs = w.t0_fs;  // delay is physical, not a re-labeling

    const double delay_samples = delay_s * w.sample_rate;
    const double gain = std::pow(10.0, -attenuation_db / 20.0);

    if (delay_samples == 0.0) {
        out.samples = w.samples;
        if (gain != 1.0)
            for (auto& s : out.samples) s *= gain;
    } else {
        out.samples = fractional_delay(w.samples, delay_samples, sinc_taps);
        for (auto& s : out.samples) s *= gain;
    }

    if (noise_psd > 0.0) {
        double p = 0.0;
        for (auto s : out.samples) p += s * s;
        p /= static_cast<double>(out.samples.size());
        const double sigma = std::sqrt(noise_psd * p * w.sample_rate / 2.0);
        Rng rng(seed);
        for (auto& s : out.samples) s += sigma * rng.next_gaussian();
    }
    return out;
}

} // namespace flexboc
