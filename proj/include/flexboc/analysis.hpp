#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace flexboc {

struct StabilityCurve {
    std::vector<double> tau_s;
    std::vector<double> value;  // dimensionless (MDEV) or seconds (TDEV)
    std::vector<int> count;     // averaging terms per tau
};

// Modified Allan deviation over phase data x (seconds), sampled at tau0.
// Each m in m_list gives tau = m * tau0; taus needing more than the
// available record are dropped.
StabilityCurve mdev(const std::vector<double>& x, double tau0, const std::vector<int>& m_list);
StabilityCurve tdev(const std::vector<double>& x, double tau0, const std::vector<int>& m_list);

// Log-spaced m ladder (1, 2, 4, ... capped to the record length).
std::vector<int> default_m_ladder(std::size_t n_samples, int per_decade = 4);

// Gap handling before the stability estimators: indices are strictly
// increasing epoch numbers; interior gaps shorter than max_gap samples are
// linearly interpolated, a longer gap splits the record and the longest
// contiguous segment is kept.
struct UniformSeries {
    std::vector<double> x;
    std::size_t n_interpolated = 0;
    std::size_t n_segments = 1;
};
UniformSeries resample_uniform(const std::vector<std::int64_t>& indices,
                               const std::vector<double>& values,
                               std::int64_t max_gap = 10);

struct Spectrum {
    std::vector<double> freq_hz;   // one-sided, 0..fs/2
    std::vector<double> power;     // linear power per bin; sums to mean square
    double resolution_bw = 0.0;
};

// Averaged periodogram (Welch, Hann window, 50% overlap).
Spectrum spectrum(const std::vector<double>& samples, double sample_rate,
                  double resolution_bw);

struct AutocorrResult {
    std::vector<double> lag_s;  // -max_lag .. +max_lag
    std::vector<double> corr;   // normalized, 1.0 at lag 0
};

// Normalized autocorrelation, intended for the carrier-stripped composite.
AutocorrResult autocorr(const std::vector<double>& samples, double sample_rate,
                        double max_lag_s);

enum class BandwidthMethod { FundamentalLobe };

// Total width of the fundamental code lobes around each retained spectral
// sideband: null-to-null per sideband, summed over sidebands.
double effective_bandwidth(const Spectrum& spec, BandwidthMethod method);

} // namespace flexboc
