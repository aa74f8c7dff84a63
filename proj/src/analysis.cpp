#include "flexboc/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flexboc {

StabilityCurve mdev(const std::vector<double>& x, double tau0, const std::vector<int>& m_list) {
    if (tau0 <= 0) throw std::invalid_argument("tau0 must be positive");
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    StabilityCurve curve;
    for (int m : m_list) {
        if (m <= 0) throw std::invalid_argument("m must be positive");
        const std::int64_t terms = n - 3 * static_cast<std::int64_t>(m) + 1;
        if (terms < 1) continue;  // tau too large for this record
        // rolling inner sum over m consecutive second differences
        double s = 0.0;
        for (int i = 0; i < m; ++i)
            s += x[i + 2 * m] - 2.0 * x[i + m] + x[i];
        double acc = s * s;
        for (std::int64_t j = 1; j < terms; ++j) {
            s += (x[j - 1 + 3 * m] - 2.0 * x[j - 1 + 2 * m] + x[j - 1 + m]) -
                 (x[j - 1 + 2 * m] - 2.0 * x[j - 1 + m] + x[j - 1]);
            acc += s * s;
        }
        const double tau = m * tau0;
        const double var = acc / (2.0 * static_cast<double>(m) * static_cast<double>(m) *
                                  tau * tau * static_cast<double>(terms));
        curve.tau_s.push_back(tau);
        curve.value.push_back(std::sqrt(var));
        curve.count.push_back(static_cast<int>(std::min<std::int64_t>(terms, 1e9)));
    }
    return curve;
}

StabilityCurve tdev(const std::vector<double>& x, double tau0, const std::vector<int>& m_list) {
    StabilityCurve curve = mdev(x, tau0, m_list);
    for (std::size_t i = 0; i < curve.value.size(); ++i)
        curve.value[i] = curve.tau_s[i] * curve.value[i] / std::sqrt(3.0);
    return curve;
}

std::vector<int> default_m_ladder(std::size_t n_samples, int per_decade) {
    std::vector<int> ms;
    const std::int64_t m_max = static_cast<std::int64_t>(n_samples) / 3;
    double m = 1.0;
    int last = 0;
    while (static_cast<std::int64_t>(m) <= m_max) {
        const int mi = static_cast<int>(m);
        if (mi != last) ms.push_back(mi);
        last = mi;
        m *= std::pow(10.0, 1.0 / per_decade);
        if (m < last + 1) m = last + 1;
    }
    return ms;
}

UniformSeries resample_uniform(const std::vector<std::int64_t>& indices,
                               const std::vector<double>& values,
                               std::int64_t max_gap) {
    if (indices.size() != values.size())
        throw std::invalid_argument("indices/values size mismatch");
    UniformSeries out;
    if (indices.empty()) return out;

    // split points: gaps of max_gap or more samples
    std::vector<std::size_t> starts{0};
    for (std::size_t i = 1; i < indices.size(); ++i) {
        if (indices[i] <= indices[i - 1])
            throw std::invalid_argument("epoch indices must be strictly increasing");
        if (indices[i] - indices[i - 1] > max_gap) starts.push_back(i);
    }
    starts.push_back(indices.size());
    out.n_segments = starts.size() - 1;

    // keep the longest segment (by spanned epochs)
    std::size_t best = 0;
    std::int64_t best_span = -1;
    for (std::size_t s = 0; s + 1 < starts.size(); ++s) {
        const std::int64_t span = indices[starts[s + 1] - 1] - indices[starts[s]];
        if (span > best_span) { best_span = span; best = s; }
    }
    const std::size_t lo = starts[best], hi = starts[best + 1];
    out.x.reserve(static_cast<std::size_t>(best_span + 1));
    for (std::size_t i = lo; i + 1 < hi; ++i) {
        const std::int64_t gap = indices[i + 1] - indices[i];
        out.x.push_back(values[i]);
        for (std::int64_t k = 1; k < gap; ++k) {
            const double f = static_cast<double>(k) / static_cast<double>(gap);
            out.x.push_back(values[i] + f * (values[i + 1] - values[i]));
            ++out.n_interpolated;
        }
    }
    out.x.push_back(values[hi - 1]);
    return out;
}

Spectrum spectrum(const std::vector<double>& samples, double sample_rate,
                  double resolution_bw) {
    if (resolution_bw <= 0) throw std::invalid_argument("resolution_bw must be positive");
    const std::size_t nseg = static_cast<std::size_t>(std::llround(sample_rate / resolution_bw));
    if (nseg < 8 || samples.size() < 2 * nseg)
        throw std::invalid_argument("waveform too short for requested resolution bandwidth");

    std::vector<double> window(nseg);
    double wsum2 = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / nseg);
        wsum2 += window[i] * window[i];
    }

    const std::size_t nbins = nseg / 2 + 1;
    std::vector<double> acc(nbins, 0.0);
    double* in = fftw_alloc_real(nseg);
    fftw_complex* out = fftw_alloc_complex(nbins);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(nseg), in, out, FFTW_ESTIMATE);

    const std::size_t hop = nseg / 2;
    std::size_t n_avg = 0;
    for (std::size_t start = 0; start + nseg <= samples.size(); start += hop) {
        for (std::size_t i = 0; i < nseg; ++i)
            in[i] = samples[start + i] * window[i];
        fftw_execute(plan);
        for (std::size_t k = 0; k < nbins; ++k)
            acc[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        ++n_avg;
    }
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);

    Spectrum spec;
    spec.resolution_bw = sample_rate / static_cast<double>(nseg);
    spec.freq_hz.resize(nbins);
    spec.power.resize(nbins);
    const double norm = 1.0 / (static_cast<double>(n_avg) * wsum2 * static_cast<double>(nseg));
    for (std::size_t k = 0; k < nbins; ++k) {
        spec.freq_hz[k] = static_cast<double>(k) * spec.resolution_bw;
        // one-sided: double interior bins so the sum equals mean square power
        const double fold = (k == 0 || k == nbins - 1) ? 1.0 : 2.0;
        spec.power[k] = fold * acc[k] * norm;
    }
    return spec;
}

AutocorrResult autocorr(const std::vector<double>& samples, double sample_rate,
                        double max_lag_s) {
    const std::size_t n = samples.size();
    const std::size_t max_lag = static_cast<std::size_t>(std::llround(max_lag_s * sample_rate));
    if (max_lag == 0 || n < 2 * max_lag)
        throw std::invalid_argument("waveform too short for requested max lag");

    const std::size_t nfft = n + max_lag;
    double* in = fftw_alloc_real(nfft);
    fftw_complex* freq = fftw_alloc_complex(nfft / 2 + 1);
    fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in, freq, FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_c2r_1d(static_cast<int>(nfft), freq, in, FFTW_ESTIMATE);

    for (std::size_t i = 0; i < n; ++i) in[i] = samples[i];
    for (std::size_t i = n; i < nfft; ++i) in[i] = 0.0;
    fftw_execute(fwd);
    for (std::size_t k = 0; k < nfft / 2 + 1; ++k) {
        const double re = freq[k][0], im = freq[k][1];
        freq[k][0] = re * re + im * im;
        freq[k][1] = 0.0;
    }
    fftw_execute(inv);

    const double r0 = in[0];
    AutocorrResult res;
    res.lag_s.resize(2 * max_lag + 1);
    res.corr.resize(2 * max_lag + 1);
    for (std::size_t l = 0; l <= max_lag; ++l) {
        const double c = in[l] / r0;
        res.lag_s[max_lag + l] = static_cast<double>(l) / sample_rate;
        res.corr[max_lag + l] = c;
        res.lag_s[max_lag - l] = -static_cast<double>(l) / sample_rate;
        res.corr[max_lag - l] = c;
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(in);
    fftw_free(freq);
    return res;
}

namespace {

// Walk outward from a peak bin until the spectrum has dropped at least
// drop_db below the peak and turns back up; returns the bin of the null.
std::size_t find_null(const std::vector<double>& p, std::size_t peak, int dir,
                      double drop_db) {
    const double thresh = p[peak] * std::pow(10.0, -drop_db / 10.0);
    std::size_t best = peak;
    double best_val = p[peak];
    std::size_t i = peak;
    while (true) {
        if (dir < 0 && i == 0) break;
        if (dir > 0 && i + 1 >= p.size()) break;
        i = static_cast<std::size_t>(static_cast<std::int64_t>(i) + dir);
        if (p[i] < best_val) { best_val = p[i]; best = i; }
        // rose 6 dB off a sufficiently deep minimum: null found
        if (best_val < thresh && p[i] > best_val * 4.0) return best;
    }
    return best;
}

} // namespace

double effective_bandwidth(const Spectrum& spec, BandwidthMethod method) {
    if (method != BandwidthMethod::FundamentalLobe)
        throw std::invalid_argument("unknown bandwidth method");
    const auto& p = spec.power;
    if (p.size() < 16) throw std::invalid_argument("spectrum does not cover the signal band");

    const std::size_t peak1 =
        static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    const std::size_t left1 = find_null(p, peak1, -1, 12.0);
    const std::size_t right1 = find_null(p, peak1, +1, 12.0);
    double bw = spec.freq_hz[right1] - spec.freq_hz[left1];

    // look for a mirror sideband of comparable power outside the first lobe
    std::size_t peak2 = peak1;
    double p2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i >= left1 && i <= right1) continue;
        if (p[i] > p2) { p2 = p[i]; peak2 = i; }
    }
    if (peak2 != peak1 && p2 > 0.5 * p[peak1]) {
        const std::size_t left2 = find_null(p, peak2, -1, 12.0);
        const std::size_t right2 = find_null(p, peak2, +1, 12.0);
        bw += spec.freq_hz[right2] - spec.freq_hz[left2];
    }
    return bw;
}

} // namespace flexboc
