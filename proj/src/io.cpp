#include "flexboc/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace flexboc {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream f(path, mode);
    if (!f) throw IoError("cannot open for writing: " + path);
    return f;
}

} // namespace

void write_waveform_raw(const std::string& path, const Waveform& w) {
    auto f = open_out(path, std::ios::binary);
    std::vector<float> buf(w.samples.size());
    for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i] = static_cast<float>(w.samples[i]);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));

    auto m = open_out(path + ".meta");
    m << "format=float32le\n";
    m << "n_samples=" << w.samples.size() << "\n";
    m << "sample_rate_hz=" << fmt("%.6f", w.sample_rate) << "\n";
    m << "t0_fs=" << w.t0_fs << "\n";
}

Waveform read_waveform_raw(const std::string& path) {
    Waveform w;
    std::ifstream m(path + ".meta");
    if (!m) throw IoError("missing sidecar: " + path + ".meta");
    std::string line;
    std::size_t n = 0;
    while (std::getline(m, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "n_samples") n = std::stoull(val);
        else if (key == "sample_rate_hz") w.sample_rate = std::stod(val);
        else if (key == "t0_fs") w.t0_fs = std::stoll(val);
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<float> buf(n);
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
    if (static_cast<std::size_t>(f.gcount()) != n * sizeof(float))
        throw IoError("truncated raw file: " + path);
    w.samples.assign(buf.begin(), buf.end());
    return w;
}

void write_delay_csv(const std::string& path, const DelayRealization& real) {
    auto f = open_out(path);
    f << "schema=flexboc.delays.v1\n";
    f << "epoch_index,tau_ab_ps,tau_ba_ps\n";
    for (std::size_t k = 0; k < real.tau_ab_s.size(); ++k)
        f << k << ',' << fmt("%.6f", real.tau_ab_s[k] * 1e12) << ','
          << fmt("%.6f", real.tau_ba_s[k] * 1e12) << '\n';
}

void write_series_csv(const std::string& path, const ClockDiffSeries& series) {
    auto f = open_out(path);
    f << "schema=flexboc.clockdiff.v1\n";
    f << "time_s,delta_t_ps,t_a_ps,t_b_ps,cn0_a_db_hz,cn0_b_db_hz\n";
    const bool have_cn0 = series.cn0_a_db_hz.size() == series.size() &&
                          series.cn0_b_db_hz.size() == series.size();
    for (std::size_t i = 0; i < series.size(); ++i) {
        f << fmt("%.6f", static_cast<double>(series.epoch_index[i]) * series.epoch_period_s)
          << ',' << fmt("%.3f", fs_to_ps(series.delta_t_fs[i])) << ','
          << fmt("%.3f", fs_to_ps(series.t_a_fs[i])) << ','
          << fmt("%.3f", fs_to_ps(series.t_b_fs[i])) << ',';
        if (have_cn0)
            f << fmt("%.2f", series.cn0_a_db_hz[i]) << ',' << fmt("%.2f", series.cn0_b_db_hz[i]);
        else
            f << ',';
        f << '\n';
    }
}

void write_stability_csv(const std::string& path, const StabilityCurve& curve,
                         const std::string& value_name) {
    auto f = open_out(path);
    f << "schema=flexboc.stability.v1\n";
    f << "tau_s," << value_name << ",count\n";
    for (std::size_t i = 0; i < curve.tau_s.size(); ++i)
        f << fmt("%.6f", curve.tau_s[i]) << ',' << fmt("%.9e", curve.value[i]) << ','
          << curve.count[i] << '\n';
}

void write_spectrum_csv(const std::string& path, const Spectrum& spec) {
    auto f = open_out(path);
    f << "schema=flexboc.spectrum.v1\n";
    f << "freq_hz,power_db\n";
    for (std::size_t i = 0; i < spec.freq_hz.size(); ++i) {
        const double db = spec.power[i] > 0 ? 10.0 * std::log10(spec.power[i]) : -400.0;
        f << fmt("%.3f", spec.freq_hz[i]) << ',' << fmt("%.4f", db) << '\n';
    }
}

void write_autocorr_csv(const std::string& path, const AutocorrResult& ac) {
    auto f = open_out(path);
    f << "schema=flexboc.autocorr.v1\n";
    f << "lag_ns,correlation\n";
    for (std::size_t i = 0; i < ac.lag_s.size(); ++i)
        f << fmt("%.4f", ac.lag_s[i] * 1e9) << ',' << fmt("%.7f", ac.corr[i]) << '\n';
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!f) break;
    }
    return h;
}

void write_manifest(const std::string& dir, const std::vector<std::string>& names) {
    std::vector<std::string> sorted = names;
    std::sort(sorted.begin(), sorted.end());
    auto f = open_out(dir + "/manifest.txt");
    for (const auto& name : sorted) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a_file(dir + "/" + name));
        f << buf << "  " << name << '\n';
    }
}

} // namespace flexboc
