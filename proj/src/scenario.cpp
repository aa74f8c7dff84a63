#include "flexboc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "flexboc/analysis.hpp"
#include "flexboc/io.hpp"
#include "flexboc/rng.hpp"

namespace flexboc {

namespace {

double num(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(where + ": not a number: '" + v + "'");
    }
}

bool boolean(const std::string& v, const std::string& where) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(where + ": not a boolean: '" + v + "'");
}

std::vector<double> num_list(const std::string& v, const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(num(item, where));
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

void apply_clock(SiteClock& c, const std::string& key, const std::string& val,
                 const std::string& where) {
    if (key == "offset_ps") c.offset_fs = fs_from_ps(num(val, where));
    else if (key == "drift") c.drift = num(val, where);
    else if (key == "white_pm_sigma_ps") c.white_pm_sigma_ps = num(val, where);
    else if (key == "reference") c.reference = boolean(val, where);
    else throw ConfigError(where + ": unknown key");
}

} // namespace

Scenario parse_scenario(const std::string& text) {
    Scenario s;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string where = section.empty() ? key : section + "." + key;

        if (section.empty()) {
            if (key == "name") s.name = val;
            else if (key == "mode") {
                if (val == "waveform") s.mode = ScenarioMode::Waveform;
                else if (val == "measurement") s.mode = ScenarioMode::Measurement;
                else if (val == "figure4") s.mode = ScenarioMode::Figure4;
                else if (val == "figure5") s.mode = ScenarioMode::Figure5;
                else throw ConfigError("mode: unknown mode '" + val + "'");
            } else throw ConfigError(where + ": unknown key");
        } else if (section == "run") {
            if (key == "n_epochs") s.n_epochs = static_cast<std::int64_t>(num(val, where));
            else if (key == "epoch_period") s.epoch_period_s = num(val, where);
            else if (key == "seed") s.seed = static_cast<std::uint64_t>(num(val, where));
            else if (key == "path_asym_ps") s.path_asym_fs = fs_from_ps(num(val, where));
            else if (key == "blackout_start") s.blackout_start = static_cast<std::int64_t>(num(val, where));
            else if (key == "blackout_end") s.blackout_end = static_cast<std::int64_t>(num(val, where));
            else if (key == "sinc_taps") s.sinc_taps = static_cast<int>(num(val, where));
            else if (key == "emit_stability") s.emit_stability = boolean(val, where);
            else if (key == "emit_summary_only") s.emit_summary_only = boolean(val, where);
            else if (key == "duration") s.duration_s = num(val, where);
            else if (key == "resolution_bw") s.resolution_bw_hz = num(val, where);
            else if (key == "bpsk_resolution_bw") s.bpsk_resolution_bw_hz = num(val, where);
            else if (key == "bpsk_chip_rate") s.bpsk_chip_rate = num(val, where);
            else if (key == "max_lag") s.max_lag_s = num(val, where);
            else throw ConfigError(where + ": unknown key");
        } else if (section == "signal") {
            if (key == "f_if") s.signal.f_if = num(val, where);
            else if (key == "f_sc") s.signal.f_sc = num(val, where);
            else if (key == "chip_rate") s.signal.chip_rate = num(val, where);
            else if (key == "code_len") s.signal.code_len = static_cast<int>(num(val, where));
            else if (key == "sample_rate") s.signal.sample_rate = num(val, where);
            else if (key == "amplitude") s.signal.amplitude = num(val, where);
            else throw ConfigError(where + ": unknown key");
        } else if (section == "link") {
            if (key == "base_delay_ns") s.link.base_delay_s = num(val, where) * 1e-9;
            else if (key == "attenuation_db") s.link.attenuation_db = num(val, where);
            else if (key == "cn0_db_hz") s.link.noise_psd = cn0_to_noise_psd(num(val, where));
            else if (key == "noise_psd") s.link.noise_psd = num(val, where);
            else if (key == "reciprocal") s.link.reciprocal = boolean(val, where);
            else if (key == "asymmetry_ps") s.link.asymmetry_ps = num(val, where);
            else if (key == "turb_sigma_ps") s.link.turb_sigma_ps = num(val, where);
            else if (key == "turb_corr_s") s.link.turb_corr_s = num(val, where);
            else if (key == "temp_time_s") s.link.temp_drift.time_s = num_list(val, where);
            else if (key == "temp_delay_ps") s.link.temp_drift.delay_ps = num_list(val, where);
            else if (key == "asym_time_s") s.link.asym_drift.time_s = num_list(val, where);
            else if (key == "asym_delay_ps") s.link.asym_drift.delay_ps = num_list(val, where);
            else throw ConfigError(where + ": unknown key");
        } else if (section == "clock_a") {
            apply_clock(s.clock_a, key, val, where);
        } else if (section == "clock_b") {
            apply_clock(s.clock_b, key, val, where);
        } else if (section == "calibration") {
            if (key == "tau_tx_a_ps") s.cal.tau_tx_a_ps = num(val, where);
            else if (key == "tau_rx_a_ps") s.cal.tau_rx_a_ps = num(val, where);
            else if (key == "tau_tx_b_ps") s.cal.tau_tx_b_ps = num(val, where);
            else if (key == "tau_rx_b_ps") s.cal.tau_rx_b_ps = num(val, where);
            else throw ConfigError(where + ": unknown key");
        } else if (section == "receiver") {
            if (key == "pll_bw_hz") s.loops.pll_bw_hz = num(val, where);
            else if (key == "sll_bw_hz") s.loops.sll_bw_hz = num(val, where);
            else if (key == "dll_bw_hz") s.loops.dll_bw_hz = num(val, where);
            else if (key == "el_spacing_chips") s.loops.el_spacing_chips = num(val, where);
            else if (key == "acq_threshold") s.loops.acq_threshold = num(val, where);
            else if (key == "lock_snr_db") s.loops.lock_snr_db = num(val, where);
            else throw ConfigError(where + ": unknown key");
        } else if (section == "jitter") {
            if (key == "sigma_ps") s.jitter.sigma_ps = num(val, where);
            else if (key == "cn0_db_hz") s.jitter.cn0_db_hz = num(val, where);
            else if (key == "random_walk_ps") s.jitter.random_walk_ps = num(val, where);
            else throw ConfigError(where + ": unknown key");
        } else {
            throw ConfigError("unknown section [" + section + "]");
        }
    }
    s.clock_a.site_id = SiteId::A;
    s.clock_b.site_id = SiteId::B;
    return s;
}

namespace {

const std::map<std::string, const char*>& bundled() {
    static const std::map<std::string, const char*> m = {
        {"fig4_spectra", R"(name = fig4_spectra
mode = figure4
[run]
seed = 7
duration = 0.02
resolution_bw = 12500
bpsk_resolution_bw = 50000
bpsk_chip_rate = 10e6
)"},
        {"fig5_autocorr", R"(name = fig5_autocorr
mode = figure5
[run]
seed = 7
duration = 0.01
max_lag = 2e-6
bpsk_chip_rate = 10e6
)"},
        {"fig7_drift", R"(name = fig7_drift
mode = measurement
[run]
n_epochs = 3600
epoch_period = 1.0
seed = 11
[link]
reciprocal = false
temp_time_s = 0,900,1800,2700,3600
temp_delay_ps = -85,85,-85,85,-85
asym_time_s = 0,900,1800,2700,3600
asym_delay_ps = -95,95,-95,95,-95
)"},
        {"fig8_stability", R"(name = fig8_stability
mode = measurement
[run]
n_epochs = 54000
epoch_period = 1.0
seed = 5
emit_stability = true
[clock_a]
reference = true
[clock_b]
reference = true
[jitter]
sigma_ps = 3.252691
random_walk_ps = 0.302
)"},
        {"eq5_closure", R"(name = eq5_closure
mode = measurement
[run]
n_epochs = 1000000
epoch_period = 0.001
seed = 3
emit_summary_only = true
[clock_a]
offset_ps = 1000
)"},
    };
    return m;
}

} // namespace

std::vector<std::string> bundled_scenario_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : bundled()) names.push_back(k);
    return names;
}

std::string bundled_scenario_text(const std::string& name) {
    const auto it = bundled().find(name);
    if (it == bundled().end()) throw ConfigError("unknown bundled scenario: " + name);
    return it->second;
}

Scenario load_scenario(const std::string& path) {
    const auto it = bundled().find(path);
    if (it != bundled().end()) return parse_scenario(it->second);
    std::ifstream f(path);
    if (!f) throw IoError("cannot open scenario: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str());
}

std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> diags;
    if (s.name.empty()) diags.push_back("name: required");

    if (s.signal.code_len <= 0) diags.push_back("signal.code_len: must be > 0");
    if (s.signal.sample_rate < 4.0 * s.signal.f_if)
        diags.push_back("signal.sample_rate: must be >= 4 x f_if (Nyquist margin)");
    if (diags.empty()) {
        try {
            s.signal.validate();
        } catch (const std::exception& e) {
            diags.push_back(std::string("signal: ") + e.what());
        }
    }
    try {
        s.link.validate();
    } catch (const std::exception& e) {
        diags.push_back(std::string("link: ") + e.what());
    }

    if (s.mode == ScenarioMode::Waveform || s.mode == ScenarioMode::Measurement) {
        if (s.n_epochs < 1) diags.push_back("run.n_epochs: must be >= 1");
        if (s.epoch_period_s <= 0) diags.push_back("run.epoch_period: must be > 0");
        if (s.mode == ScenarioMode::Waveform && s.n_epochs > 2000)
            diags.push_back("run.n_epochs: waveform mode limited to 2000 epochs");
        if (s.mode == ScenarioMode::Waveform &&
            (s.sinc_taps < 8 || s.sinc_taps % 2 != 0))
            diags.push_back("run.sinc_taps: must be even and >= 8");
    } else {
        if (s.duration_s <= 0) diags.push_back("run.duration: must be > 0");
        if (s.mode == ScenarioMode::Figure4 &&
            (s.resolution_bw_hz <= 0 || s.bpsk_resolution_bw_hz <= 0))
            diags.push_back("run.resolution_bw: must be > 0");
        if (s.mode == ScenarioMode::Figure5 && s.max_lag_s <= 0)
            diags.push_back("run.max_lag: must be > 0");
        if (s.bpsk_chip_rate <= 0) diags.push_back("run.bpsk_chip_rate: must be > 0");
    }
    return diags;
}

namespace {

struct SeriesStats {
    std::size_t n = 0;
    double mean_ps = 0, std_ps = 0, min_ps = 0, max_ps = 0;
};

SeriesStats series_stats(const ClockDiffSeries& series) {
    SeriesStats st;
    st.n = series.size();
    if (st.n == 0) return st;
    double sum = 0;
    st.min_ps = st.max_ps = fs_to_ps(series.delta_t_fs[0]);
    for (const fs_t v : series.delta_t_fs) {
        const double ps = fs_to_ps(v);
        sum += ps;
        st.min_ps = std::min(st.min_ps, ps);
        st.max_ps = std::max(st.max_ps, ps);
    }
    st.mean_ps = sum / static_cast<double>(st.n);
    double acc = 0;
    for (const fs_t v : series.delta_t_fs) {
        const double d = fs_to_ps(v) - st.mean_ps;
        acc += d * d;
    }
    st.std_ps = st.n > 1 ? std::sqrt(acc / static_cast<double>(st.n - 1)) : 0.0;
    return st;
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void emit_stability_files(const ClockDiffSeries& series, const std::string& out,
                          std::vector<std::string>& artifacts, std::ostringstream& sum) {
    const auto uni = resample_uniform(series.epoch_index, series.delta_t_sec());
    const auto ladder = default_m_ladder(uni.x.size());
    const auto md = mdev(uni.x, series.epoch_period_s, ladder);
    const auto td = tdev(uni.x, series.epoch_period_s, ladder);
    write_stability_csv(out + "/mdev.csv", md, "mdev");
    write_stability_csv(out + "/tdev.csv", td, "tdev_s");
    artifacts.push_back("mdev.csv");
    artifacts.push_back("tdev.csv");
    sum << "stability_samples=" << uni.x.size()
        << " interpolated=" << uni.n_interpolated
        << " segments=" << uni.n_segments << "\n";
    if (!td.tau_s.empty())
        sum << "tdev_at_" << fmt("%.0f", td.tau_s.front()) << "s_ps="
            << fmt("%.4f", td.value.front() * 1e12) << "\n";
}

} // namespace

RunReport run_scenario(const Scenario& s, const std::string& out_dir, int threads) {
    (void)threads;  // single-threaded pipelines; accepted for interface stability
    const auto diags = validate_scenario(s);
    if (!diags.empty()) {
        std::string msg = "invalid scenario";
        for (const auto& d : diags) msg += "\n  " + d;
        throw ConfigError(msg);
    }
    std::filesystem::create_directories(out_dir);

    RunReport report;
    std::ostringstream sum;
    sum << "scenario=" << s.name << "\n";
    sum << "seed=" << s.seed << "\n";

    switch (s.mode) {
    case ScenarioMode::Figure4: {
        const PnCode code = gen_pn_code(s.signal, 1);
        const Waveform wf = synth_flexboc(s.signal, code, {}, 0, s.duration_s);
        const Spectrum sp_f = spectrum(wf.samples, s.signal.sample_rate, s.resolution_bw_hz);
        const Waveform wb = synth_bpsk(s.bpsk_chip_rate, s.signal.f_if, s.signal.sample_rate,
                                       0, s.duration_s, s.seed);
        const Spectrum sp_b =
            spectrum(wb.samples, s.signal.sample_rate, s.bpsk_resolution_bw_hz);
        write_spectrum_csv(out_dir + "/flexboc_spectrum.csv", sp_f);
        write_spectrum_csv(out_dir + "/bpsk_spectrum.csv", sp_b);
        report.artifacts = {"flexboc_spectrum.csv", "bpsk_spectrum.csv"};
        const double bw_f = effective_bandwidth(sp_f, BandwidthMethod::FundamentalLobe);
        const double bw_b = effective_bandwidth(sp_b, BandwidthMethod::FundamentalLobe);
        sum << "flexboc_effective_bw_hz=" << fmt("%.1f", bw_f) << "\n";
        sum << "bpsk_effective_bw_hz=" << fmt("%.1f", bw_b) << "\n";
        sum << "bandwidth_reduction_pct=" << fmt("%.3f", 100.0 * (1.0 - bw_f / bw_b)) << "\n";
        break;
    }
    case ScenarioMode::Figure5: {
        const PnCode code = gen_pn_code(s.signal, 1);
        const auto base_f = flexboc_baseband(s.signal, code, s.duration_s);
        const auto ac_f = autocorr(base_f, s.signal.sample_rate, s.max_lag_s);
        const auto base_b =
            bpsk_baseband(s.bpsk_chip_rate, s.signal.sample_rate, s.duration_s, s.seed);
        const auto ac_b = autocorr(base_b, s.signal.sample_rate, s.max_lag_s);
        write_autocorr_csv(out_dir + "/flexboc_autocorr.csv", ac_f);
        write_autocorr_csv(out_dir + "/bpsk_autocorr.csv", ac_b);
        report.artifacts = {"flexboc_autocorr.csv", "bpsk_autocorr.csv"};
        break;
    }
    case ScenarioMode::Measurement: {
        const ClockDiffSeries series = run_exchange_measurement_level(
            s.clock_a, s.clock_b, s.link, s.cal, s.n_epochs, s.epoch_period_s, s.jitter,
            s.seed, s.path_asym_fs);
        if (!s.emit_summary_only) {
            write_series_csv(out_dir + "/series.csv", series);
            report.artifacts.push_back("series.csv");
            const DelayRealization delays = sample_delay_series(
                s.link, s.n_epochs, s.epoch_period_s, Rng::derive(s.seed, 0));
            write_delay_csv(out_dir + "/delays.csv", delays);
            report.artifacts.push_back("delays.csv");
        }
        const SeriesStats st = series_stats(series);
        sum << "epochs=" << st.n << "\n";
        sum << "delta_t_mean_ps=" << fmt("%.6f", st.mean_ps) << "\n";
        sum << "delta_t_std_ps=" << fmt("%.6f", st.std_ps) << "\n";
        sum << "delta_t_min_ps=" << fmt("%.6f", st.min_ps) << "\n";
        sum << "delta_t_max_ps=" << fmt("%.6f", st.max_ps) << "\n";
        sum << "delta_t_p2p_ps=" << fmt("%.6f", st.max_ps - st.min_ps) << "\n";
        if (s.emit_stability) emit_stability_files(series, out_dir, report.artifacts, sum);
        break;
    }
    case ScenarioMode::Waveform: {
        WaveformRunOptions opts;
        opts.n_epochs = s.n_epochs;
        opts.blackout_start = s.blackout_start;
        opts.blackout_end = s.blackout_end;
        opts.sinc_taps = s.sinc_taps;
        opts.loops = s.loops;
        const WaveformRunResult res = run_exchange_waveform_level(
            s.clock_a, s.clock_b, s.link, s.cal, s.signal, opts, s.seed, s.path_asym_fs);
        write_series_csv(out_dir + "/series.csv", res.series);
        report.artifacts.push_back("series.csv");
        const SeriesStats st = series_stats(res.series);
        sum << "epochs_total=" << s.n_epochs << "\n";
        sum << "epochs_valid=" << st.n << "\n";
        sum << "delta_t_mean_ps=" << fmt("%.6f", st.mean_ps) << "\n";
        sum << "delta_t_std_ps=" << fmt("%.6f", st.std_ps) << "\n";
        sum << "frames_at_a=" << res.frames_at_a.size()
            << " frames_at_b=" << res.frames_at_b.size() << "\n";
        sum << "crc_failures_a=" << res.crc_failures_a
            << " crc_failures_b=" << res.crc_failures_b << "\n";
        if (s.emit_stability)
            emit_stability_files(res.series, out_dir, report.artifacts, sum);
        break;
    }
    }

    report.summary = sum.str();
    {
        std::ofstream f(out_dir + "/summary.txt");
        if (!f) throw IoError("cannot write summary.txt");
        f << report.summary;
    }
    report.artifacts.push_back("summary.txt");
    write_manifest(out_dir, report.artifacts);
    report.artifacts.push_back("manifest.txt");
    return report;
}

} // namespace flexboc
