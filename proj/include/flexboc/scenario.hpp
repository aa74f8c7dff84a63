#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexboc/channel.hpp"
#include "flexboc/receiver.hpp"
#include "flexboc/signal.hpp"
#include "flexboc/twoway.hpp"

namespace flexboc {

enum class ScenarioMode { Waveform, Measurement, Figure4, Figure5 };

struct Scenario {
    std::string name;
    ScenarioMode mode = ScenarioMode::Measurement;
    FlexBocConfig signal;
    LinkModel link;
    SiteClock clock_a{SiteId::A};
    SiteClock clock_b{SiteId::B};
    CalibrationSet cal;
    JitterModel jitter;
    LoopConfig loops;
    std::int64_t n_epochs = 100;
    double epoch_period_s = 1e-3;
    std::uint64_t seed = 1;
    fs_t path_asym_fs = 0;             // asymmetry assumed by the solver
    std::int64_t blackout_start = -1;  // waveform mode only
    std::int64_t blackout_end = -1;
    int sinc_taps = 64;
    bool emit_stability = false;       // mdev.csv / tdev.csv from the series
    bool emit_summary_only = false;    // long runs: statistics, no series.csv

    // figure modes
    double duration_s = 0.01;
    double resolution_bw_hz = 12.5e3;
    double bpsk_resolution_bw_hz = 50e3;
    double bpsk_chip_rate = 10e6;
    double max_lag_s = 2e-6;
};

// Key/value text with [section] headers; '#' comments; comma lists for the
// drift profiles. Unknown keys are a validation error.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);  // bundled name or file path

// Field-level diagnostics; empty means runnable.
std::vector<std::string> validate_scenario(const Scenario& s);

struct RunReport {
    std::vector<std::string> artifacts;  // relative to out_dir, manifest last
    std::string summary;                 // also written to summary.txt
};

RunReport run_scenario(const Scenario& s, const std::string& out_dir, int threads = 1);

std::vector<std::string> bundled_scenario_names();
std::string bundled_scenario_text(const std::string& name);  // throws if unknown

} // namespace flexboc
