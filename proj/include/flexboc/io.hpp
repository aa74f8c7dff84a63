#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flexboc/analysis.hpp"
#include "flexboc/channel.hpp"
#include "flexboc/signal.hpp"
#include "flexboc/twoway.hpp"

namespace flexboc {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raw sample export: little-endian float32 plus a sidecar "<path>.meta"
// text file carrying sample_rate and t0.
void write_waveform_raw(const std::string& path, const Waveform& w);
Waveform read_waveform_raw(const std::string& path);

// CSV writers. Every file starts with a "schema=..." line followed by a
// header row naming columns and units. Numeric formatting is fixed so
// identical inputs produce identical bytes.
void write_delay_csv(const std::string& path, const DelayRealization& real);
void write_series_csv(const std::string& path, const ClockDiffSeries& series);
void write_stability_csv(const std::string& path, const StabilityCurve& curve,
                         const std::string& value_name);
void write_spectrum_csv(const std::string& path, const Spectrum& spec);
void write_autocorr_csv(const std::string& path, const AutocorrResult& ac);

std::uint64_t fnv1a_file(const std::string& path);

// manifest.txt: one "<hash16hex>  <name>" line per file, sorted by name.
void write_manifest(const std::string& dir, const std::vector<std::string>& names);

} // namespace flexboc
