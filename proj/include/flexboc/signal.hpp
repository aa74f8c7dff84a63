#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexboc/time_fs.hpp"

namespace flexboc {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Signal plan. Defaults follow the 70 MHz IF / 10 MHz sub-carrier /
// 125 kchip/s / 125-chip plan with one data bit per 1 ms code epoch.
struct FlexBocConfig {
    double f_if = 70e6;        // IF carrier, Hz
    double f_sc = 10e6;        // square sub-carrier, Hz
    double chip_rate = 125e3;  // PN chip rate, Hz
    int code_len = 125;        // chips per code epoch
    double data_rate = 1000;   // bits/s, one bit per code epoch
    double sample_rate = 280e6;
    double amplitude = 1.0;

    // Derived integer grid for one code epoch. All synthesis is indexed
    // off these so epoch boundaries land on exact sample positions.
    double epoch_period() const { return code_len / chip_rate; }
    std::int64_t samples_per_epoch() const;
    std::int64_t carrier_cycles_per_epoch() const;
    std::int64_t subcarrier_half_periods_per_epoch() const;

    void validate() const;  // throws ConfigError
};

struct PnCode {
    std::vector<int> chips;  // +1 / -1
    int length() const { return static_cast<int>(chips.size()); }
};

struct Waveform {
    std::vector<double> samples;
    double sample_rate = 0.0;
    fs_t t0_fs = 0;  // transmit timestamp, emitting site's local timescale

    double duration() const {
        return samples.empty() ? 0.0 : static_cast<double>(samples.size()) / sample_rate;
    }
};

enum class SiteId : std::uint8_t { A = 0, B = 1 };

// One exchanged measurement. Serialized as 4-bit site + 28-bit epoch,
// 48-bit signed payload, CRC-16/CCITT over the preceding 10 bytes.
struct DataFrame {
    SiteId site_id = SiteId::A;
    std::uint32_t epoch_index = 0;  // 28 usable bits
    std::int64_t payload_ps = 0;    // |payload| < 2^47

    bool operator==(const DataFrame&) const = default;
};

constexpr int kFrameBits = 96;

std::uint16_t crc16_ccitt(const std::uint8_t* data, std::size_t n);

PnCode gen_pn_code(const FlexBocConfig& config, std::uint64_t seed);

// Composite FlexBOC waveform: data * chips * square sub-carrier * IF
// carrier, all phase-aligned to t0. `frames` may be empty (no data
// modulation, all bits +1); otherwise it must cover the duration.
Waveform synth_flexboc(const FlexBocConfig& config, const PnCode& code,
                       const std::vector<DataFrame>& frames, fs_t t0_fs,
                       double duration);

// Reference wideband BPSK signal (10 Mchip/s by default), for spectrum
// and autocorrelation comparisons.
Waveform synth_bpsk(double chip_rate, double f_if, double sample_rate,
                    fs_t t0_fs, double duration, std::uint64_t seed);

std::vector<std::uint8_t> encode_data_frame(const DataFrame& frame);  // 96 bits of 0/1
DataFrame decode_data_frame(const std::vector<std::uint8_t>& bits);   // throws FrameError

struct FrameError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flattened, differentially encoded channel bit stream: one ±1 symbol
// per code epoch. Symbol 0 is the reference (+1).
std::vector<int> frames_to_symbols(const std::vector<DataFrame>& frames, std::int64_t n_epochs);
std::vector<DataFrame> symbols_to_frames(const std::vector<int>& symbols, std::size_t* crc_failures = nullptr);

// Carrier-stripped composite (d*c*sq) sampled on the same grid, used by
// autocorrelation analysis.
std::vector<double> flexboc_baseband(const FlexBocConfig& config, const PnCode& code,
                                     double duration);
std::vector<double> bpsk_baseband(double chip_rate, double sample_rate, double duration,
                                  std::uint64_t seed);

} // namespace flexboc
