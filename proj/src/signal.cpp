#include "flexboc/signal.hpp"

#include <cmath>
#include <cstring>

#include "flexboc/rng.hpp"

namespace flexboc {

namespace {

std::int64_t round_to_int(double v) { return static_cast<std::int64_t>(std::llround(v)); }

bool near_integer(double v, double tol = 1e-6) {
    return std::abs(v - std::llround(v)) < tol;
}

} // namespace

std::int64_t FlexBocConfig::samples_per_epoch() const {
    return round_to_int(sample_rate * epoch_period());
}

std::int64_t FlexBocConfig::carrier_cycles_per_epoch() const {
    return round_to_int(f_if * epoch_period());
}

std::int64_t FlexBocConfig::subcarrier_half_periods_per_epoch() const {
    return round_to_int(2.0 * f_sc * epoch_period());
}

void FlexBocConfig::validate() const {
    if (code_len <= 0) throw ConfigError("code_len must be positive");
    if (chip_rate <= 0) throw ConfigError("chip_rate must be positive");
    if (f_if <= 0 || f_sc <= 0) throw ConfigError("carrier frequencies must be positive");
    if (sample_rate < 4.0 * f_if)
        throw ConfigError("sample_rate must be at least 4 * f_if");
    if (!near_integer(f_sc / chip_rate))
        throw ConfigError("f_sc must be an integer multiple of chip_rate");
    const double ep = epoch_period();
    if (!near_integer(sample_rate * ep))
        throw ConfigError("sample_rate * epoch period must be an integer sample count");
    if (!near_integer(f_if * ep))
        throw ConfigError("f_if must complete whole cycles per code epoch");
    if (data_rate <= 0) throw ConfigError("data_rate must be positive");
    if (!near_integer(data_rate * ep) || round_to_int(data_rate * ep) != 1)
        throw ConfigError("data_rate must be one bit per code epoch");
    if (amplitude <= 0) throw ConfigError("amplitude must be positive");
}

PnCode gen_pn_code(const FlexBocConfig& config, std::uint64_t seed) {
    if (config.code_len <= 0) throw ConfigError("code_len must be positive");
    // 7-stage maximal LFSR, x^7 + x^6 + 1, truncated from its 127-chip
    // period down to code_len. The seed selects the (nonzero) start state,
    // i.e. a cyclic shift of the underlying m-sequence.
    std::uint32_t state = static_cast<std::uint32_t>(seed % 127u) + 1u;
    PnCode code;
    code.chips.reserve(config.code_len);
    for (int i = 0; i < config.code_len; ++i) {
        const int bit = state & 1u;
        code.chips.push_back(1 - 2 * bit);
        const std::uint32_t fb = ((state >> 0) ^ (state >> 1)) & 1u;  // taps 7,6
        state = (state >> 1) | (fb << 6);
    }
    return code;
}

std::uint16_t crc16_ccitt(const std::uint8_t* data, std::size_t n) {
    std::uint16_t crc = 0xFFFF;
    for (std::size_t i = 0; i < n; ++i) {
        crc ^= static_cast<std::uint16_t>(data[i]) << 8;
        for (int b = 0; b < 8; ++b)
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(crc << 1);
    }
    return crc;
}

std::vector<std::uint8_t> encode_data_frame(const DataFrame& frame) {
    if (frame.epoch_index >= (1u << 28))
        throw std::invalid_argument("epoch_index exceeds 28 bits");
    const std::int64_t lim = std::int64_t{1} << 47;
    if (frame.payload_ps <= -lim || frame.payload_ps >= lim)
        throw std::invalid_argument("payload_ps exceeds 48-bit signed range");

    std::uint8_t bytes[12] = {};
    const std::uint32_t head =
        (static_cast<std::uint32_t>(frame.site_id) << 28) | frame.epoch_index;
    bytes[0] = static_cast<std::uint8_t>(head >> 24);
    bytes[1] = static_cast<std::uint8_t>(head >> 16);
    bytes[2] = static_cast<std::uint8_t>(head >> 8);
    bytes[3] = static_cast<std::uint8_t>(head);
    const std::uint64_t pay = static_cast<std::uint64_t>(frame.payload_ps) & ((std::uint64_t{1} << 48) - 1);
    for (int i = 0; i < 6; ++i)
        bytes[4 + i] = static_cast<std::uint8_t>(pay >> (40 - 8 * i));
    const std::uint16_t crc = crc16_ccitt(bytes, 10);
    bytes[10] = static_cast<std::uint8_t>(crc >> 8);
    bytes[11] = static_cast<std::uint8_t>(crc);

    std::vector<std::uint8_t> bits(kFrameBits);
    for (int i = 0; i < kFrameBits; ++i)
        bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
    return bits;
}

DataFrame decode_data_frame(const std::vector<std::uint8_t>& bits) {
    if (bits.size() != kFrameBits) throw FrameError("frame must be 96 bits");
    std::uint8_t bytes[12] = {};
    for (int i = 0; i < kFrameBits; ++i)
        if (bits[i]) bytes[i / 8] |= 1u << (7 - i % 8);
    const std::uint16_t crc = crc16_ccitt(bytes, 10);
    const std::uint16_t got = (static_cast<std::uint16_t>(bytes[10]) << 8) | bytes[11];
    if (crc != got) throw FrameError("frame checksum mismatch");

    DataFrame f;
    const std::uint32_t head = (static_cast<std::uint32_t>(bytes[0]) << 24) |
                               (static_cast<std::uint32_t>(bytes[1]) << 16) |
                               (static_cast<std::uint32_t>(bytes[2]) << 8) | bytes[3];
    f.site_id = static_cast<SiteId>((head >> 28) & 1u);
    f.epoch_index = head & ((1u << 28) - 1);
    std::uint64_t pay = 0;
    for (int i = 0; i < 6; ++i)
        pay = (pay << 8) | bytes[4 + i];
    if (pay & (std::uint64_t{1} << 47))
        pay |= ~((std::uint64_t{1} << 48) - 1);  // sign-extend
    f.payload_ps = static_cast<std::int64_t>(pay);
    return f;
}

std::vector<int> frames_to_symbols(const std::vector<DataFrame>& frames, std::int64_t n_epochs) {
    std::vector<std::uint8_t> bits;
    for (const auto& f : frames) {
        auto fb = encode_data_frame(f);
        bits.insert(bits.end(), fb.begin(), fb.end());
    }
    if (static_cast<std::int64_t>(bits.size()) + 1 > n_epochs)
        throw std::invalid_argument("frames do not fit in the waveform duration");
    // epoch 0 carries the differential reference; idle epochs pad with 0 bits
    bits.resize(n_epochs - 1, 0);
    std::vector<int> symbols(n_epochs);
    std::uint8_t acc = 0;
    symbols[0] = 1;
    for (std::int64_t k = 1; k < n_epochs; ++k) {
        acc ^= bits[k - 1];
        symbols[k] = acc ? -1 : 1;
    }
    return symbols;
}

std::vector<DataFrame> symbols_to_frames(const std::vector<int>& symbols, std::size_t* crc_failures) {
    std::vector<DataFrame> frames;
    if (crc_failures) *crc_failures = 0;
    if (symbols.size() < 2) return frames;
    std::vector<std::uint8_t> bits(symbols.size() - 1);
    for (std::size_t k = 1; k < symbols.size(); ++k)
        bits[k - 1] = (symbols[k] != symbols[k - 1]) ? 1 : 0;
    const std::size_t n_groups = bits.size() / kFrameBits;
    for (std::size_t g = 0; g < n_groups; ++g) {
        std::vector<std::uint8_t> group(bits.begin() + g * kFrameBits,
                                        bits.begin() + (g + 1) * kFrameBits);
        bool all_zero = true;
        for (auto b : group)
            if (b) { all_zero = false; break; }
        if (all_zero) continue;  // idle padding
        try {
            frames.push_back(decode_data_frame(group));
        } catch (const FrameError&) {
            if (crc_failures) ++*crc_failures;
        }
    }
    return frames;
}

namespace {

// Integer-grid synthesis over whole epochs. All component boundaries are
// exact rationals of the per-epoch sample count, so epoch boundaries fall
// on t0 + k * epoch_period with no accumulated phase error.
struct EpochGrid {
    std::int64_t spe;     // samples per epoch
    std::int64_t cycles;  // carrier cycles per epoch
    std::int64_t halves;  // sub-carrier half periods per epoch
    int code_len;
};

inline double carrier_sample(const EpochGrid& g, std::int64_t n) {
    const std::int64_t num = (n * g.cycles) % g.spe;
    return std::cos(2.0 * M_PI * static_cast<double>(num) / static_cast<double>(g.spe));
}

// Boundary samples are zero: every component transition (chip, data,
// epoch) coincides with a sub-carrier half-period boundary, and sampling
// exactly on a transition must not bias the fundamental's phase.
inline int subcarrier_sign(const EpochGrid& g, std::int64_t n) {
    const std::int64_t num = n * g.halves;
    if (num % g.spe == 0) return 0;
    return ((num / g.spe) & 1) ? -1 : 1;
}

inline int chip_index(const EpochGrid& g, std::int64_t n) {
    return static_cast<int>((n * g.code_len) / g.spe);
}

} // namespace

Waveform synth_flexboc(const FlexBocConfig& config, const PnCode& code,
                       const std::vector<DataFrame>& frames, fs_t t0_fs,
                       double duration) {
    config.validate();
    if (code.length() != config.code_len)
        throw std::invalid_argument("code length does not match config");
    const double ep = config.epoch_period();
    const double n_ep_d = duration / ep;
    if (std::abs(n_ep_d - std::llround(n_ep_d)) > 1e-9 || duration <= 0)
        throw std::invalid_argument("duration must be a positive whole number of code epochs");
    const std::int64_t n_epochs = std::llround(n_ep_d);

    std::vector<int> symbols;
    if (!frames.empty())
        symbols = frames_to_symbols(frames, n_epochs);

    const EpochGrid g{config.samples_per_epoch(), config.carrier_cycles_per_epoch(),
                      config.subcarrier_half_periods_per_epoch(), config.code_len};
    Waveform w;
    w.sample_rate = config.sample_rate;
    w.t0_fs = t0_fs;
    w.samples.resize(static_cast<std::size_t>(n_epochs * g.spe));
    std::size_t out = 0;
    for (std::int64_t k = 0; k < n_epochs; ++k) {
        const double d = symbols.empty() ? 1.0 : static_cast<double>(symbols[k]);
        const double scale = config.amplitude * d;
        for (std::int64_t n = 0; n < g.spe; ++n, ++out) {
            const double c = static_cast<double>(code.chips[chip_index(g, n)]);
            const double sq = static_cast<double>(subcarrier_sign(g, n));
            w.samples[out] = scale * c * sq * carrier_sample(g, n);
        }
    }
    return w;
}

Waveform synth_bpsk(double chip_rate, double f_if, double sample_rate,
                    fs_t t0_fs, double duration, std::uint64_t seed) {
    if (chip_rate <= 0 || f_if <= 0 || sample_rate < 4.0 * f_if || duration <= 0)
        throw std::invalid_argument("invalid BPSK parameters");
    const std::int64_t n_samples = std::llround(sample_rate * duration);
    const std::int64_t n_chips = std::llround(chip_rate * duration);
    Rng rng(seed);
    std::vector<int> chips(static_cast<std::size_t>(n_chips));
    for (auto& c : chips)
        c = (rng.next_u64() & 1u) ? 1 : -1;

    Waveform w;
    w.sample_rate = sample_rate;
    w.t0_fs = t0_fs;
    w.samples.resize(static_cast<std::size_t>(n_samples));
    for (std::int64_t n = 0; n < n_samples; ++n) {
        const std::int64_t ci = (n * n_chips) / n_samples;
        const double num = (n * std::llround(f_if * duration)) % n_samples;
        const double carrier = std::cos(2.0 * M_PI * num / static_cast<double>(n_samples));
        w.samples[static_cast<std::size_t>(n)] = chips[static_cast<std::size_t>(ci)] * carrier;
    }
    return w;
}

std::vector<double> flexboc_baseband(const FlexBocConfig& config, const PnCode& code,
                                     double duration) {
    config.validate();
    const std::int64_t n_epochs = std::llround(duration / config.epoch_period());
    const EpochGrid g{config.samples_per_epoch(), config.carrier_cycles_per_epoch(),
                      config.subcarrier_half_periods_per_epoch(), config.code_len};
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_epochs * g.spe));
    for (std::int64_t k = 0; k < n_epochs; ++k)
        for (std::int64_t n = 0; n < g.spe; ++n)
            out.push_back(code.chips[chip_index(g, n)] * subcarrier_sign(g, n));
    return out;
}

std::vector<double> bpsk_baseband(double chip_rate, double sample_rate, double duration,
                                  std::uint64_t seed) {
    const std::int64_t n_samples = std::llround(sample_rate * duration);
    const std::int64_t n_chips = std::llround(chip_rate * duration);
    Rng rng(seed);
    std::vector<int> chips(static_cast<std::size_t>(n_chips));
    for (auto& c : chips)
        c = (rng.next_u64() & 1u) ? 1 : -1;
    std::vector<double> out(static_cast<std::size_t>(n_samples));
    for (std::int64_t n = 0; n < n_samples; ++n)
        out[static_cast<std::size_t>(n)] = chips[static_cast<std::size_t>((n * n_chips) / n_samples)];
    return out;
}

} // namespace flexboc
