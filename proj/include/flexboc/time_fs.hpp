#pragma once

#include <cstdint>
#include <cmath>

namespace flexboc {

// Time intervals and timestamps are carried as integer femtoseconds to
// keep ~100 ns quantities exact at sub-picosecond resolution. Intervals
// fit in 64 bits (9.2e18 fs ~ 9200 s); absolute epoch times over a 15 h
// campaign use 128 bits.
using fs_t = std::int64_t;
using fs_wide_t = __int128;

constexpr fs_t kFsPerPs = 1000;
constexpr fs_t kFsPerNs = 1000000;
constexpr double kFsPerSec = 1e15;

inline fs_t fs_from_ps(double ps) { return static_cast<fs_t>(std::llround(ps * 1e3)); }
inline fs_t fs_from_ns(double ns) { return static_cast<fs_t>(std::llround(ns * 1e6)); }
inline fs_t fs_from_sec(double s) { return static_cast<fs_t>(std::llround(s * 1e15)); }
inline double fs_to_ps(fs_t v) { return static_cast<double>(v) * 1e-3; }
inline double fs_to_sec(fs_t v) { return static_cast<double>(v) * 1e-15; }

// Signed halving with round-half-away-from-zero; exact when v is even.
inline fs_t fs_half(fs_t v) {
    if (v % 2 == 0) return v / 2;
    return v > 0 ? (v + 1) / 2 : (v - 1) / 2;
}

} // namespace flexboc
