#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "naf/core/types.hpp"

namespace naf::baselines {

inline constexpr double kMuLaw = 255.0;

// Blob layout, little-endian:
//   "MULQ" | u32 signal count | u32 bit depth
//   per signal: u32 length | f32 scale | ceil(length * bits / 8) packed codes
// Codes are offset-binary with 2^(bits-1) - 1 levels on each side of zero.

/// Peak-normalized mu-law quantization of each signal. bits must be 4, 8
/// or 16 (invalid_config otherwise).
std::vector<std::uint8_t> codec_encode(const std::vector<std::vector<float>>& signals, int bits);

/// Inverse of codec_encode. Each code decodes to the amplitude midpoint of
/// its companded cell, clamped to the stored scale. Throws DecodeError on
/// malformed or truncated blobs.
std::vector<std::vector<float>> codec_decode(std::span<const std::uint8_t> blob);

/// Both channels of every record, in record order (left ear first).
std::vector<std::uint8_t> encode_records(std::span<const ImpulseResponseRecord> records, int bits);

/// Decoded copies of `originals` (poses and sample rates are taken from them).
std::vector<ImpulseResponseRecord> decode_records(std::span<const std::uint8_t> blob,
                                                  std::span<const ImpulseResponseRecord> originals);

/// Header bytes: magic, count and bit depth.
inline constexpr std::size_t kCodecHeaderBytes = 12;
/// Per-signal bytes before the packed codes.
inline constexpr std::size_t kCodecSignalHeaderBytes = 8;

}  // namespace naf::baselines
