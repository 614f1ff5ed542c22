#include "naf/baselines/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "naf/core/binary_io.hpp"
#include "naf/core/dataset.hpp"
#include "naf/core/error.hpp"

namespace naf::baselines {

namespace {

constexpr char kMagic[4] = {'M', 'U', 'L', 'Q'};

double compress(double x) { return std::copysign(std::log1p(kMuLaw * std::abs(x)) / std::log1p(kMuLaw), x); }
double expand(double y) { return std::copysign(std::expm1(std::abs(y) * std::log1p(kMuLaw)) / kMuLaw, y); }

void check_bits(int bits) {
  if (bits != 4 && bits != 8 && bits != 16) {
    fail(ErrorKind::invalid_config, "codec bit depth must be 4, 8 or 16, got " + std::to_string(bits));
  }
}

std::size_t packed_bytes(std::size_t length, int bits) {
  return (length * static_cast<std::size_t>(bits) + 7) / 8;
}

}  // namespace

std::vector<std::uint8_t> codec_encode(const std::vector<std::vector<float>>& signals, int bits) {
  check_bits(bits);
  const int levels = (1 << (bits - 1)) - 1;
  const std::uint32_t offset = 1u << (bits - 1);
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  binary::put_u32(out, static_cast<std::uint32_t>(signals.size()));
  binary::put_u32(out, static_cast<std::uint32_t>(bits));
  for (const auto& s : signals) {
    float peak = 0.0f;
    for (float v : s) peak = std::max(peak, std::abs(v));
    binary::put_u32(out, static_cast<std::uint32_t>(s.size()));
    binary::put_f32(out, peak);
    const std::size_t start = out.size();
    out.resize(start + packed_bytes(s.size(), bits), 0);
    std::uint8_t* dst = out.data() + start;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = peak > 0.0f ? static_cast<double>(s[i]) / peak : 0.0;
      const auto q = static_cast<int>(std::lround(compress(std::clamp(x, -1.0, 1.0)) * levels));
      const std::uint32_t code = static_cast<std::uint32_t>(q + static_cast<int>(offset));
      if (bits == 16) {
        dst[2 * i] = static_cast<std::uint8_t>(code & 0xff);
        dst[2 * i + 1] = static_cast<std::uint8_t>(code >> 8);
      } else if (bits == 8) {
        dst[i] = static_cast<std::uint8_t>(code);
      } else {
        dst[i / 2] |= static_cast<std::uint8_t>(code << (4 * (i % 2)));
      }
    }
  }
  return out;
}

std::vector<std::vector<float>> codec_decode(std::span<const std::uint8_t> blob) {
  if (blob.size() < kCodecHeaderBytes) throw DecodeError(DecodeFailure::truncated, "codec blob shorter than its header");
  if (std::memcmp(blob.data(), kMagic, 4) != 0) throw DecodeError(DecodeFailure::bad_magic, "not a codec blob (bad magic)");
  const std::size_t count = binary::get_u32(blob.data() + 4);
  const int bits = static_cast<int>(binary::get_u32(blob.data() + 8));
  if (bits != 4 && bits != 8 && bits != 16) {
    throw DecodeError(DecodeFailure::malformed_header, "codec blob declares unsupported bit depth " + std::to_string(bits));
  }
  const int levels = (1 << (bits - 1)) - 1;
  const int offset = 1 << (bits - 1);

  // Midpoint of each code's cell in the amplitude domain.
  std::vector<double> table(static_cast<std::size_t>(2 * levels + 1));
  for (int q = -levels; q <= levels; ++q) {
    double v = 0.0;
    if (q != 0) {
      const double lo = expand(std::max((std::abs(q) - 0.5) / levels, 0.0));
      const double hi = expand(std::min((std::abs(q) + 0.5) / levels, 1.0));
      v = std::copysign(std::min(0.5 * (lo + hi), 1.0), static_cast<double>(q));
    }
    table[static_cast<std::size_t>(q + levels)] = v;
  }

  std::vector<std::vector<float>> out;
  out.reserve(count);
  std::size_t pos = kCodecHeaderBytes;
  for (std::size_t k = 0; k < count; ++k) {
    if (blob.size() - pos < kCodecSignalHeaderBytes) {
      throw DecodeError(DecodeFailure::truncated, "codec blob ends inside signal " + std::to_string(k));
    }
    const std::size_t length = binary::get_u32(blob.data() + pos);
    const float scale = binary::get_f32(blob.data() + pos + 4);
    pos += kCodecSignalHeaderBytes;
    const std::size_t nbytes = packed_bytes(length, bits);
    if (blob.size() - pos < nbytes) {
      throw DecodeError(DecodeFailure::truncated, "codec blob ends inside signal " + std::to_string(k));
    }
    const std::uint8_t* src = blob.data() + pos;
    std::vector<float> s(length);
    for (std::size_t i = 0; i < length; ++i) {
      int code = 0;
      if (bits == 16) {
        code = src[2 * i] | (src[2 * i + 1] << 8);
      } else if (bits == 8) {
        code = src[i];
      } else {
        code = (src[i / 2] >> (4 * (i % 2))) & 0xf;
      }
      const int q = std::clamp(code - offset, -levels, levels);
      s[i] = static_cast<float>(scale * table[static_cast<std::size_t>(q + levels)]);
    }
    pos += nbytes;
    out.push_back(std::move(s));
  }
  if (pos != blob.size()) throw DecodeError(DecodeFailure::malformed_header, "trailing bytes after codec payload");
  return out;
}

std::vector<std::uint8_t> encode_records(std::span<const ImpulseResponseRecord> records, int bits) {
  std::vector<std::vector<float>> signals;
  signals.reserve(2 * records.size());
  for (const auto& r : records) {
    signals.push_back(r.channels[0]);
    signals.push_back(r.channels[1]);
  }
  return codec_encode(signals, bits);
}

std::vector<ImpulseResponseRecord> decode_records(std::span<const std::uint8_t> blob,
                                                  std::span<const ImpulseResponseRecord> originals) {
  auto signals = codec_decode(blob);
  if (signals.size() != 2 * originals.size()) {
    fail(ErrorKind::invalid_input, "codec blob holds " + std::to_string(signals.size()) + " signals for " +
                                       std::to_string(originals.size()) + " binaural records");
  }
  std::vector<ImpulseResponseRecord> out(originals.size());
  for (std::size_t i = 0; i < originals.size(); ++i) {
    out[i].pose = originals[i].pose;
    out[i].sample_rate = originals[i].sample_rate;
    out[i].channels[0] = std::move(signals[2 * i]);
    out[i].channels[1] = std::move(signals[2 * i + 1]);
  }
  return out;
}

}  // namespace naf::baselines
