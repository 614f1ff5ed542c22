#include "naf/dsp/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "naf/core/binary_io.hpp"
#include "naf/core/error.hpp"

namespace naf::dsp {

namespace {

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

Audio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorKind::decode, path.string() + " is not a RIFF/WAVE file");
  }
  int channels = 0;
  int bits = 0;
  Audio audio;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::size_t size = binary::get_u32(chunk + 4);
    if (pos + 8 + size > bytes.size()) throw Error(ErrorKind::decode, "truncated WAV chunk in " + path.string());
    if (std::memcmp(chunk, "fmt ", 4) == 0 && size >= 16) {
      const int format = get_u16(chunk + 8);
      channels = get_u16(chunk + 10);
      audio.sample_rate = static_cast<int>(binary::get_u32(chunk + 12));
      bits = get_u16(chunk + 22);
      if (format != 1 || bits != 16) throw Error(ErrorKind::decode, "only 16-bit PCM WAV is supported");
      if (channels != 1 && channels != 2) throw Error(ErrorKind::decode, "only mono or stereo WAV is supported");
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = size;
    }
    pos += 8 + size + (size & 1);
  }
  if (channels == 0 || data == nullptr) throw Error(ErrorKind::decode, "WAV file lacks fmt or data chunk");

  const std::size_t frames = data_size / (2 * static_cast<std::size_t>(channels));
  audio.channels.assign(static_cast<std::size_t>(channels), std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < channels; ++c) {
      const auto raw = static_cast<std::int16_t>(get_u16(data + 2 * (i * channels + c)));
      audio.channels[static_cast<std::size_t>(c)][i] = raw / 32768.0;
    }
  }
  return audio;
}

WavWriteReport write_wav(const std::filesystem::path& path, const Audio& audio) {
  const auto channels = audio.channels.size();
  if (channels != 1 && channels != 2) fail(ErrorKind::invalid_input, "write_wav: need 1 or 2 channels");
  const std::size_t frames = audio.frames();
  for (const auto& ch : audio.channels) {
    if (ch.size() != frames) fail(ErrorKind::invalid_input, "write_wav: channel lengths differ");
  }
  WavWriteReport report;
  const std::size_t data_bytes = frames * channels * 2;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  binary::put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  binary::put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, static_cast<std::uint16_t>(channels));
  binary::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  binary::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate * channels * 2));
  put_u16(out, static_cast<std::uint16_t>(channels * 2));
  put_u16(out, 16);
  put_tag(out, "data");
  binary::put_u32(out, static_cast<std::uint32_t>(data_bytes));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = audio.channels[c][i];
      report.peak = std::max(report.peak, std::abs(v));
      long q = std::lround(v * 32768.0);
      if (q > 32767 || q < -32768) {
        ++report.clipped_samples;
        q = std::clamp(q, -32768L, 32767L);
      }
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  }
  std::ofstream os(path, std::ios::binary);
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) fail(ErrorKind::io, "failed writing " + path.string());
  return report;
}

}  // namespace naf::dsp
