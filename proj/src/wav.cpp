#include "uasep/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <sstream>

#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"

namespace uasep {

namespace {

// Little-endian scalar helpers; the host is little-endian but keep the byte
// assembly explicit so the file layout is unambiguous.
std::uint32_t rd_u32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void wr_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

TimeSignal read_wav(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  const auto* p = reinterpret_cast<const std::uint8_t*>(raw.data());
  if (raw.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file: " + path.string());

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= raw.size()) {
    const std::uint32_t chunk_len = rd_u32(p + off + 4);
    const std::uint8_t* body = p + off + 8;
    if (off + 8 + chunk_len > raw.size())
      throw FormatError("truncated chunk in " + path.string());
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError("short fmt chunk in " + path.string());
      format = rd_u16(body);
      channels = rd_u16(body + 2);
      rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  if (!rate || !channels) throw FormatError("missing fmt chunk in " + path.string());
  if (!data) throw FormatError("missing data chunk in " + path.string());

  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32)
    throw FormatError("unsupported wav encoding (want PCM16 or float32): " + path.string());
  if (channels > 1)
    std::cerr << "warning: " << path.string() << " has " << channels
              << " channels, using channel 0\n";

  const std::size_t bytes_per = bits / 8;
  const std::size_t frames = data_len / (bytes_per * channels);
  TimeSignal x;
  x.sample_rate = rate;
  x.samples.resize(frames);
  for (std::size_t n = 0; n < frames; ++n) {
    const std::uint8_t* s = data + n * bytes_per * channels;  // channel 0
    if (pcm16) {
      const auto v = static_cast<std::int16_t>(rd_u16(s));
      x.samples[n] = static_cast<double>(v) / 32768.0;
    } else {
      float f;
      std::memcpy(&f, s, 4);
      x.samples[n] = f;
    }
  }
  return x;
}

void write_wav(const std::filesystem::path& path, const TimeSignal& x, int bit_depth) {
  if (x.sample_rate == 0) throw ParamError("wav: sample_rate must be positive");
  if (bit_depth != 16 && bit_depth != 32)
    throw ParamError("wav: bit depth must be 16 or 32");

  std::string body;
  if (bit_depth == 16) {
    body.reserve(x.size() * 2);
    for (double v : x.samples) {
      const double c = std::clamp(v, -1.0, 1.0);
      // symmetric with the reader's /32768; +1.0 saturates at the top code
      const long q = std::clamp(std::lround(c * 32768.0), -32768L, 32767L);
      wr_u16(body, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  } else {
    body.reserve(x.size() * 4);
    for (double v : x.samples) {
      const float f = static_cast<float>(v);
      char b[4];
      std::memcpy(b, &f, 4);
      body.append(b, 4);
    }
  }

  const std::uint16_t format = bit_depth == 16 ? 1 : 3;
  const std::uint16_t block = static_cast<std::uint16_t>(bit_depth / 8);
  std::string fact;
  if (format == 3) {
    fact = "fact";
    wr_u32(fact, 4);
    wr_u32(fact, static_cast<std::uint32_t>(x.size()));
  }

  std::string out;
  out += "RIFF";
  wr_u32(out, static_cast<std::uint32_t>(4 + 24 + fact.size() + 8 + body.size()));
  out += "WAVEfmt ";
  wr_u32(out, 16);
  wr_u16(out, format);
  wr_u16(out, 1);  // mono
  wr_u32(out, x.sample_rate);
  wr_u32(out, x.sample_rate * block);
  wr_u16(out, block);
  wr_u16(out, static_cast<std::uint16_t>(bit_depth));
  out += fact;
  out += "data";
  wr_u32(out, static_cast<std::uint32_t>(body.size()));
  out += body;
  if (body.size() & 1) out.push_back('\0');
  atomic_write(path, out);
}

}  // namespace uasep
