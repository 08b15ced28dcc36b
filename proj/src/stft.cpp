#include "uasep/stft.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "fft_util.hpp"
#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"

namespace uasep {

const char* window_name(WindowKind w) {
  switch (w) {
    case WindowKind::hann: return "hann";
    case WindowKind::sqrt_hann: return "sqrt_hann";
    case WindowKind::hamming: return "hamming";
    case WindowKind::rect: return "rect";
  }
  throw ParamError("unknown window kind");
}

WindowKind window_from_name(const std::string& name) {
  if (name == "hann") return WindowKind::hann;
  if (name == "sqrt_hann") return WindowKind::sqrt_hann;
  if (name == "hamming") return WindowKind::hamming;
  if (name == "rect") return WindowKind::rect;
  throw ParamError("unknown window name: " + name);
}

std::size_t StftConfig::frame_len(std::uint32_t sample_rate) const {
  if (sample_rate == 0) throw ParamError("stft: sample_rate must be positive");
  auto n = static_cast<std::size_t>(std::llround(frame_ms * sample_rate / 1000.0));
  if (n == 0) throw ParamError("stft: frame length rounds to zero samples");
  return n;
}

std::size_t StftConfig::hop(std::uint32_t sample_rate) const {
  if (sample_rate == 0) throw ParamError("stft: sample_rate must be positive");
  auto h = static_cast<std::size_t>(std::llround(hop_ms * sample_rate / 1000.0));
  if (h == 0) throw ParamError("stft: hop rounds to zero samples");
  if (h > frame_len(sample_rate)) throw ParamError("stft: hop exceeds frame length");
  return h;
}

StftConfig StftConfig::from_samples(std::size_t frame, std::size_t hop,
                                    std::uint32_t sample_rate, WindowKind window) {
  StftConfig cfg;
  cfg.frame_ms = 1000.0 * static_cast<double>(frame) / sample_rate;
  cfg.hop_ms = 1000.0 * static_cast<double>(hop) / sample_rate;
  cfg.window = window;
  // the ms values must round back to the requested sample counts
  if (cfg.frame_len(sample_rate) != frame || cfg.hop(sample_rate) != hop)
    throw ParamError("stft: sample counts not representable at this rate");
  return cfg;
}

std::vector<double> make_window(WindowKind kind, std::size_t length) {
  if (length == 0) throw ParamError("window length must be positive");
  std::vector<double> w(length, 1.0);
  const double n = static_cast<double>(length);  // periodic convention
  switch (kind) {
    case WindowKind::rect:
      break;
    case WindowKind::hann:
      for (std::size_t i = 0; i < length; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
      break;
    case WindowKind::sqrt_hann:
      for (std::size_t i = 0; i < length; ++i)
        w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n));
      break;
    case WindowKind::hamming:
      for (std::size_t i = 0; i < length; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / n);
      break;
  }
  return w;
}

namespace {

// Synthesis window per kind: sqrt_hann resynthesizes through sqrt_hann (the
// analysis/synthesis product is then plain hann); the others synthesize
// unwindowed and rely on the analysis window alone overlap-adding to a
// constant.
std::vector<double> synthesis_window(WindowKind kind, std::size_t length) {
  if (kind == WindowKind::sqrt_hann) return make_window(WindowKind::sqrt_hann, length);
  return std::vector<double>(length, 1.0);
}

}  // namespace

Spectrogram stft(const TimeSignal& x, const StftConfig& cfg) {
  if (x.samples.empty()) throw ParamError("stft: empty signal");
  const std::size_t frame = cfg.frame_len(x.sample_rate);
  const std::size_t hop = cfg.hop(x.sample_rate);

  std::size_t T = 1;
  if (x.size() > frame)
    T = 1 + (x.size() - frame + hop - 1) / hop;  // last frame zero-padded

  Spectrogram S;
  S.num_frames = T;
  S.frame_len = frame;
  S.hop = hop;
  S.sample_rate = x.sample_rate;
  S.window = cfg.window;

  detail::RealDft dft(frame);
  S.num_bins = dft.bins();
  S.bins.resize(T * S.num_bins);

  const std::vector<double> win = make_window(cfg.window, frame);
  std::vector<double> buf(frame);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t n0 = t * hop;
    for (std::size_t i = 0; i < frame; ++i) {
      const std::size_t n = n0 + i;
      buf[i] = (n < x.size() ? x.samples[n] : 0.0) * win[i];
    }
    dft.forward(buf.data(), &S.bins[t * S.num_bins]);
  }
  return S;
}

TimeSignal istft(const Spectrogram& S) {
  if (S.num_frames == 0 || S.num_bins == 0) throw ParamError("istft: empty spectrogram");
  if (S.num_bins != S.frame_len / 2 + 1)
    throw ParamError("istft: bins inconsistent with frame length");
  if (S.hop == 0 || S.hop > S.frame_len) throw ParamError("istft: bad hop");

  const std::size_t frame = S.frame_len, hop = S.hop, T = S.num_frames;
  const std::size_t out_len = (T - 1) * hop + frame;

  const std::vector<double> wa = make_window(S.window, frame);
  const std::vector<double> ws = synthesis_window(S.window, frame);

  // overlap-add sum of the analysis*synthesis product at every output sample
  std::vector<double> ola(out_len, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < frame; ++i) ola[t * hop + i] += wa[i] * ws[i];

  // validity gate: the interior must be constant within 1%
  if (out_len > 2 * frame) {
    double lo = ola[frame], hi = ola[frame];
    for (std::size_t n = frame; n < out_len - frame; ++n) {
      lo = std::min(lo, ola[n]);
      hi = std::max(hi, ola[n]);
    }
    if (lo <= 0.0 || (hi - lo) > 0.01 * hi)
      throw ConfigError("istft: window/hop combination does not overlap-add to a "
                        "constant (worst deviation " +
                        fmt_double(hi > 0 ? (hi - lo) / hi : 1.0) + ")");
  }

  detail::RealDft dft(frame);
  std::vector<double> buf(frame);
  TimeSignal y;
  y.sample_rate = S.sample_rate;
  y.samples.assign(out_len, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    dft.inverse(&S.bins[t * S.num_bins], buf.data());
    for (std::size_t i = 0; i < frame; ++i)
      y.samples[t * hop + i] += buf[i] * ws[i];
  }

  // normalize by the actual overlap-add sum; in the exact-COLA case this is
  // the constant 0.5*frame/hop everywhere in the interior. The sum decays to
  // zero at the clip edges, where the frames of a modified (masked)
  // spectrogram need not agree with each other, so the division gain is
  // capped there: full-gain normalization would amplify the disagreement by
  // orders of magnitude, and the cap only tapers the outermost samples.
  const double floor = 0.1 * *std::max_element(ola.begin(), ola.end());
  for (std::size_t n = 0; n < out_len; ++n) y.samples[n] /= std::max(ola[n], floor);
  return y;
}

std::vector<double> log_magnitude(const Spectrogram& S, double floor_db) {
  std::vector<double> out(S.bins.size());
  for (std::size_t i = 0; i < S.bins.size(); ++i) {
    const double mag = std::abs(S.bins[i]);
    out[i] = mag > 0.0 ? std::max(20.0 * std::log10(mag), floor_db) : floor_db;
  }
  return out;
}

namespace {

constexpr char kSpecMagic[8] = {'U', 'A', 'S', 'P', 'E', 'C', '1', '\0'};

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_spectrogram(const std::filesystem::path& path, const Spectrogram& S) {
  std::string out(kSpecMagic, 7);
  put_u32(out, static_cast<std::uint32_t>(S.num_frames));
  put_u32(out, static_cast<std::uint32_t>(S.num_bins));
  put_u32(out, static_cast<std::uint32_t>(S.frame_len));
  put_u32(out, static_cast<std::uint32_t>(S.hop));
  put_u32(out, S.sample_rate);
  out.push_back(static_cast<char>(S.window));
  out.reserve(out.size() + S.bins.size() * 8);
  for (const auto& z : S.bins) {
    const float re = static_cast<float>(z.real()), im = static_cast<float>(z.imag());
    char b[8];
    std::memcpy(b, &re, 4);
    std::memcpy(b + 4, &im, 4);
    out.append(b, 8);
  }
  atomic_write(path, out);
}

Spectrogram read_spectrogram(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  const auto* p = reinterpret_cast<const std::uint8_t*>(raw.data());
  const std::size_t header = 7 + 5 * 4 + 1;
  if (raw.size() < header || std::memcmp(p, kSpecMagic, 7) != 0)
    throw FormatError("not a spectrogram dump: " + path.string());
  Spectrogram S;
  S.num_frames = get_u32(p + 7);
  S.num_bins = get_u32(p + 11);
  S.frame_len = get_u32(p + 15);
  S.hop = get_u32(p + 19);
  S.sample_rate = get_u32(p + 23);
  const std::uint8_t wk = p[27];
  if (wk > 3) throw FormatError("bad window kind in " + path.string());
  S.window = static_cast<WindowKind>(wk);
  const std::size_t count = S.num_frames * S.num_bins;
  if (raw.size() != header + count * 8)
    throw FormatError("spectrogram payload size mismatch in " + path.string());
  S.bins.resize(count);
  const std::uint8_t* q = p + header;
  for (std::size_t i = 0; i < count; ++i, q += 8) {
    float re, im;
    std::memcpy(&re, q, 4);
    std::memcpy(&im, q + 4, 4);
    S.bins[i] = {re, im};
  }
  return S;
}

void write_magnitude_csv(const std::filesystem::path& path, const Spectrogram& S) {
  std::ostringstream out;
  for (std::size_t t = 0; t < S.num_frames; ++t) {
    for (std::size_t f = 0; f < S.num_bins; ++f) {
      if (f) out << ",";
      out << fmt_double(std::abs(S.at(t, f)));
    }
    out << "\n";
  }
  atomic_write(path, out.str());
}

void write_spectrogram_pgm(const std::filesystem::path& path, const Spectrogram& S,
                           double range_db) {
  if (range_db <= 0) throw ParamError("pgm: range_db must be positive");
  double peak = 0.0;
  for (const auto& z : S.bins) peak = std::max(peak, std::abs(z));
  if (peak <= 0.0) peak = 1.0;
  std::vector<std::uint8_t> px(S.num_frames * S.num_bins, 0);
  for (std::size_t t = 0; t < S.num_frames; ++t)
    for (std::size_t f = 0; f < S.num_bins; ++f) {
      const double mag = std::abs(S.at(t, f));
      const double db = mag > 0 ? 20.0 * std::log10(mag / peak) : -range_db;
      const double v = std::clamp(1.0 + db / range_db, 0.0, 1.0);
      // highest frequency on top
      px[(S.num_bins - 1 - f) * S.num_frames + t] =
          static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  write_pgm(path, S.num_bins, S.num_frames, px);
}

}  // namespace uasep
