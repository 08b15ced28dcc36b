#ifndef UASEP_WAV_HPP
#define UASEP_WAV_HPP

#include <filesystem>

#include "uasep/signal.hpp"

namespace uasep {

// Reads a PCM 16-bit or IEEE-float 32-bit WAV. Multi-channel files contribute
// channel 0 only (a warning goes to stderr).
TimeSignal read_wav(const std::filesystem::path& path);

// bit_depth 16 writes PCM s16le, 32 writes IEEE float. Samples are clamped to
// [-1, 1] for the integer encoding.
void write_wav(const std::filesystem::path& path, const TimeSignal& x, int bit_depth = 16);

}  // namespace uasep

#endif  // UASEP_WAV_HPP
