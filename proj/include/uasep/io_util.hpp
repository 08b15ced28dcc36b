#ifndef UASEP_IO_UTIL_HPP
#define UASEP_IO_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace uasep {

// Formats a double with enough digits to round-trip (shortest of %.17g that
// re-parses exactly would be ideal; 17 significant digits is always enough).
std::string fmt_double(double v);

// Writes `content` to `path` atomically (temp file + rename).
void atomic_write(const std::filesystem::path& path, const std::string& content);
void atomic_write(const std::filesystem::path& path, const void* data, std::size_t size);

// 8-bit binary PGM (P5). `pixels` is rows*cols bytes, row-major, row 0 at top.
void write_pgm(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
               const std::vector<std::uint8_t>& pixels);

std::string read_file(const std::filesystem::path& path);

}  // namespace uasep

#endif  // UASEP_IO_UTIL_HPP
