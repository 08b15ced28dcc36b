#include "uasep/io_util.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "uasep/errors.hpp"

namespace uasep {

std::string fmt_double(double v) {
  char buf[64];
  // try increasing precision until the text round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  static std::random_device rd;
  std::uint64_t tag = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  auto name = path.filename().string() + ".tmp." + std::to_string(tag);
  return path.parent_path() / name;
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const void* data, std::size_t size) {
  auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) {
      std::filesystem::remove(tmp);
      throw FormatError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw FormatError("rename failed for " + path.string() + ": " + ec.message());
  }
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  atomic_write(path, content.data(), content.size());
}

void write_pgm(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
               const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != rows * cols)
    throw ParamError("pgm: pixel count does not match dimensions");
  std::ostringstream out;
  out << "P5\n" << cols << " " << rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  atomic_write(path, out.str());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace uasep
