#pragma once

// File formats and deterministic noise.
//
// CSV: UTF-8, LF line endings, header "t,<column>", comma separated, every
// number printed with 17 significant digits so that read -> write reproduces
// the file byte for byte.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bjj/estimation.hpp"

namespace bjj::io {

/// "%.17g" formatting.
std::string format_double(double x);

struct Series {
  std::string column;  ///< "phi" or "n"
  std::vector<estimation::Sample> samples;
};

std::string to_csv(const Series& s);
Series parse_csv(std::string_view text);

/// Throws ConfigError on I/O or parse failures.
void write_csv(const std::filesystem::path& path, const Series& s);
Series read_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// SplitMix64 generator: 64-bit state, state += 0x9E3779B97F4A7C15 per draw.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform on (0, 1): top 53 bits, offset by half an ulp so 0 never occurs.
  double uniform();
  /// Standard normal by the Box-Muller transform; pairs are cached.
  double normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bjj::io
