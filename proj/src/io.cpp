#include "bjj/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bjj/errors.hpp"

namespace bjj::io {

namespace {

double parse_number(std::string_view field, std::size_t line) {
  // from_chars accepts no leading '+' or whitespace; trim whitespace only.
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ConfigError("CSV line " + std::to_string(line) + ": invalid number '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string to_csv(const Series& s) {
  std::string out = "t," + s.column + "\n";
  for (const auto& p : s.samples) {
    out += format_double(p.t);
    out += ',';
    out += format_double(p.value);
    out += '\n';
  }
  return out;
}

Series parse_csv(std::string_view text) {
  Series s;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      throw ConfigError("CSV line " + std::to_string(line_no) + ": expected exactly two columns");
    }
    if (header) {
      if (line.substr(0, comma) != "t") throw ConfigError("CSV header must start with 't'");
      s.column = std::string(line.substr(comma + 1));
      if (s.column != "phi" && s.column != "n") {
        throw ConfigError("CSV header column must be 'phi' or 'n', got '" + s.column + "'");
      }
      header = false;
      continue;
    }
    s.samples.push_back({parse_number(line.substr(0, comma), line_no),
                         parse_number(line.substr(comma + 1), line_no)});
  }
  if (header) throw ConfigError("CSV file is empty");
  return s;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open '" + path.string() + "' for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_csv(const std::filesystem::path& path, const Series& s) { write_text(path, to_csv(s)); }

Series read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_text(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double SplitMix64::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

}  // namespace bjj::io
