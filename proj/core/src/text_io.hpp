#pragma once

// Helpers for the line-oriented model file formats.

#include <charconv>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "todsim/errors.hpp"

namespace todsim::detail {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("not an unsigned integer: '" + std::string(s) + "'");
  }
  return v;
}

// Views into `line`, which must outlive them.
inline std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of input");
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // Reads "<key> <value>" and returns value.
  std::string field(std::string_view key) {
    std::string line = next();
    if (line.size() <= key.size() || line.compare(0, key.size(), key) != 0 ||
        line[key.size()] != ' ') {
      fail("expected '" + std::string(key) + " ...'");
    }
    return line.substr(key.size() + 1);
  }

  void expect(std::string_view exact) {
    if (next() != exact) fail("expected '" + std::string(exact) + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidArgument(what_ + " line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string what_;
  int line_no_ = 0;
};

}  // namespace todsim::detail
