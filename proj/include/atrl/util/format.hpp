#ifndef ATRL_UTIL_FORMAT_HPP_
#define ATRL_UTIL_FORMAT_HPP_

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "atrl/util/errors.hpp"

namespace atrl {

// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& field) {
  double x = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError(field, "expected a number, got '" + std::string(text) + "'");
  }
  return x;
}

template <typename Int>
Int parse_int(std::string_view text, const std::string& field) {
  Int x{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError(field, "expected an integer, got '" + std::string(text) + "'");
  }
  return x;
}

}  // namespace atrl

#endif  // ATRL_UTIL_FORMAT_HPP_
