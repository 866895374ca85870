#pragma once

#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace coop::text {

// Round-trip exact decimal form (17 significant digits).
inline std::string exact(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

// Fixed-precision form for human-facing tables.
inline std::string fixed(double value, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::vector<std::string> split_whitespace(std::string_view line);

// Parses the whole token as a double or int; throws Error(kind_on_failure).
double parse_double(std::string_view token);
long long parse_int(std::string_view token);

}  // namespace coop::text
