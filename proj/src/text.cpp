#include "coop/text.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <string>

#include "coop/error.hpp"

namespace coop {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BehindCamera: return "BehindCamera";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::NegativeDepth: return "NegativeDepth";
    case ErrorKind::MissingPrediction: return "MissingPrediction";
    case ErrorKind::PlacementFailure: return "PlacementFailure";
    case ErrorKind::NumericalOverflow: return "NumericalOverflow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::LabelInconsistency: return "LabelInconsistency";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::IndexMismatch: return "IndexMismatch";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

namespace text {

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view token) {
  // strtod rather than from_chars: libstdc++ 11 lacks floating from_chars.
  const std::string s(token);
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    fail(ErrorKind::InvalidArgument, "not a number: '" + s + "'");
  }
  return value;
}

long long parse_int(std::string_view token) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail(ErrorKind::InvalidArgument, "not an integer: '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace text
}  // namespace coop
