#include "geoflow/numeric.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <system_error>

namespace geoflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Syntax: return "SyntaxError";
    case ErrorCode::DeltaTooSmall: return "DeltaTooSmall";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::DuplicateRay: return "DuplicateRay";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::UnknownEdge: return "UnknownEdge";
    case ErrorCode::UnknownState: return "UnknownState";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::NotLattice: return "NotLattice";
    case ErrorCode::UnsupportedMode: return "UnsupportedMode";
    case ErrorCode::SingularCompactBlock: return "SingularCompactBlock";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::InadmissiblePath: return "InadmissiblePath";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string format_rational(const Rational& x) {
  const auto num = boost::multiprecision::numerator(x);
  const auto den = boost::multiprecision::denominator(x);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

namespace {

using boost::multiprecision::cpp_int;

// cpp_int reads a leading 0 as an octal prefix.
std::string decimal_digits(std::string_view s) {
  const auto first = s.find_first_not_of('0');
  return first == std::string_view::npos ? std::string("0") : std::string(s.substr(first));
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

cpp_int parse_integer(std::string_view s, const std::string& whole) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) {
    throw Error(ErrorCode::Syntax, "malformed number '" + whole + "'");
  }
  cpp_int v{decimal_digits(s)};
  return negative ? cpp_int(-v) : v;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::Syntax, "empty number");
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    const cpp_int num = parse_integer(std::string_view(text).substr(0, slash), text);
    const cpp_int den = parse_integer(std::string_view(text).substr(slash + 1), text);
    if (den == 0) throw Error(ErrorCode::Syntax, "zero denominator in '" + text + "'");
    return Rational(num, den);
  }

  std::string_view s(text);
  bool negative = false;
  if (s.front() == '-' || s.front() == '+') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long long exponent = 0;
  if (const auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = s.substr(e + 1);
    if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
    if (ec != std::errc() || ptr != exp_text.data() + exp_text.size() || exp_text.empty()) {
      throw Error(ErrorCode::Syntax, "malformed exponent in '" + text + "'");
    }
    s = s.substr(0, e);
  }
  std::string digits;
  if (const auto dot = s.find('.'); dot != std::string_view::npos) {
    const std::string_view int_part = s.substr(0, dot);
    const std::string_view frac_part = s.substr(dot + 1);
    if ((int_part.empty() && frac_part.empty()) || (!int_part.empty() && !all_digits(int_part)) ||
        (!frac_part.empty() && !all_digits(frac_part))) {
      throw Error(ErrorCode::Syntax, "malformed number '" + text + "'");
    }
    digits = std::string(int_part) + std::string(frac_part);
    exponent -= static_cast<long long>(frac_part.size());
  } else {
    if (!all_digits(s)) throw Error(ErrorCode::Syntax, "malformed number '" + text + "'");
    digits = std::string(s);
  }
  if (exponent > 4000 || exponent < -4000) {
    throw Error(ErrorCode::Syntax, "exponent out of range in '" + text + "'");
  }
  cpp_int num{decimal_digits(digits)};
  if (negative) num = -num;
  cpp_int scale = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(exponent < 0 ? -exponent : exponent));
  return exponent < 0 ? Rational(num, scale) : Rational(num * scale);
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

}  // namespace geoflow
