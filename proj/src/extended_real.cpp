#include "preflab/extended_real.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace preflab {

ExtendedReal::ExtendedReal(double v) {
  if (std::isnan(v)) throw std::domain_error("ExtendedReal: NaN is not an extended real");
  if (std::isinf(v)) {
    kind_ = v > 0 ? Kind::kPosInf : Kind::kNegInf;
  } else {
    value_ = v;
  }
}

double ExtendedReal::value() const {
  if (!is_finite()) throw std::logic_error("ExtendedReal::value() on infinite value " + to_string());
  return value_;
}

double ExtendedReal::to_double() const {
  switch (kind_) {
    case Kind::kPosInf: return HUGE_VAL;
    case Kind::kNegInf: return -HUGE_VAL;
    default: return value_;
  }
}

std::string ExtendedReal::to_string() const {
  if (is_pos_inf()) return "inf";
  if (is_neg_inf()) return "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value_);
  if (ec != std::errc()) throw std::runtime_error("ExtendedReal: formatting failed");
  return std::string(buf, end);
}

ExtendedReal ExtendedReal::parse(const std::string& text) {
  if (text == "inf" || text == "+inf") return pos_inf();
  if (text == "-inf") return neg_inf();
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || std::isnan(v)) {
    throw std::invalid_argument("not an extended real: '" + text + "'");
  }
  return ExtendedReal(v);
}

ExtendedReal ExtendedReal::operator-() const {
  switch (kind_) {
    case Kind::kPosInf: return neg_inf();
    case Kind::kNegInf: return pos_inf();
    default: return ExtendedReal(-value_);
  }
}

ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b) {
  if (a.is_finite() && b.is_finite()) return ExtendedReal(a.value_ + b.value_);
  if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf())) {
    throw std::domain_error("ExtendedReal: inf - inf is indeterminate");
  }
  return a.is_finite() ? b : a;
}

ExtendedReal operator-(const ExtendedReal& a, const ExtendedReal& b) { return a + (-b); }

ExtendedReal operator*(double s, const ExtendedReal& a) {
  if (a.is_finite()) return ExtendedReal(s * a.value_);
  if (s == 0.0) throw std::domain_error("ExtendedReal: 0 * inf is indeterminate");
  return s > 0 ? a : -a;
}

bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
  if (a.kind_ != b.kind_) return false;
  return !a.is_finite() || a.value_ == b.value_;
}

std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
  return a.to_double() <=> b.to_double();
}

}  // namespace preflab
