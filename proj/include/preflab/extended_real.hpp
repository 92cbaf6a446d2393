#pragma once

#include <compare>
#include <string>

namespace preflab {

/// A real number extended with +inf and -inf.
///
/// Infinite results (unbounded KL, J(pi) = -inf) are first-class values here
/// and never travel as IEEE infinities through the public API. The indeterminate
/// form inf - inf throws std::domain_error.
class ExtendedReal {
 public:
  enum class Kind { kFinite, kPosInf, kNegInf };

  constexpr ExtendedReal() = default;
  // NOLINTNEXTLINE(google-explicit-constructor)
  ExtendedReal(double v);

  static constexpr ExtendedReal pos_inf() { return ExtendedReal(Kind::kPosInf); }
  static constexpr ExtendedReal neg_inf() { return ExtendedReal(Kind::kNegInf); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::kFinite; }
  bool is_pos_inf() const { return kind_ == Kind::kPosInf; }
  bool is_neg_inf() const { return kind_ == Kind::kNegInf; }

  /// Finite value; throws std::logic_error on an infinite value.
  double value() const;
  /// IEEE view, for plotting and tolerance comparisons.
  double to_double() const;

  /// "inf", "-inf", or the shortest round-trip decimal.
  std::string to_string() const;
  /// Inverse of to_string(); throws std::invalid_argument on garbage.
  static ExtendedReal parse(const std::string& text);

  ExtendedReal operator-() const;
  friend ExtendedReal operator+(const ExtendedReal& a, const ExtendedReal& b);
  friend ExtendedReal operator-(const ExtendedReal& a, const ExtendedReal& b);
  /// Scalar product; 0 * inf throws std::domain_error.
  friend ExtendedReal operator*(double s, const ExtendedReal& a);

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b);
  friend std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b);

 private:
  constexpr explicit ExtendedReal(Kind k) : kind_(k) {}

  Kind kind_ = Kind::kFinite;
  double value_ = 0.0;
};

}  // namespace preflab
