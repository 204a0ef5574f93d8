#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

namespace cce::formula {

/// Exact rational with a positive denominator, always in lowest terms.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  bool is_zero() const noexcept { return num_ == 0; }
  bool is_integer() const noexcept { return den_ == 1; }
  double to_double() const noexcept {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  Rational operator-() const { return Rational(-num_, den_); }

  bool operator==(const Rational&) const = default;
  std::strong_ordering operator<=>(const Rational& o) const;

  /// "3", "-2", "1/2".
  std::string to_string() const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

enum class BaseDimension : std::size_t {
  kLength = 0,
  kMass,
  kTime,
  kCurrent,
  kTemperature,
  kAmount,
  kLuminous,
};

inline constexpr std::size_t kBaseDimensionCount = 7;

/// Exponent vector over the seven SI base dimensions.
class Dimension {
 public:
  Dimension() = default;
  explicit Dimension(const std::array<Rational, kBaseDimensionCount>& exps)
      : exps_(exps) {}

  static Dimension none() { return Dimension(); }
  static Dimension base(BaseDimension which, Rational power = Rational(1));

  const Rational& operator[](BaseDimension which) const {
    return exps_[static_cast<std::size_t>(which)];
  }
  const std::array<Rational, kBaseDimensionCount>& exponents() const {
    return exps_;
  }

  bool dimensionless() const;

  Dimension operator*(const Dimension& o) const;
  Dimension operator/(const Dimension& o) const;
  Dimension pow(const Rational& p) const;

  bool operator==(const Dimension&) const = default;

  /// SI base-unit spelling accepted back by the unit parser,
  /// e.g. "m*kg*s^-2"; "1" when dimensionless.
  std::string to_unit_string() const;

 private:
  std::array<Rational, kBaseDimensionCount> exps_{};
};

}  // namespace cce::formula
