#include "cce/formula/dimension.hpp"

#include <numeric>

#include "cce/error.hpp"

namespace cce::formula {

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw MathDomainError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  num_ = g == 0 ? 0 : num / g;
  den_ = g == 0 ? 1 : den / g;
}

Rational Rational::operator+(const Rational& o) const {
  return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}
Rational Rational::operator-(const Rational& o) const {
  return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}
Rational Rational::operator*(const Rational& o) const {
  return Rational(num_ * o.num_, den_ * o.den_);
}
Rational Rational::operator/(const Rational& o) const {
  if (o.num_ == 0) throw MathDomainError("rational division by zero");
  return Rational(num_ * o.den_, den_ * o.num_);
}

std::strong_ordering Rational::operator<=>(const Rational& o) const {
  return num_ * o.den_ <=> o.num_ * den_;
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Dimension Dimension::base(BaseDimension which, Rational power) {
  Dimension d;
  d.exps_[static_cast<std::size_t>(which)] = power;
  return d;
}

bool Dimension::dimensionless() const {
  for (const auto& e : exps_)
    if (!e.is_zero()) return false;
  return true;
}

Dimension Dimension::operator*(const Dimension& o) const {
  Dimension d;
  for (std::size_t i = 0; i < kBaseDimensionCount; ++i)
    d.exps_[i] = exps_[i] + o.exps_[i];
  return d;
}

Dimension Dimension::operator/(const Dimension& o) const {
  Dimension d;
  for (std::size_t i = 0; i < kBaseDimensionCount; ++i)
    d.exps_[i] = exps_[i] - o.exps_[i];
  return d;
}

Dimension Dimension::pow(const Rational& p) const {
  Dimension d;
  for (std::size_t i = 0; i < kBaseDimensionCount; ++i)
    d.exps_[i] = exps_[i] * p;
  return d;
}

std::string Dimension::to_unit_string() const {
  static constexpr const char* kSymbols[kBaseDimensionCount] = {
      "m", "kg", "s", "A", "K", "mol", "cd"};
  std::string out;
  for (std::size_t i = 0; i < kBaseDimensionCount; ++i) {
    const Rational& e = exps_[i];
    if (e.is_zero()) continue;
    if (!out.empty()) out += "*";
    out += kSymbols[i];
    if (e == Rational(1)) continue;
    out += "^";
    out += e.is_integer() ? e.to_string() : "(" + e.to_string() + ")";
  }
  return out.empty() ? "1" : out;
}

}  // namespace cce::formula
