#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <boost/multiprecision/mpfr.hpp>

namespace dytb {

using Integer = mpz_class;
using Rational = mpq_class;
using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

// Working precision of Real, in bits. Default 128.
void set_precision_bits(unsigned bits);
unsigned precision_bits();

std::strong_ordering cmp3(const Rational& a, const Rational& b);

Real to_real(const Rational& q);
// Exact value of the binary float.
Rational to_rational(const Real& x);
// Nearest rational with a power-of-two denominator and about `bits` significant bits.
Rational round_to_dyadic(const Real& x, unsigned bits);

Rational ipow(const Rational& x, long e);
Rational two_pow(long e);
// num/den in lowest terms (the two-argument mpq constructor does not reduce).
Rational fraction(long num, long den);

// k-th root when it is rational.
std::optional<Rational> exact_root(const Rational& x, unsigned long k);
// x^e for x >= 0 when the result is rational.
std::optional<Rational> exact_pow(const Rational& x, const Rational& e);
Real real_pow(const Rational& x, const Rational& e);
Real real_pow(const Real& x, const Rational& e);

std::string to_string(const Rational& q);
// Accepts "a", "a/b", "-a/b". `canonical` is cleared if the text is not in lowest terms.
Rational parse_rational(std::string_view text, bool* canonical = nullptr);
std::string to_string(const Real& x, int digits = 24);

// Nonnegative quantity coeff * prod base^exponent, compared exactly.
class PowerProduct {
 public:
  PowerProduct() = default;
  explicit PowerProduct(Rational coeff);
  static PowerProduct power(const Rational& base, const Rational& exponent);

  PowerProduct& operator*=(const PowerProduct& o);
  friend PowerProduct operator*(PowerProduct a, const PowerProduct& b) { return a *= b; }
  PowerProduct pow(const Rational& e) const;
  PowerProduct inverse() const;

  bool is_zero() const { return coeff_ == 0; }
  Real value() const;
  // Rational value if all factors collapse.
  std::optional<Rational> rational() const;

  // Empty when the exact comparison would need absurdly large integers.
  friend std::optional<std::strong_ordering> try_compare(const PowerProduct& a,
                                                         const PowerProduct& b);

 private:
  Rational coeff_ = 1;
  std::vector<std::pair<Rational, Rational>> factors_;
};

enum class Certainty { yes, no, unknown };

// Either an exact PowerProduct or a real approximation with relative error below the
// working slack.
class Magnitude {
 public:
  Magnitude() : Magnitude(PowerProduct(Rational(0))) {}
  Magnitude(PowerProduct exact);  // NOLINT
  static Magnitude approx(Real v);
  static Magnitude of(const Rational& q) { return Magnitude(PowerProduct(q)); }

  bool is_exact() const { return exact_.has_value(); }
  const std::optional<PowerProduct>& exact() const { return exact_; }
  const Real& value() const { return value_; }

  Magnitude operator*(const Magnitude& o) const;
  Magnitude pow(const Rational& e) const;

 private:
  std::optional<PowerProduct> exact_;
  Real value_;
};

// Relative slack used when one side is not exact.
Real comparison_slack();

Certainty certified_ge(const Magnitude& a, const Magnitude& b);
Certainty certified_gt(const Magnitude& a, const Magnitude& b);

// Nonnegative x with x^p optionally known exactly.
struct NormValue {
  std::optional<Rational> power;
  Rational p = 1;
  Real value;
  unsigned precision = 0;

  static NormValue from_power(const Rational& pw, const Rational& p);
  static NormValue from_real(const Real& v, const Rational& p);
  Magnitude magnitude() const;
  bool is_zero() const;
};

}  // namespace dytb
