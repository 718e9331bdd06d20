#include "dytb/numeric.hpp"

#include <cctype>
#include <stdexcept>

namespace dytb {

namespace {
unsigned g_bits = 0;

unsigned digits_for_bits(unsigned bits) { return (bits * 301u + 999u) / 1000u + 1u; }

struct PrecisionInit {
  PrecisionInit() { set_precision_bits(128); }
} const g_precision_init;

std::size_t bit_size(const Integer& z) { return mpz_sizeinbase(z.get_mpz_t(), 2); }
}  // namespace

void set_precision_bits(unsigned bits) {
  if (bits < 32) throw std::invalid_argument("precision below 32 bits");
  g_bits = bits;
  Real::default_precision(digits_for_bits(bits));
}

unsigned precision_bits() { return g_bits; }

std::strong_ordering cmp3(const Rational& a, const Rational& b) {
  int c = cmp(a, b);
  return c < 0 ? std::strong_ordering::less
               : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

Real to_real(const Rational& q) {
  Real r;
  mpfr_set_q(r.backend().data(), q.get_mpq_t(), MPFR_RNDN);
  return r;
}

Rational to_rational(const Real& x) {
  Rational q;
  mpfr_get_q(q.get_mpq_t(), x.backend().data());
  q.canonicalize();
  return q;
}

Rational round_to_dyadic(const Real& x, unsigned bits) {
  if (x == 0) return 0;
  mpfr_srcptr src = x.backend().data();
  long e = mpfr_get_exp(src);
  Real tmp = x;
  mpfr_mul_2si(tmp.backend().data(), src, static_cast<long>(bits) - e, MPFR_RNDN);
  Integer z;
  mpfr_get_z(z.get_mpz_t(), tmp.backend().data(), MPFR_RNDN);
  return Rational(z) * two_pow(e - static_cast<long>(bits));
}

Rational ipow(const Rational& x, long e) {
  if (e < 0) {
    if (x == 0) throw std::domain_error("zero to a negative power");
    return ipow(Rational(1) / x, -e);
  }
  Rational r;
  mpz_pow_ui(r.get_num_mpz_t(), x.get_num_mpz_t(), static_cast<unsigned long>(e));
  mpz_pow_ui(r.get_den_mpz_t(), x.get_den_mpz_t(), static_cast<unsigned long>(e));
  return r;
}

Rational two_pow(long e) {
  Rational r = 1;
  if (e >= 0)
    mpz_mul_2exp(r.get_num_mpz_t(), r.get_num_mpz_t(), static_cast<unsigned long>(e));
  else
    mpz_mul_2exp(r.get_den_mpz_t(), r.get_den_mpz_t(), static_cast<unsigned long>(-e));
  return r;
}

Rational fraction(long num, long den) {
  if (den == 0) throw std::domain_error("zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

std::optional<Rational> exact_root(const Rational& x, unsigned long k) {
  if (k == 0) throw std::domain_error("zeroth root");
  if (k == 1) return x;
  bool neg = x < 0;
  if (neg && k % 2 == 0) return std::nullopt;
  Integer a = abs(x.get_num()), b = x.get_den(), ra, rb;
  if (!mpz_root(ra.get_mpz_t(), a.get_mpz_t(), k)) return std::nullopt;
  if (!mpz_root(rb.get_mpz_t(), b.get_mpz_t(), k)) return std::nullopt;
  Rational r(neg ? Integer(-ra) : ra, rb);
  r.canonicalize();
  return r;
}

std::optional<Rational> exact_pow(const Rational& x, const Rational& e) {
  if (x < 0) throw std::domain_error("exact_pow of a negative base");
  if (x == 0) {
    if (e > 0) return Rational(0);
    if (e == 0) return Rational(1);
    return std::nullopt;
  }
  if (!e.get_den().fits_ulong_p() || !e.get_num().fits_slong_p()) return std::nullopt;
  auto root = exact_root(x, e.get_den().get_ui());
  if (!root) return std::nullopt;
  return ipow(*root, e.get_num().get_si());
}

Real real_pow(const Real& x, const Rational& e) {
  if (x == 0) return e == 0 ? Real(1) : Real(0);
  return boost::multiprecision::pow(x, to_real(e));
}

Real real_pow(const Rational& x, const Rational& e) {
  if (auto q = exact_pow(x, e)) return to_real(*q);
  return real_pow(to_real(x), e);
}

std::string to_string(const Rational& q) { return q.get_str(); }

Rational parse_rational(std::string_view text, bool* canonical) {
  auto bad = [&] { return std::invalid_argument("malformed rational '" + std::string(text) + "'"); };
  if (text.empty()) throw bad();
  std::size_t slash = text.find('/');
  auto check_int = [&](std::string_view s, bool allow_sign) {
    std::size_t i = 0;
    if (allow_sign && !s.empty() && s[0] == '-') i = 1;
    if (i >= s.size()) throw bad();
    for (; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) throw bad();
  };
  std::string_view num = text.substr(0, slash);
  check_int(num, true);
  Rational q;
  if (slash == std::string_view::npos) {
    q = Rational(Integer(std::string(num)));
  } else {
    std::string_view den = text.substr(slash + 1);
    check_int(den, false);
    Integer d(std::string{den});
    if (d == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    q = Rational(Integer(std::string(num)), d);
    q.canonicalize();
  }
  if (canonical) *canonical = (to_string(q) == text);
  return q;
}

std::string to_string(const Real& x, int digits) {
  return x.str(digits, std::ios_base::scientific);
}

// ---- PowerProduct ---------------------------------------------------------

PowerProduct::PowerProduct(Rational coeff) : coeff_(std::move(coeff)) {
  if (coeff_ < 0) throw std::domain_error("PowerProduct must be nonnegative");
}

PowerProduct PowerProduct::power(const Rational& base, const Rational& exponent) {
  if (base < 0) throw std::domain_error("PowerProduct base must be nonnegative");
  if (auto q = exact_pow(base, exponent)) return PowerProduct(*q);
  if (base == 0) throw std::domain_error("zero to a negative power");
  PowerProduct r;
  r.factors_.emplace_back(base, exponent);
  return r;
}

PowerProduct& PowerProduct::operator*=(const PowerProduct& o) {
  coeff_ *= o.coeff_;
  if (coeff_ == 0) {
    factors_.clear();
    return *this;
  }
  for (const auto& [b, e] : o.factors_) {
    bool merged = false;
    for (auto& f : factors_) {
      if (f.first == b) {
        f.second += e;
        merged = true;
        break;
      }
    }
    if (!merged) factors_.emplace_back(b, e);
  }
  std::vector<std::pair<Rational, Rational>> kept;
  for (auto& f : factors_) {
    if (auto q = exact_pow(f.first, f.second))
      coeff_ *= *q;
    else
      kept.push_back(std::move(f));
  }
  factors_ = std::move(kept);
  return *this;
}

PowerProduct PowerProduct::pow(const Rational& e) const {
  if (coeff_ == 0) {
    if (e <= 0) throw std::domain_error("zero to a nonpositive power");
    return PowerProduct(Rational(0));
  }
  PowerProduct r = PowerProduct::power(coeff_, e);
  for (const auto& [b, x] : factors_) r *= PowerProduct::power(b, x * e);
  return r;
}

PowerProduct PowerProduct::inverse() const { return pow(-1); }

Real PowerProduct::value() const {
  Real v = to_real(coeff_);
  for (const auto& [b, e] : factors_) v *= real_pow(b, e);
  return v;
}

std::optional<Rational> PowerProduct::rational() const {
  if (factors_.empty()) return coeff_;
  return std::nullopt;
}

std::optional<std::strong_ordering> try_compare(const PowerProduct& a, const PowerProduct& b) {
  if (a.is_zero() || b.is_zero()) {
    if (a.is_zero() && b.is_zero()) return std::strong_ordering::equal;
    return a.is_zero() ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  PowerProduct r = a * b.inverse();
  if (r.factors_.empty()) return cmp3(r.coeff_, Rational(1));
  Integer L = 1;
  for (const auto& f : r.factors_) mpz_lcm(L.get_mpz_t(), L.get_mpz_t(), f.second.get_den_mpz_t());
  if (!L.fits_slong_p()) return std::nullopt;
  long l = L.get_si();
  double cost = static_cast<double>(l) *
                (bit_size(r.coeff_.get_num()) + bit_size(r.coeff_.get_den()));
  for (const auto& [base, e] : r.factors_) {
    Rational k = e * l;
    cost += std::abs(k.get_num().get_d()) *
            (bit_size(base.get_num()) + bit_size(base.get_den()));
  }
  if (cost > 4.0e6) return std::nullopt;
  Rational x = ipow(r.coeff_, l);
  for (const auto& [base, e] : r.factors_) {
    Rational k = e * l;
    x *= ipow(base, k.get_num().get_si());
  }
  return cmp3(x, Rational(1));
}

// ---- Magnitude ------------------------------------------------------------

Magnitude::Magnitude(PowerProduct exact) : exact_(std::move(exact)) { value_ = exact_->value(); }

Magnitude Magnitude::approx(Real v) {
  if (v < 0) throw std::domain_error("Magnitude must be nonnegative");
  Magnitude m;
  m.exact_.reset();
  m.value_ = std::move(v);
  return m;
}

Magnitude Magnitude::operator*(const Magnitude& o) const {
  if (exact_ && o.exact_) return Magnitude(*exact_ * *o.exact_);
  return approx(value_ * o.value_);
}

Magnitude Magnitude::pow(const Rational& e) const {
  if (exact_) return Magnitude(exact_->pow(e));
  return approx(real_pow(value_, e));
}

Real comparison_slack() {
  Real s = 1;
  return ldexp(s, -static_cast<int>(precision_bits() / 2));
}

namespace {
std::optional<std::strong_ordering> exact_order(const Magnitude& a, const Magnitude& b) {
  if (a.exact() && b.exact()) return try_compare(*a.exact(), *b.exact());
  return std::nullopt;
}
}  // namespace

Certainty certified_ge(const Magnitude& a, const Magnitude& b) {
  if (auto o = exact_order(a, b)) return *o >= 0 ? Certainty::yes : Certainty::no;
  if (b.value() == 0) return Certainty::yes;
  Real d = comparison_slack();
  if (a.value() >= b.value() * (1 + d)) return Certainty::yes;
  if (a.value() < b.value() * (1 - d)) return Certainty::no;
  return Certainty::unknown;
}

Certainty certified_gt(const Magnitude& a, const Magnitude& b) {
  if (auto o = exact_order(a, b)) return *o > 0 ? Certainty::yes : Certainty::no;
  Real d = comparison_slack();
  if (b.value() == 0) return a.value() > 0 ? Certainty::yes : Certainty::unknown;
  if (a.value() > b.value() * (1 + d)) return Certainty::yes;
  if (a.value() <= b.value() * (1 - d)) return Certainty::no;
  return Certainty::unknown;
}

// ---- NormValue ------------------------------------------------------------

NormValue NormValue::from_power(const Rational& pw, const Rational& p) {
  NormValue n;
  n.power = pw;
  n.p = p;
  n.value = real_pow(pw, Rational(1) / p);
  n.precision = precision_bits();
  return n;
}

NormValue NormValue::from_real(const Real& v, const Rational& p) {
  NormValue n;
  n.p = p;
  n.value = v;
  n.precision = precision_bits();
  return n;
}

Magnitude NormValue::magnitude() const {
  if (power) return Magnitude(PowerProduct::power(*power, Rational(1) / p));
  return Magnitude::approx(value);
}

bool NormValue::is_zero() const { return power ? *power == 0 : value == 0; }

}  // namespace dytb
