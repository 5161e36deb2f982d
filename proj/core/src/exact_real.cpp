#include "nilrec/exact_real.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <mpfr.h>

namespace nilrec {

BigFloat to_big(const Rational& q) {
  BigFloat x;
  mpfr_set_q(x.backend().data(), q.get_mpq_t(), MPFR_RNDN);
  return x;
}

BigFloat parse_big(const std::string& decimal) { return BigFloat(decimal); }

std::string big_to_string(const BigFloat& x, int digits) {
  return x.str(digits, std::ios_base::fmtflags(0));
}

Int floor_big(const BigFloat& x) {
  mpz_class z;
  mpfr_get_z(z.get_mpz_t(), x.backend().data(), MPFR_RNDD);
  return to_int(z);
}

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw PreconditionError("empty number");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational a = parse_rational(s.substr(0, slash));
    Rational b = parse_rational(s.substr(slash + 1));
    if (sgn(b) == 0) throw PreconditionError("division by zero in '" + text + "'");
    Rational q = a / b;
    q.canonicalize();
    return q;
  }
  std::size_t i = 0;
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') {
    neg = s[i] == '-';
    ++i;
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_point = false, seen_digit = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits += c;
      seen_digit = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw PreconditionError("malformed number '" + text + "'");
  long exponent = 0;
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') throw PreconditionError("malformed number '" + text + "'");
    std::string e = s.substr(i + 1);
    std::size_t used = 0;
    try {
      exponent = std::stol(e, &used);
    } catch (const std::exception&) {
      throw PreconditionError("malformed exponent in '" + text + "'");
    }
    if (used != e.size()) throw PreconditionError("malformed exponent in '" + text + "'");
  }
  mpz_class num(digits);
  long shift = exponent - frac_digits;
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(shift)));
  Rational q = shift >= 0 ? Rational(num * p10) : Rational(num, p10);
  q.canonicalize();
  return neg ? Rational(-q) : q;
}

std::string rational_string(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

namespace {

bool valid_label(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

int significant_digits(const std::string& dec) {
  int count = 0;
  bool leading = true;
  for (char c : dec) {
    if (c == 'e' || c == 'E') break;
    if (!std::isdigit(static_cast<unsigned char>(c))) continue;
    if (leading && c == '0') continue;
    leading = false;
    ++count;
  }
  return count;
}

}  // namespace

IrrationalBasis::IrrationalBasis(std::vector<Entry> entries, bool independence_assumed)
    : entries_(std::move(entries)), independence_assumed_(independence_assumed) {
  if (entries_.empty() || entries_[0].label != "1")
    throw PreconditionError("first basis element must be the constant 1");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (i > 0 && !valid_label(e.label))
      throw PreconditionError("invalid basis label '" + e.label + "'");
    if (!seen.insert(e.label).second)
      throw PreconditionError("duplicate basis label '" + e.label + "'");
    BigFloat v;
    try {
      v = parse_big(e.decimal);
    } catch (const std::exception&) {
      throw PreconditionError("basis value for '" + e.label + "' is not a decimal");
    }
    if (i == 0 && v != 1) throw PreconditionError("first basis element must equal 1");
    if (!(v > 0) || !boost::multiprecision::isfinite(v))
      throw PreconditionError("basis value for '" + e.label + "' must be positive and finite");
    if (i > 0 && significant_digits(e.decimal) < 50)
      throw PreconditionError("basis value for '" + e.label + "' needs at least 50 digits");
    values_.push_back(v);
    doubles_.push_back(static_cast<double>(v));
  }
}

bool IrrationalBasis::is_standard_label(const std::string& label) {
  if (label == "pi" || label == "e" || label == "log2") return true;
  if (label.rfind("sqrt", 0) != 0 || label.size() == 4) return false;
  for (std::size_t i = 4; i < label.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(label[i]))) return false;
  long k = std::stol(label.substr(4));
  long r = static_cast<long>(std::llround(std::sqrt(static_cast<double>(k))));
  return k > 1 && r * r != k;
}

std::string IrrationalBasis::standard_decimal(const std::string& label) {
  if (!is_standard_label(label)) throw PreconditionError("unknown constant '" + label + "'");
  BigFloat v;
  if (label == "pi") {
    mpfr_const_pi(v.backend().data(), MPFR_RNDN);
  } else if (label == "log2") {
    mpfr_const_log2(v.backend().data(), MPFR_RNDN);
  } else if (label == "e") {
    v = boost::multiprecision::exp(BigFloat(1));
  } else {
    v = boost::multiprecision::sqrt(BigFloat(std::stol(label.substr(4))));
  }
  return big_to_string(v, 64);
}

std::shared_ptr<const IrrationalBasis> IrrationalBasis::standard(
    const std::vector<std::string>& labels, bool independence_assumed) {
  std::vector<Entry> entries{{"1", "1"}};
  for (const auto& l : labels) entries.push_back({l, standard_decimal(l)});
  return std::make_shared<const IrrationalBasis>(std::move(entries), independence_assumed);
}

std::optional<std::size_t> IrrationalBasis::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].label == label) return i;
  return std::nullopt;
}

bool IrrationalBasis::same_as(const IrrationalBasis& o) const {
  if (this == &o) return true;
  if (entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].label != o.entries_[i].label || entries_[i].decimal != o.entries_[i].decimal)
      return false;
  return independence_assumed_ == o.independence_assumed_;
}

ExactReal::ExactReal(BasisPtr basis, RatVec coeffs) : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (!basis_) {
    if (coeffs_.size() != 1) throw DimensionMismatch("rational value needs one coefficient");
    return;
  }
  if (coeffs_.size() > basis_->size()) throw DimensionMismatch("more coefficients than basis elements");
  coeffs_.resize(basis_->size(), Rational(0));
}

ExactReal ExactReal::basis_element(const BasisPtr& basis, std::size_t i) {
  RatVec c(basis->size(), Rational(0));
  c.at(i) = 1;
  return ExactReal(basis, std::move(c));
}

const Rational& ExactReal::coeff(std::size_t i) const {
  static const Rational zero(0);
  return i < coeffs_.size() ? coeffs_[i] : zero;
}

bool ExactReal::is_rational() const {
  for (std::size_t i = 1; i < coeffs_.size(); ++i)
    if (sgn(coeffs_[i]) != 0) return false;
  return true;
}

Rational ExactReal::rational_value() const {
  if (!is_rational()) throw PreconditionError("value " + to_string() + " is not rational");
  return coeffs_[0];
}

bool ExactReal::is_zero() const {
  for (const auto& c : coeffs_)
    if (sgn(c) != 0) return false;
  return true;
}

BasisPtr common_basis(const ExactReal& a, const ExactReal& b) {
  if (!a.basis_) return b.basis_;
  if (!b.basis_) return a.basis_;
  if (a.basis_ == b.basis_ || a.basis_->same_as(*b.basis_)) return a.basis_;
  throw PreconditionError("values are declared over different bases");
}

ExactReal ExactReal::operator+(const ExactReal& o) const {
  ExactReal r = *this;
  r += o;
  return r;
}

ExactReal ExactReal::operator-(const ExactReal& o) const {
  ExactReal r = *this;
  r -= o;
  return r;
}

ExactReal ExactReal::operator-() const {
  ExactReal r = *this;
  for (auto& c : r.coeffs_) c = -c;
  return r;
}

ExactReal& ExactReal::operator+=(const ExactReal& o) {
  BasisPtr b = common_basis(*this, o);
  if (b && coeffs_.size() < b->size()) coeffs_.resize(b->size(), Rational(0));
  basis_ = b;
  for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

ExactReal& ExactReal::operator-=(const ExactReal& o) {
  BasisPtr b = common_basis(*this, o);
  if (b && coeffs_.size() < b->size()) coeffs_.resize(b->size(), Rational(0));
  basis_ = b;
  for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

ExactReal ExactReal::scaled(const Rational& q) const {
  ExactReal r = *this;
  for (auto& c : r.coeffs_) c *= q;
  return r;
}

ExactReal ExactReal::scaled(Int k) const { return scaled(Rational(static_cast<long>(k))); }

ExactReal ExactReal::operator*(const ExactReal& o) const {
  if (o.is_rational()) {
    ExactReal r = scaled(o.coeffs_[0]);
    if (!r.basis_) r.basis_ = o.basis_;
    if (r.basis_) r.coeffs_.resize(r.basis_->size(), Rational(0));
    return r;
  }
  if (is_rational()) return o * *this;
  throw PreconditionError("product of two irrational values is not representable over the basis");
}

ExactReal ExactReal::operator/(const Rational& q) const {
  if (sgn(q) == 0) throw PreconditionError("division by zero");
  return scaled(Rational(1) / q);
}

bool ExactReal::operator==(const ExactReal& o) const {
  if (basis_ && o.basis_ && !(basis_ == o.basis_ || basis_->same_as(*o.basis_))) return false;
  std::size_t n = std::max(coeffs_.size(), o.coeffs_.size());
  for (std::size_t i = 0; i < n; ++i)
    if (coeff(i) != o.coeff(i)) return false;
  return true;
}

BigFloat ExactReal::eval() const {
  BigFloat s = to_big(coeffs_[0]);
  for (std::size_t i = 1; i < coeffs_.size(); ++i)
    if (sgn(coeffs_[i]) != 0) s += to_big(coeffs_[i]) * basis_->value(i);
  return s;
}

double ExactReal::to_double() const {
  if (is_rational()) return coeffs_[0].get_d();
  return static_cast<double>(eval());
}

Int ExactReal::floor() const {
  if (is_rational()) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), coeffs_[0].get_num_mpz_t(), coeffs_[0].get_den_mpz_t());
    return to_int(f);
  }
  return floor_big(eval());
}

ExactReal ExactReal::frac() const {
  ExactReal r = *this;
  Int f = floor();
  if (f != 0) r.coeffs_[0] -= Rational(static_cast<long>(f));
  return r;
}

int ExactReal::sign() const {
  if (is_rational()) return sgn(coeffs_[0]);
  BigFloat v = eval();
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

std::string ExactReal::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    const Rational& c = coeffs_[i];
    if (sgn(c) == 0) continue;
    Rational a = abs(c);
    if (first) {
      if (sgn(c) < 0) os << "-";
    } else {
      os << (sgn(c) < 0 ? " - " : " + ");
    }
    first = false;
    if (i == 0) {
      os << rational_string(a);
    } else if (a == 1) {
      os << basis_->label(i);
    } else {
      os << rational_string(a) << "*" << basis_->label(i);
    }
  }
  if (first) return "0";
  return os.str();
}

namespace {

class ExprParser {
 public:
  ExprParser(const std::string& s, const BasisPtr& b) : s_(s), basis_(b) {}

  ExactReal parse() {
    ExactReal v = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) {
    throw PreconditionError("cannot parse '" + s_ + "': " + why);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  ExactReal expr() {
    skip();
    bool neg = false;
    if (peek('+') || peek('-')) neg = s_[pos_++] == '-';
    ExactReal v = term();
    if (neg) v = -v;
    for (;;) {
      if (peek('+')) {
        ++pos_;
        v += term();
      } else if (peek('-')) {
        ++pos_;
        v -= term();
      } else {
        return v;
      }
    }
  }

  bool atom_starts() {
    skip();
    if (pos_ >= s_.size()) return false;
    char c = s_[pos_];
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '(' || c == '.';
  }

  ExactReal term() {
    ExactReal v = atom();
    for (;;) {
      if (peek('*')) {
        ++pos_;
        v = v * atom();
      } else if (peek('/')) {
        ++pos_;
        ExactReal d = atom();
        if (!d.is_rational()) fail("division by an irrational value");
        if (sgn(d.rational_value()) == 0) fail("division by zero");
        v = v / d.rational_value();
      } else if (atom_starts()) {
        v = v * atom();
      } else {
        return v;
      }
    }
  }

  ExactReal atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      ExactReal v = expr();
      if (!peek(')')) fail("missing ')'");
      ++pos_;
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
        ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        std::size_t save = pos_;
        ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
        if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
          while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        } else {
          pos_ = save;
        }
      }
      return ExactReal(parse_rational(s_.substr(start, pos_ - start)));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string label = s_.substr(start, pos_ - start);
      if (!basis_) fail("label '" + label + "' without a declared basis");
      auto idx = basis_->index_of(label);
      if (!idx) fail("label '" + label + "' is not in the basis");
      return ExactReal::basis_element(basis_, *idx);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  const BasisPtr& basis_;
  std::size_t pos_ = 0;
};

}  // namespace

ExactReal ExactReal::parse(const std::string& text, const BasisPtr& basis) {
  return ExprParser(text, basis).parse();
}

bool is_exact(const Scalar& s) { return std::holds_alternative<ExactReal>(s); }

double to_double(const Scalar& s) {
  if (const auto* d = std::get_if<double>(&s)) return *d;
  return std::get<ExactReal>(s).to_double();
}

const ExactReal& exact_of(const Scalar& s) {
  if (const auto* e = std::get_if<ExactReal>(&s)) return *e;
  throw MixedModeError("exact value required, got a floating value");
}

std::string to_string(const Scalar& s) {
  if (const auto* e = std::get_if<ExactReal>(&s)) return e->to_string();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(s));
  return buf;
}

}  // namespace nilrec
