#include "nilrec/torus.hpp"

#include <cmath>
#include <sstream>

namespace nilrec {

namespace {

double reduce(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;
  return r;
}

}  // namespace

TorusPoint TorusPoint::floating(std::vector<double> coords) {
  for (auto& c : coords) {
    if (!std::isfinite(c)) throw PreconditionError("torus coordinate is not finite");
    c = reduce(c);
  }
  TorusPoint p;
  p.coords_ = std::move(coords);
  return p;
}

TorusPoint TorusPoint::exact(std::vector<ExactReal> coords) {
  for (auto& c : coords) c = c.frac();
  TorusPoint p;
  p.coords_ = std::move(coords);
  return p;
}

TorusPoint TorusPoint::zero(std::size_t r, bool exact) {
  if (exact) return TorusPoint::exact(std::vector<ExactReal>(r));
  return TorusPoint::floating(std::vector<double>(r, 0.0));
}

std::size_t TorusPoint::dim() const {
  return std::visit([](const auto& v) { return v.size(); }, coords_);
}

const std::vector<ExactReal>& TorusPoint::exact_coords() const {
  if (!is_exact()) throw MixedModeError("torus point has floating coordinates");
  return std::get<std::vector<ExactReal>>(coords_);
}

const std::vector<double>& TorusPoint::float_coords() const {
  if (is_exact()) throw MixedModeError("torus point has exact coordinates");
  return std::get<std::vector<double>>(coords_);
}

double TorusPoint::coord(std::size_t i) const {
  if (is_exact()) return exact_coords().at(i).to_double();
  return float_coords().at(i);
}

std::vector<double> TorusPoint::to_doubles() const {
  std::vector<double> r(dim());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = coord(i);
  return r;
}

namespace {

void check_pair(const TorusPoint& a, const TorusPoint& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("torus points of different dimension");
  if (a.is_exact() != b.is_exact()) throw MixedModeError("exact and floating torus points mixed");
}

}  // namespace

TorusPoint TorusPoint::operator+(const TorusPoint& o) const {
  check_pair(*this, o);
  if (is_exact()) {
    auto c = exact_coords();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.exact_coords()[i];
    return exact(std::move(c));
  }
  auto c = float_coords();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.float_coords()[i];
  return floating(std::move(c));
}

TorusPoint TorusPoint::operator-(const TorusPoint& o) const {
  check_pair(*this, o);
  if (is_exact()) {
    auto c = exact_coords();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.exact_coords()[i];
    return exact(std::move(c));
  }
  auto c = float_coords();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.float_coords()[i];
  return floating(std::move(c));
}

TorusPoint TorusPoint::operator-() const {
  if (is_exact()) {
    auto c = exact_coords();
    for (auto& x : c) x = -x;
    return exact(std::move(c));
  }
  auto c = float_coords();
  for (auto& x : c) x = -x;
  return floating(std::move(c));
}

TorusPoint TorusPoint::scaled(Int k) const {
  if (is_exact()) {
    auto c = exact_coords();
    for (auto& x : c) x = x.scaled(k);
    return exact(std::move(c));
  }
  auto c = float_coords();
  for (auto& x : c) x *= static_cast<double>(k);
  return floating(std::move(c));
}

bool TorusPoint::operator==(const TorusPoint& o) const {
  if (dim() != o.dim() || is_exact() != o.is_exact()) return false;
  if (is_exact()) return exact_coords() == o.exact_coords();
  return float_coords() == o.float_coords();
}

std::string TorusPoint::to_string() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < dim(); ++i) {
    if (i) os << ", ";
    if (is_exact()) {
      os << exact_coords()[i].to_string();
    } else {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", float_coords()[i]);
      os << buf;
    }
  }
  os << ")";
  return os.str();
}

double torus_norm(double x) {
  double f = x - std::floor(x);
  return std::min(f, 1.0 - f);
}

BigFloat torus_norm(const ExactReal& x) {
  if (x.is_rational()) {
    Rational q = x.frac().rational_value();
    Rational other = Rational(1) - q;
    return to_big(q < other ? q : other);
  }
  BigFloat v = x.eval();
  BigFloat f = v - boost::multiprecision::floor(v);
  BigFloat g = BigFloat(1) - f;
  return f < g ? f : g;
}

BigFloat torus_norm_big(const TorusPoint& x) {
  BigFloat s = 0;
  if (x.is_exact()) {
    for (const auto& c : x.exact_coords()) s += torus_norm(c);
  } else {
    for (double c : x.float_coords()) s += BigFloat(torus_norm(c));
  }
  return s;
}

double torus_norm(const TorusPoint& x) {
  if (x.is_exact()) return static_cast<double>(torus_norm_big(x));
  double s = 0;
  for (double c : x.float_coords()) s += torus_norm(c);
  return s;
}

ExactReal centered(const ExactReal& x) {
  ExactReal f = x.frac();
  if (f.is_rational() ? f.rational_value() >= Rational(1, 2) : f.eval() >= BigFloat(0.5))
    return f - ExactReal(1);
  return f;
}

double centered(double x) {
  double f = x - std::floor(x);
  return f >= 0.5 ? f - 1.0 : f;
}

Int round_half(double x) {
  double f = std::floor(x + 0.5);
  if (!(std::fabs(f) < 9.2e18)) throw OverflowError("round_half argument out of range");
  return static_cast<Int>(f);
}

Int round_half(const ExactReal& x) { return (x + ExactReal(Rational(1, 2))).floor(); }

Int round_half(const Rational& x) {
  Rational y = x + Rational(1, 2);
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), y.get_num_mpz_t(), y.get_den_mpz_t());
  return to_int(f);
}

}  // namespace nilrec
