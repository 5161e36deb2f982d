#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/mpfr.hpp>

#include "nilrec/int_matrix.hpp"

namespace nilrec {

// 100 significant decimal digits.
using BigFloat = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<100>,
                                               boost::multiprecision::et_off>;

BigFloat to_big(const Rational& q);
BigFloat parse_big(const std::string& decimal);
std::string big_to_string(const BigFloat& x, int digits);
Int floor_big(const BigFloat& x);

class IrrationalBasis {
 public:
  struct Entry {
    std::string label;
    std::string decimal;
  };

  // entries[0] must be {"1", "1"}; other values need at least 50 significant digits.
  IrrationalBasis(std::vector<Entry> entries, bool independence_assumed);

  // Basis {1, labels...} with values computed here. Known labels: sqrtK, pi, e, log2.
  static std::shared_ptr<const IrrationalBasis> standard(const std::vector<std::string>& labels,
                                                         bool independence_assumed = true);
  static bool is_standard_label(const std::string& label);
  static std::string standard_decimal(const std::string& label);

  std::size_t size() const { return entries_.size(); }
  const std::string& label(std::size_t i) const { return entries_[i].label; }
  const std::string& decimal(std::size_t i) const { return entries_[i].decimal; }
  const BigFloat& value(std::size_t i) const { return values_[i]; }
  double double_value(std::size_t i) const { return doubles_[i]; }
  const std::vector<Entry>& entries() const { return entries_; }
  bool independence_assumed() const { return independence_assumed_; }
  std::optional<std::size_t> index_of(const std::string& label) const;

  bool same_as(const IrrationalBasis& o) const;

 private:
  std::vector<Entry> entries_;
  std::vector<BigFloat> values_;
  std::vector<double> doubles_;
  bool independence_assumed_;
};

using BasisPtr = std::shared_ptr<const IrrationalBasis>;

// Rational combination of basis elements. A value without a basis is a plain
// rational and combines with values over any basis.
class ExactReal {
 public:
  ExactReal() : coeffs_{Rational(0)} {}
  ExactReal(const Rational& q) : coeffs_{q} {}  // NOLINT: implicit by design
  ExactReal(long v) : coeffs_{Rational(v)} {}   // NOLINT
  ExactReal(int v) : coeffs_{Rational(v)} {}    // NOLINT
  ExactReal(BasisPtr basis, RatVec coeffs);

  static ExactReal basis_element(const BasisPtr& basis, std::size_t i);
  // Grammar: sum of terms `q`, `q*label`, `label`, `label/q`, `q label`;
  // q is an integer, a fraction p/q or a finite decimal (read exactly).
  static ExactReal parse(const std::string& text, const BasisPtr& basis);

  const BasisPtr& basis() const { return basis_; }
  std::size_t size() const { return coeffs_.size(); }
  const Rational& coeff(std::size_t i) const;
  const RatVec& coeffs() const { return coeffs_; }

  bool is_rational() const;
  Rational rational_value() const;
  bool is_zero() const;

  ExactReal operator+(const ExactReal& o) const;
  ExactReal operator-(const ExactReal& o) const;
  ExactReal operator-() const;
  ExactReal& operator+=(const ExactReal& o);
  ExactReal& operator-=(const ExactReal& o);
  ExactReal scaled(const Rational& q) const;
  ExactReal scaled(Int k) const;
  // Defined when at least one side is rational.
  ExactReal operator*(const ExactReal& o) const;
  ExactReal operator/(const Rational& q) const;
  bool operator==(const ExactReal& o) const;
  bool operator!=(const ExactReal& o) const { return !(*this == o); }

  BigFloat eval() const;
  double to_double() const;
  Int floor() const;
  // Representative in [0, 1).
  ExactReal frac() const;
  int sign() const;

  std::string to_string() const;

 private:
  BasisPtr basis_;
  RatVec coeffs_;

  friend BasisPtr common_basis(const ExactReal& a, const ExactReal& b);
};

BasisPtr common_basis(const ExactReal& a, const ExactReal& b);

// Either a float or an exact value; used where both modes are accepted.
using Scalar = std::variant<double, ExactReal>;

bool is_exact(const Scalar& s);
double to_double(const Scalar& s);
const ExactReal& exact_of(const Scalar& s);
std::string to_string(const Scalar& s);

// Parses a decimal or fraction exactly.
Rational parse_rational(const std::string& text);
// p/q form, or p for integers.
std::string rational_string(const Rational& q);

}  // namespace nilrec
