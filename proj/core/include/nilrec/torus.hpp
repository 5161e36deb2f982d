#pragma once

#include <variant>
#include <vector>

#include "nilrec/exact_real.hpp"

namespace nilrec {

// Point of T^r with coordinates kept in [0, 1).
class TorusPoint {
 public:
  TorusPoint() = default;
  static TorusPoint floating(std::vector<double> coords);
  static TorusPoint exact(std::vector<ExactReal> coords);
  static TorusPoint zero(std::size_t r, bool exact = true);

  std::size_t dim() const;
  bool is_exact() const { return std::holds_alternative<std::vector<ExactReal>>(coords_); }
  const std::vector<ExactReal>& exact_coords() const;
  const std::vector<double>& float_coords() const;
  double coord(std::size_t i) const;
  std::vector<double> to_doubles() const;

  TorusPoint operator+(const TorusPoint& o) const;
  TorusPoint operator-(const TorusPoint& o) const;
  TorusPoint operator-() const;
  TorusPoint scaled(Int k) const;
  bool operator==(const TorusPoint& o) const;

  std::string to_string() const;

 private:
  std::variant<std::vector<double>, std::vector<ExactReal>> coords_;
};

// Distance to the nearest integer.
double torus_norm(double x);
BigFloat torus_norm(const ExactReal& x);
// Sum over coordinates of the distance to the nearest integer.
double torus_norm(const TorusPoint& x);
BigFloat torus_norm_big(const TorusPoint& x);
// Signed representative of x mod 1 in [-1/2, 1/2).
ExactReal centered(const ExactReal& x);
double centered(double x);

Int round_half(double x);
Int round_half(const ExactReal& x);
Int round_half(const Rational& x);

}  // namespace nilrec
