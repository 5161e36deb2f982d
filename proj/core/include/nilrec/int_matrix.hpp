#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "nilrec/error.hpp"

namespace nilrec {

using Int = std::int64_t;
using IntVec = std::vector<Int>;
using Rational = mpq_class;
using RatVec = std::vector<Rational>;

// p / q in canonical form; q != 0.
Rational ratio(Int p, Int q);

Int checked_add(Int a, Int b);
Int checked_sub(Int a, Int b);
Int checked_mul(Int a, Int b);
Int checked_neg(Int a);
Int to_int(const mpz_class& z);
// C(n, k) for k >= 0 and any integer n, using the generalized definition.
Int binomial(Int n, Int k);

std::string to_string(const IntVec& v);
Int max_abs(const IntVec& v);
bool is_zero(const IntVec& v);

class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols, Int fill = 0);
  IntMatrix(std::initializer_list<std::initializer_list<Int>> rows);

  static IntMatrix identity(std::size_t n);
  static IntMatrix from_columns(const std::vector<IntVec>& cols, std::size_t rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  Int& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  Int operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  IntVec row(std::size_t i) const;
  IntVec column(std::size_t j) const;

  IntMatrix operator+(const IntMatrix& o) const;
  IntMatrix operator-(const IntMatrix& o) const;
  IntMatrix operator*(const IntMatrix& o) const;
  IntMatrix scaled(Int c) const;
  IntVec operator*(const IntVec& v) const;
  bool operator==(const IntMatrix& o) const = default;

  IntMatrix transpose() const;
  bool is_zero() const;
  // (A - I)^n == 0.
  bool is_unipotent() const;
  IntMatrix pow(Int n) const;
  IntMatrix submatrix(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) const;

  std::string to_string() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Int> data_;
};

class RatMatrix {
 public:
  RatMatrix() = default;
  RatMatrix(std::size_t rows, std::size_t cols);
  explicit RatMatrix(const IntMatrix& m);

  static RatMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rational& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  RatMatrix operator*(const RatMatrix& o) const;
  RatVec operator*(const IntVec& v) const;
  RatVec operator*(const RatVec& v) const;
  bool operator==(const RatMatrix& o) const;

  RatMatrix transpose() const;
  Rational determinant() const;
  // Throws SingularMatrix.
  RatMatrix inverse() const;
  bool is_integral() const;
  IntMatrix to_int() const;
  std::string to_string() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
};

// Returns the integer vector when every entry is an integer.
bool integral_vector(const RatVec& v, IntVec* out);

// Basis of the right kernel over Q, one vector per free column of the RREF.
std::vector<RatVec> rational_kernel(const RatMatrix& m);
Int rank(const RatMatrix& m);
// Clears denominators and divides by the content; first nonzero entry positive.
IntVec primitive_integer_vector(const RatVec& v);
IntVec primitive_integer_vector(const IntVec& v);

// Column Hermite form: the nonzero columns of the returned matrix are a basis of
// the lattice spanned by the columns of `gens`, in a canonical echelon shape.
IntMatrix column_hermite_form(const IntMatrix& gens);

struct SmithForm {
  // U * A * V == D with U, V unimodular and D diagonal, d_1 | d_2 | ...
  IntMatrix U;
  IntMatrix V;
  IntMatrix U_inv;
  IntMatrix V_inv;
  std::vector<Int> diag;
  std::size_t rank = 0;
};

SmithForm smith_form(const IntMatrix& a);

// Row Hermite form with the unimodular left factor W (W * a == H).
IntMatrix row_hermite_form(const IntMatrix& a, IntMatrix* W = nullptr);

bool is_unimodular(const IntMatrix& m);

}  // namespace nilrec
