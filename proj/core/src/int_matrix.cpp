#include "nilrec/int_matrix.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <utility>

namespace nilrec {

Rational ratio(Int p, Int q) {
  if (q == 0) throw PreconditionError("zero denominator");
  Rational r{mpz_class(static_cast<long>(p)), mpz_class(static_cast<long>(q))};
  r.canonicalize();
  return r;
}

Int checked_add(Int a, Int b) {
  Int r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("integer overflow in addition");
  return r;
}

Int checked_sub(Int a, Int b) {
  Int r;
  if (__builtin_sub_overflow(a, b, &r)) throw OverflowError("integer overflow in subtraction");
  return r;
}

Int checked_mul(Int a, Int b) {
  Int r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("integer overflow in multiplication");
  return r;
}

Int checked_neg(Int a) { return checked_sub(0, a); }

Int to_int(const mpz_class& z) {
  if (!mpz_fits_slong_p(z.get_mpz_t())) throw OverflowError("integer does not fit in 64 bits");
  return z.get_si();
}

Int binomial(Int n, Int k) {
  if (k < 0) return 0;
  if (k == 0) return 1;
  if (n >= 0 && k > n) return 0;
  mpz_class num = 1;
  mpz_class den = 1;
  for (Int i = 0; i < k; ++i) {
    num *= mpz_class(static_cast<long>(n - i));
    den *= mpz_class(static_cast<long>(i + 1));
  }
  mpz_class q = num / den;
  return to_int(q);
}

std::string to_string(const IntVec& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  os << ")";
  return os.str();
}

Int max_abs(const IntVec& v) {
  Int m = 0;
  for (Int x : v) m = std::max(m, x < 0 ? checked_neg(x) : x);
  return m;
}

bool is_zero(const IntVec& v) {
  return std::all_of(v.begin(), v.end(), [](Int x) { return x == 0; });
}

IntMatrix::IntMatrix(std::size_t rows, std::size_t cols, Int fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

IntMatrix::IntMatrix(std::initializer_list<std::initializer_list<Int>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

IntMatrix IntMatrix::identity(std::size_t n) {
  IntMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

IntMatrix IntMatrix::from_columns(const std::vector<IntVec>& cols, std::size_t rows) {
  IntMatrix m(rows, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].size() != rows) throw DimensionMismatch("column length mismatch");
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
  }
  return m;
}

IntVec IntMatrix::row(std::size_t i) const {
  return IntVec(data_.begin() + i * cols_, data_.begin() + (i + 1) * cols_);
}

IntVec IntMatrix::column(std::size_t j) const {
  IntVec c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

IntMatrix IntMatrix::operator+(const IntMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("matrix sum shape");
  IntMatrix r(rows_, cols_);
  for (std::size_t k = 0; k < data_.size(); ++k) r.data_[k] = checked_add(data_[k], o.data_[k]);
  return r;
}

IntMatrix IntMatrix::operator-(const IntMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("matrix difference shape");
  IntMatrix r(rows_, cols_);
  for (std::size_t k = 0; k < data_.size(); ++k) r.data_[k] = checked_sub(data_[k], o.data_[k]);
  return r;
}

IntMatrix IntMatrix::operator*(const IntMatrix& o) const {
  if (cols_ != o.rows_) throw DimensionMismatch("matrix product shape");
  IntMatrix r(rows_, o.cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = 0; k < cols_; ++k) {
      Int a = (*this)(i, k);
      if (a == 0) continue;
      for (std::size_t j = 0; j < o.cols_; ++j)
        r(i, j) = checked_add(r(i, j), checked_mul(a, o(k, j)));
    }
  return r;
}

IntMatrix IntMatrix::scaled(Int c) const {
  IntMatrix r(rows_, cols_);
  for (std::size_t k = 0; k < data_.size(); ++k) r.data_[k] = checked_mul(c, data_[k]);
  return r;
}

IntVec IntMatrix::operator*(const IntVec& v) const {
  if (cols_ != v.size()) throw DimensionMismatch("matrix-vector shape");
  IntVec r(rows_, 0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      r[i] = checked_add(r[i], checked_mul((*this)(i, j), v[j]));
  return r;
}

IntMatrix IntMatrix::transpose() const {
  IntMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool IntMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](Int x) { return x == 0; });
}

bool IntMatrix::is_unipotent() const {
  if (!square()) return false;
  IntMatrix n = *this - identity(rows_);
  IntMatrix p = identity(rows_);
  try {
    for (std::size_t k = 0; k < rows_; ++k) p = p * n;
  } catch (const OverflowError&) {
    return false;
  }
  return p.is_zero();
}

IntMatrix IntMatrix::pow(Int n) const {
  if (!square()) throw DimensionMismatch("power of non-square matrix");
  if (n < 0) throw PreconditionError("IntMatrix::pow needs n >= 0");
  IntMatrix r = identity(rows_);
  for (Int k = 0; k < n; ++k) r = r * *this;
  return r;
}

IntMatrix IntMatrix::submatrix(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) const {
  IntMatrix s(r1 - r0, c1 - c0);
  for (std::size_t i = r0; i < r1; ++i)
    for (std::size_t j = c0; j < c1; ++j) s(i - r0, j - c0) = (*this)(i, j);
  return s;
}

std::string IntMatrix::to_string() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < rows_; ++i) {
    if (i) os << ",";
    os << "[";
    for (std::size_t j = 0; j < cols_; ++j) {
      if (j) os << ",";
      os << (*this)(i, j);
    }
    os << "]";
  }
  os << "]";
  return os.str();
}

RatMatrix::RatMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, Rational(0)) {}

RatMatrix::RatMatrix(const IntMatrix& m) : RatMatrix(m.rows(), m.cols()) {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = Rational(static_cast<long>(m(i, j)));
}

RatMatrix RatMatrix::identity(std::size_t n) {
  RatMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

RatMatrix RatMatrix::operator*(const RatMatrix& o) const {
  if (cols_ != o.rows_) throw DimensionMismatch("matrix product shape");
  RatMatrix r(rows_, o.cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = 0; k < cols_; ++k) {
      if (sgn((*this)(i, k)) == 0) continue;
      for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += (*this)(i, k) * o(k, j);
    }
  return r;
}

RatVec RatMatrix::operator*(const IntVec& v) const {
  if (cols_ != v.size()) throw DimensionMismatch("matrix-vector shape");
  RatVec r(rows_, Rational(0));
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      if (v[j] != 0) r[i] += (*this)(i, j) * Rational(static_cast<long>(v[j]));
  return r;
}

RatVec RatMatrix::operator*(const RatVec& v) const {
  if (cols_ != v.size()) throw DimensionMismatch("matrix-vector shape");
  RatVec r(rows_, Rational(0));
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r[i] += (*this)(i, j) * v[j];
  return r;
}

bool RatMatrix::operator==(const RatMatrix& o) const {
  return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
}

RatMatrix RatMatrix::transpose() const {
  RatMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Rational RatMatrix::determinant() const {
  if (rows_ != cols_) throw DimensionMismatch("determinant of non-square matrix");
  RatMatrix a = *this;
  Rational det = 1;
  const std::size_t n = rows_;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && sgn(a(p, c)) == 0) ++p;
    if (p == n) return 0;
    if (p != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(c, j));
      det = -det;
    }
    det *= a(c, c);
    for (std::size_t i = c + 1; i < n; ++i) {
      if (sgn(a(i, c)) == 0) continue;
      Rational f = a(i, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(i, j) -= f * a(c, j);
    }
  }
  return det;
}

RatMatrix RatMatrix::inverse() const {
  if (rows_ != cols_) throw DimensionMismatch("inverse of non-square matrix");
  const std::size_t n = rows_;
  RatMatrix a = *this;
  RatMatrix inv = identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && sgn(a(p, c)) == 0) ++p;
    if (p == n) throw SingularMatrix("matrix is singular");
    if (p != c)
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(p, j), a(c, j));
        std::swap(inv(p, j), inv(c, j));
      }
    Rational piv = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= piv;
      inv(c, j) /= piv;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || sgn(a(i, c)) == 0) continue;
      Rational f = a(i, c);
      for (std::size_t j = 0; j < n; ++j) {
        a(i, j) -= f * a(c, j);
        inv(i, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

bool RatMatrix::is_integral() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const Rational& q) { return q.get_den() == 1; });
}

IntMatrix RatMatrix::to_int() const {
  IntMatrix m(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) {
      if ((*this)(i, j).get_den() != 1) throw PreconditionError("matrix entry is not an integer");
      m(i, j) = nilrec::to_int((*this)(i, j).get_num());
    }
  return m;
}

std::string RatMatrix::to_string() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < rows_; ++i) {
    if (i) os << ",";
    os << "[";
    for (std::size_t j = 0; j < cols_; ++j) {
      if (j) os << ",";
      os << (*this)(i, j).get_str();
    }
    os << "]";
  }
  os << "]";
  return os.str();
}

bool integral_vector(const RatVec& v, IntVec* out) {
  IntVec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].get_den() != 1) return false;
    if (!mpz_fits_slong_p(v[i].get_num_mpz_t())) return false;
    r[i] = v[i].get_num().get_si();
  }
  if (out) *out = std::move(r);
  return true;
}

namespace {

// Reduced row echelon form in place; returns pivot columns.
std::vector<std::size_t> rref(RatMatrix& a) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
    std::size_t p = r;
    while (p < a.rows() && sgn(a(p, c)) == 0) ++p;
    if (p == a.rows()) continue;
    if (p != r)
      for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(p, j), a(r, j));
    Rational piv = a(r, c);
    for (std::size_t j = 0; j < a.cols(); ++j) a(r, j) /= piv;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (i == r || sgn(a(i, c)) == 0) continue;
      Rational f = a(i, c);
      for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) -= f * a(r, j);
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

}  // namespace

std::vector<RatVec> rational_kernel(const RatMatrix& m) {
  RatMatrix a = m;
  auto pivots = rref(a);
  std::vector<bool> is_pivot(a.cols(), false);
  for (auto c : pivots) is_pivot[c] = true;
  std::vector<RatVec> basis;
  for (std::size_t f = 0; f < a.cols(); ++f) {
    if (is_pivot[f]) continue;
    RatVec v(a.cols(), Rational(0));
    v[f] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -a(r, f);
    basis.push_back(std::move(v));
  }
  return basis;
}

Int rank(const RatMatrix& m) {
  RatMatrix a = m;
  return static_cast<Int>(rref(a).size());
}

IntVec primitive_integer_vector(const RatVec& v) {
  mpz_class l = 1;
  for (const auto& q : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
  std::vector<mpz_class> z(v.size());
  mpz_class g = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    z[i] = v[i].get_num() * (l / v[i].get_den());
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), z[i].get_mpz_t());
  }
  IntVec out(v.size(), 0);
  if (g == 0) return out;
  int sign = 0;
  for (const auto& x : z)
    if (x != 0) {
      sign = sgn(x);
      break;
    }
  for (std::size_t i = 0; i < v.size(); ++i) {
    mpz_class q = z[i] / g;
    if (sign < 0) q = -q;
    out[i] = to_int(q);
  }
  return out;
}

IntVec primitive_integer_vector(const IntVec& v) {
  RatVec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = Rational(static_cast<long>(v[i]));
  return primitive_integer_vector(r);
}

namespace {

using ZMat = std::vector<std::vector<mpz_class>>;

ZMat to_z(const IntMatrix& a) {
  ZMat z(a.rows(), std::vector<mpz_class>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) z[i][j] = static_cast<long>(a(i, j));
  return z;
}

IntMatrix from_z(const ZMat& z, std::size_t rows, std::size_t cols) {
  IntMatrix a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) a(i, j) = to_int(z[i][j]);
  return a;
}

ZMat z_identity(std::size_t n) {
  ZMat z(n, std::vector<mpz_class>(n, 0));
  for (std::size_t i = 0; i < n; ++i) z[i][i] = 1;
  return z;
}

// floor division
mpz_class fdiv(const mpz_class& a, const mpz_class& b) {
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

void row_combine(ZMat& a, std::size_t i, std::size_t k, const mpz_class& p, const mpz_class& q,
                 const mpz_class& r, const mpz_class& s) {
  // (row_i, row_k) <- (p row_i + q row_k, r row_i + s row_k)
  for (std::size_t j = 0; j < a[i].size(); ++j) {
    mpz_class x = a[i][j], y = a[k][j];
    a[i][j] = p * x + q * y;
    a[k][j] = r * x + s * y;
  }
}

ZMat row_hermite_z(ZMat a, ZMat* w) {
  const std::size_t m = a.size();
  const std::size_t n = m ? a[0].size() : 0;
  if (w) *w = z_identity(m);
  std::size_t r = 0;
  for (std::size_t c = 0; c < n && r < m; ++c) {
    for (std::size_t i = r + 1; i < m; ++i) {
      if (a[i][c] == 0) continue;
      mpz_class g, s, t;
      mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), a[r][c].get_mpz_t(),
                 a[i][c].get_mpz_t());
      mpz_class u = a[r][c] / g, v = a[i][c] / g;
      row_combine(a, r, i, s, t, -v, u);
      if (w) row_combine(*w, r, i, s, t, -v, u);
    }
    if (a[r][c] == 0) continue;
    if (a[r][c] < 0) {
      for (auto& x : a[r]) x = -x;
      if (w)
        for (auto& x : (*w)[r]) x = -x;
    }
    for (std::size_t i = 0; i < r; ++i) {
      mpz_class q = fdiv(a[i][c], a[r][c]);
      if (q == 0) continue;
      for (std::size_t j = 0; j < n; ++j) a[i][j] -= q * a[r][j];
      if (w)
        for (std::size_t j = 0; j < m; ++j) (*w)[i][j] -= q * (*w)[r][j];
    }
    ++r;
  }
  return a;
}

}  // namespace

IntMatrix row_hermite_form(const IntMatrix& a, IntMatrix* W) {
  ZMat w;
  ZMat h = row_hermite_z(to_z(a), W ? &w : nullptr);
  if (W) *W = from_z(w, a.rows(), a.rows());
  return from_z(h, a.rows(), a.cols());
}

IntMatrix column_hermite_form(const IntMatrix& gens) {
  const std::size_t r = gens.rows();
  if (gens.cols() == 0) return IntMatrix(r, 0);
  ZMat h = row_hermite_z(to_z(gens.transpose()), nullptr);
  std::vector<IntVec> cols;
  for (const auto& row : h) {
    bool nz = std::any_of(row.begin(), row.end(), [](const mpz_class& x) { return x != 0; });
    if (!nz) continue;
    IntVec c(r);
    for (std::size_t i = 0; i < r; ++i) c[i] = to_int(row[i]);
    cols.push_back(std::move(c));
  }
  return IntMatrix::from_columns(cols, r);
}

SmithForm smith_form(const IntMatrix& in) {
  const std::size_t m = in.rows(), n = in.cols();
  ZMat a = to_z(in);
  ZMat U = z_identity(m), V = z_identity(n);
  auto swap_rows = [&](std::size_t i, std::size_t k) {
    std::swap(a[i], a[k]);
    std::swap(U[i], U[k]);
  };
  auto swap_cols = [&](std::size_t j, std::size_t k) {
    for (auto& row : a) std::swap(row[j], row[k]);
    for (auto& row : V) std::swap(row[j], row[k]);
  };
  auto add_row = [&](std::size_t dst, std::size_t src, const mpz_class& q) {
    for (std::size_t j = 0; j < n; ++j) a[dst][j] += q * a[src][j];
    for (std::size_t j = 0; j < m; ++j) U[dst][j] += q * U[src][j];
  };
  auto add_col = [&](std::size_t dst, std::size_t src, const mpz_class& q) {
    for (std::size_t i = 0; i < m; ++i) a[i][dst] += q * a[i][src];
    for (std::size_t i = 0; i < n; ++i) V[i][dst] += q * V[i][src];
  };

  std::size_t t = 0;
  for (; t < std::min(m, n); ++t) {
    for (;;) {
      // Smallest nonzero entry of the trailing block goes to (t, t).
      std::size_t bi = m, bj = n;
      for (std::size_t i = t; i < m; ++i)
        for (std::size_t j = t; j < n; ++j)
          if (a[i][j] != 0 && (bi == m || abs(a[i][j]) < abs(a[bi][bj]))) {
            bi = i;
            bj = j;
          }
      if (bi == m) goto done;
      if (bi != t) swap_rows(bi, t);
      if (bj != t) swap_cols(bj, t);
      bool clean = true;
      for (std::size_t i = t + 1; i < m; ++i)
        if (a[i][t] != 0) {
          add_row(i, t, -fdiv(a[i][t], a[t][t]));
          if (a[i][t] != 0) clean = false;
        }
      for (std::size_t j = t + 1; j < n; ++j)
        if (a[t][j] != 0) {
          add_col(j, t, -fdiv(a[t][j], a[t][t]));
          if (a[t][j] != 0) clean = false;
        }
      if (!clean) continue;
      std::size_t bad = m;
      for (std::size_t i = t + 1; i < m && bad == m; ++i)
        for (std::size_t j = t + 1; j < n; ++j)
          if (a[i][j] % a[t][t] != 0) {
            bad = i;
            break;
          }
      if (bad == m) break;
      add_row(t, bad, 1);
    }
    if (a[t][t] < 0) {
      for (auto& x : a[t]) x = -x;
      for (auto& x : U[t]) x = -x;
    }
  }
done:
  SmithForm s;
  s.U = from_z(U, m, m);
  s.V = from_z(V, n, n);
  for (std::size_t i = 0; i < std::min(m, n); ++i) {
    if (a[i][i] == 0) break;
    s.diag.push_back(to_int(a[i][i]));
  }
  s.rank = s.diag.size();
  s.U_inv = RatMatrix(s.U).inverse().to_int();
  s.V_inv = RatMatrix(s.V).inverse().to_int();
  return s;
}

bool is_unimodular(const IntMatrix& m) {
  if (!m.square()) return false;
  Rational d = RatMatrix(m).determinant();
  return d == 1 || d == -1;
}

}  // namespace nilrec
