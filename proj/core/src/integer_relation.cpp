#include "nilrec/integer_relation.hpp"

#include <cmath>

namespace nilrec {

std::vector<IntVec> integer_kernel_basis(const std::vector<ExactReal>& xs) {
  if (xs.empty()) throw PreconditionError("integer_relation needs at least one value");
  BasisPtr basis;
  for (const auto& x : xs) {
    if (!x.basis()) continue;
    if (basis && !(basis == x.basis() || basis->same_as(*x.basis())))
      throw PreconditionError("values are declared over different bases");
    basis = x.basis();
  }
  std::size_t rows = basis ? basis->size() : 1;
  RatMatrix m(rows, xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = xs[j].coeff(i);
  std::vector<IntVec> out;
  for (const auto& v : rational_kernel(m)) out.push_back(primitive_integer_vector(v));
  return out;
}

std::optional<IntVec> integer_relation(const std::vector<ExactReal>& xs, Int bound) {
  if (bound < 1) throw PreconditionError("integer_relation bound must be >= 1");
  auto basis = integer_kernel_basis(xs);
  if (basis.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < basis.size(); ++i)
    if (max_abs(basis[i]) < max_abs(basis[best])) best = i;
  return basis[best];
}

namespace {

// Visits integer vectors with max|k_i| == h in lexicographic order.
template <class F>
bool for_each_shell_vector(std::size_t n, Int h, IntVec& cur, std::size_t pos, bool on_shell,
                           F&& f) {
  if (pos == n) return on_shell ? f(cur) : false;
  for (Int x = -h; x <= h; ++x) {
    bool edge = x == -h || x == h;
    if (!on_shell && !edge && pos + 1 == n) continue;
    cur[pos] = x;
    if (for_each_shell_vector(n, h, cur, pos + 1, on_shell || edge, f)) return true;
  }
  return false;
}

}  // namespace

std::optional<IntVec> integer_relation(const std::vector<double>& xs, Int bound, double tol) {
  if (xs.empty()) throw PreconditionError("integer_relation needs at least one value");
  if (bound < 1) throw PreconditionError("integer_relation bound must be >= 1");
  double work = std::pow(2.0 * static_cast<double>(bound) + 1.0, static_cast<double>(xs.size()));
  if (work > 2e8) throw PreconditionError("floating relation search space too large");
  IntVec cur(xs.size(), 0);
  std::optional<IntVec> found;
  for (Int h = 1; h <= bound && !found; ++h) {
    for_each_shell_vector(xs.size(), h, cur, 0, false, [&](const IntVec& k) {
      long double s = 0;
      for (std::size_t i = 0; i < k.size(); ++i) s += static_cast<long double>(k[i]) * xs[i];
      if (std::fabs(static_cast<double>(s)) > tol) return false;
      for (Int x : k) {
        if (x == 0) continue;
        if (x < 0) return false;  // keep the representative with a positive leading entry
        break;
      }
      found = k;
      return true;
    });
  }
  return found;
}

std::optional<IntVec> integer_relation(const std::vector<Scalar>& xs, Int bound, double tol) {
  if (xs.empty()) throw PreconditionError("integer_relation needs at least one value");
  bool exact = is_exact(xs[0]);
  for (const auto& x : xs)
    if (is_exact(x) != exact) throw MixedModeError("exact and floating inputs mixed");
  if (exact) {
    std::vector<ExactReal> e;
    for (const auto& x : xs) e.push_back(std::get<ExactReal>(x));
    return integer_relation(e, bound);
  }
  std::vector<double> f;
  for (const auto& x : xs) f.push_back(std::get<double>(x));
  return integer_relation(f, bound, tol);
}

}  // namespace nilrec
