#include "nilrec/affine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace nilrec {

namespace {

mpz_class big_binomial(Int n, Int k) {
  if (k < 0) return 0;
  mpz_class num = 1, den = 1;
  for (Int i = 0; i < k; ++i) {
    num *= mpz_class(static_cast<long>(n - i));
    den *= mpz_class(static_cast<long>(i + 1));
  }
  return num / den;
}

BigMatrix big_zero(std::size_t n) { return BigMatrix(n, std::vector<mpz_class>(n, 0)); }

void add_scaled(BigMatrix& acc, const IntMatrix& m, const mpz_class& c) {
  if (c == 0) return;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0) acc[i][j] += c * static_cast<long>(m(i, j));
}

std::vector<IntMatrix> nilpotent_powers(const IntMatrix& a) {
  const std::size_t r = a.rows();
  IntMatrix n = a - IntMatrix::identity(r);
  std::vector<IntMatrix> p{IntMatrix::identity(r)};
  for (std::size_t j = 1; j < r; ++j) {
    IntMatrix next = p.back() * n;
    if (next.is_zero()) break;
    p.push_back(std::move(next));
  }
  return p;
}

ExactReal scale_big(const ExactReal& x, const mpz_class& c) { return x.scaled(Rational(c)); }

}  // namespace

TorusPoint apply_matrix(const IntMatrix& m, const TorusPoint& x) {
  if (m.cols() != x.dim()) throw DimensionMismatch("matrix does not act on this torus");
  if (x.is_exact()) {
    const auto& c = x.exact_coords();
    std::vector<ExactReal> y(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (m(i, j) != 0) y[i] += c[j].scaled(m(i, j));
    return TorusPoint::exact(std::move(y));
  }
  const auto& c = x.float_coords();
  std::vector<double> y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    long double s = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += static_cast<long double>(m(i, j)) * c[j];
    y[i] = static_cast<double>(s - std::floor(s));
  }
  return TorusPoint::floating(std::move(y));
}

TorusPoint apply_matrix(const BigMatrix& m, const TorusPoint& x) {
  if (m.empty() || m[0].size() != x.dim()) throw DimensionMismatch("matrix does not act on this torus");
  if (x.is_exact()) {
    const auto& c = x.exact_coords();
    std::vector<ExactReal> y(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j)
        if (m[i][j] != 0) y[i] += scale_big(c[j], m[i][j]);
    return TorusPoint::exact(std::move(y));
  }
  const auto& c = x.float_coords();
  std::vector<double> y(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    long double s = 0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      long double t = static_cast<long double>(m[i][j].get_d()) * c[j];
      s += t - std::floor(t);
    }
    y[i] = static_cast<double>(s - std::floor(s));
  }
  return TorusPoint::floating(std::move(y));
}

IntMatrix to_int_matrix(const BigMatrix& m) {
  IntMatrix r(m.size(), m.empty() ? 0 : m[0].size());
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j) r(i, j) = to_int(m[i][j]);
  return r;
}

IntMatrix unipotent_inverse(const IntMatrix& a) {
  auto p = nilpotent_powers(a);
  IntMatrix inv(a.rows(), a.rows());
  for (std::size_t j = 0; j < p.size(); ++j) inv = inv + (j % 2 ? p[j].scaled(-1) : p[j]);
  return inv;
}

BigMatrix unipotent_power(const IntMatrix& a, Int n) {
  if (!a.is_unipotent()) throw PreconditionError("closed-form power needs a unipotent matrix");
  if (n < 0) return unipotent_power(unipotent_inverse(a), checked_neg(n));
  auto p = nilpotent_powers(a);
  BigMatrix acc = big_zero(a.rows());
  for (std::size_t j = 0; j < p.size(); ++j) add_scaled(acc, p[j], big_binomial(n, static_cast<Int>(j)));
  return acc;
}

BigMatrix unipotent_power_sum(const IntMatrix& a, Int n) {
  if (n < 0) throw PreconditionError("power sum needs n >= 0");
  if (!a.is_unipotent()) throw PreconditionError("closed-form power needs a unipotent matrix");
  auto p = nilpotent_powers(a);
  BigMatrix acc = big_zero(a.rows());
  for (std::size_t j = 0; j < p.size(); ++j)
    add_scaled(acc, p[j], big_binomial(n, static_cast<Int>(j) + 1));
  return acc;
}

AffineMap::AffineMap(IntMatrix a, TorusPoint alpha, bool unipotent)
    : a_(std::move(a)), alpha_(std::move(alpha)), unipotent_(unipotent) {
  if (!a_.square() || a_.rows() != alpha_.dim())
    throw DimensionMismatch("matrix and translation dimensions differ");
}

AffineMap::AffineMap(IntMatrix a, TorusPoint alpha) : AffineMap(std::move(a), std::move(alpha), true) {
  if (!a_.is_unipotent()) throw PreconditionError("matrix " + a_.to_string() + " is not unipotent");
}

AffineMap AffineMap::unchecked(IntMatrix a, TorusPoint alpha) {
  bool u = a.is_unipotent();
  return AffineMap(std::move(a), std::move(alpha), u);
}

AffineMap AffineMap::translation(TorusPoint alpha) {
  std::size_t r = alpha.dim();
  return AffineMap(IntMatrix::identity(r), std::move(alpha), true);
}

AffineMap AffineMap::identity(std::size_t r, bool exact) {
  return translation(TorusPoint::zero(r, exact));
}

bool AffineMap::is_identity() const {
  return is_translation() && alpha_ == TorusPoint::zero(dim(), is_exact());
}

TorusPoint AffineMap::apply(const TorusPoint& x) const { return apply_matrix(a_, x) + alpha_; }

AffineMap AffineMap::compose(const AffineMap& inner) const {
  if (dim() != inner.dim()) throw DimensionMismatch("composing maps on different tori");
  return unchecked(a_ * inner.a_, apply_matrix(a_, inner.alpha_) + alpha_);
}

AffineMap AffineMap::inverse() const {
  IntMatrix inv = unipotent_ ? unipotent_inverse(a_) : RatMatrix(a_).inverse().to_int();
  return AffineMap(inv, -apply_matrix(inv, alpha_), unipotent_);
}

AffineMap AffineMap::power(Int n) const {
  if (!unipotent_) throw PreconditionError("closed-form power needs a unipotent matrix");
  if (n < 0) return inverse().power(checked_neg(n));
  IntMatrix an = to_int_matrix(unipotent_power(a_, n));
  TorusPoint t = apply_matrix(unipotent_power_sum(a_, n), alpha_);
  return AffineMap(std::move(an), std::move(t), true);
}

TorusPoint AffineMap::power_apply(Int n, const TorusPoint& x) const {
  if (!unipotent_) throw PreconditionError("closed-form power needs a unipotent matrix");
  if (x.dim() != dim()) throw DimensionMismatch("point does not live on this torus");
  if (x.is_exact() != is_exact()) throw MixedModeError("exact map applied to floating point or vice versa");
  if (n == 0) return x;
  if (n < 0) return inverse().power_apply(checked_neg(n), x);
  return apply_matrix(unipotent_power(a_, n), x) + apply_matrix(unipotent_power_sum(a_, n), alpha_);
}

TorusPoint commutator_translation(const AffineMap& g, const AffineMap& h) {
  if (g.dim() != h.dim()) throw DimensionMismatch("commutator of maps on different tori");
  const std::size_t r = g.dim();
  IntMatrix ng = g.matrix() - IntMatrix::identity(r);
  IntMatrix nh = h.matrix() - IntMatrix::identity(r);
  return apply_matrix(ng, h.translation()) - apply_matrix(nh, g.translation());
}

AffineMap commutator_by_composition(const AffineMap& g, const AffineMap& h) {
  if (g.dim() != h.dim()) throw DimensionMismatch("commutator of maps on different tori");
  return g.compose(h).compose(g.inverse()).compose(h.inverse());
}

AffineMap commutator(const AffineMap& g, const AffineMap& h) {
  if (g.dim() != h.dim()) throw DimensionMismatch("commutator of maps on different tori");
  if (g.matrix() * h.matrix() == h.matrix() * g.matrix())
    return AffineMap::translation(commutator_translation(g, h));
  return commutator_by_composition(g, h);
}

SubtorusLattice::SubtorusLattice(std::size_t r, const IntMatrix& gens) : r_(r) {
  if (gens.rows() != r) throw DimensionMismatch("lattice generators have wrong length");
  gens_ = column_hermite_form(gens);
}

bool SubtorusLattice::contains(const SubtorusLattice& o) const {
  if (o.r_ != r_) return false;
  IntMatrix both(r_, gens_.cols() + o.gens_.cols());
  for (std::size_t i = 0; i < r_; ++i) {
    for (std::size_t j = 0; j < gens_.cols(); ++j) both(i, j) = gens_(i, j);
    for (std::size_t j = 0; j < o.gens_.cols(); ++j) both(i, gens_.cols() + j) = o.gens_(i, j);
  }
  return column_hermite_form(both) == gens_;
}

bool SubtorusLattice::contains(const IntVec& v) const {
  return contains(SubtorusLattice(r_, IntMatrix::from_columns({v}, r_)));
}

IntMatrix SubtorusLattice::quotient_projection(IntMatrix* section) const {
  const std::size_t k = rank();
  if (k == 0) {
    if (section) *section = IntMatrix::identity(r_);
    return IntMatrix::identity(r_);
  }
  SmithForm s = smith_form(gens_);
  IntMatrix p = s.U.submatrix(k, r_, 0, r_);
  IntMatrix q = s.U_inv.submatrix(0, r_, k, r_);
  IntMatrix w;
  IntMatrix ph = row_hermite_form(p, &w);
  if (section) *section = q * RatMatrix(w).inverse().to_int();
  return ph;
}

IntMatrix SubtorusLattice::saturated_generators() const {
  const std::size_t k = rank();
  if (k == 0) return IntMatrix(r_, 0);
  SmithForm s = smith_form(gens_);
  return column_hermite_form(s.U_inv.submatrix(0, r_, 0, k));
}

bool SubtorusLattice::contains_point(const TorusPoint& x) const {
  IntMatrix p = quotient_projection();
  TorusPoint y = apply_matrix(p, x);
  if (y.is_exact()) {
    for (const auto& c : y.exact_coords())
      if (!c.is_zero()) return false;
    return true;
  }
  return torus_norm(y) < 1e-9;
}

namespace {

bool translation_vanishes(const TorusPoint& t, double tol) {
  if (t.is_exact()) {
    for (const auto& c : t.exact_coords())
      if (!c.is_zero()) return false;
    return true;
  }
  return torus_norm(t) <= tol;
}

IntMatrix stack_columns(const std::vector<IntMatrix>& blocks, std::size_t r) {
  std::size_t cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  IntMatrix m(r, cols);
  std::size_t off = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) m(i, off + j) = b(i, j);
    off += b.cols();
  }
  return m;
}

}  // namespace

LowerCentralSeries lower_central_series(const std::vector<AffineMap>& maps) {
  LowerCentralSeries out;
  if (maps.empty()) return out;
  const std::size_t r = maps[0].dim();
  std::vector<IntMatrix> ns;
  for (const auto& m : maps) ns.push_back(m.matrix() - IntMatrix::identity(r));
  SubtorusLattice g(r, stack_columns(ns, r));
  while (!g.trivial()) {
    out.chain.push_back(g);
    if (out.chain.size() > r + 1) throw InternalBoundBreach("lower central series does not terminate");
    std::vector<IntMatrix> next;
    for (const auto& n : ns) next.push_back(n * g.generators());
    g = SubtorusLattice(r, stack_columns(next, r));
  }
  out.step = 1 + static_cast<int>(out.chain.size());
  return out;
}

AffineSystem::AffineSystem(std::vector<AffineMap> maps, double float_tol) : maps_(std::move(maps)) {
  if (maps_.empty()) throw PreconditionError("a system needs at least one map");
  const std::size_t r = maps_[0].dim();
  exact_ = maps_[0].is_exact();
  for (const auto& m : maps_) {
    if (m.dim() != r) throw DimensionMismatch("maps act on tori of different dimension");
    if (m.is_exact() != exact_) throw MixedModeError("exact and floating maps mixed in one system");
    if (!m.is_unipotent()) throw PreconditionError("system map matrix is not unipotent");
  }
  for (std::size_t i = 0; i < maps_.size(); ++i)
    for (std::size_t j = i + 1; j < maps_.size(); ++j) {
      const auto& a = maps_[i].matrix();
      const auto& b = maps_[j].matrix();
      if (!(a * b == b * a))
        throw PreconditionError("matrices of maps " + std::to_string(i + 1) + " and " +
                                std::to_string(j + 1) + " do not commute");
      if (!translation_vanishes(commutator_translation(maps_[i], maps_[j]), float_tol))
        throw PreconditionError("maps " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                " do not commute as transformations");
    }
  lcs_ = lower_central_series(maps_);
}

TorusPoint AffineSystem::power_apply(const IntVec& n, const TorusPoint& x) const {
  if (n.size() != maps_.size()) throw DimensionMismatch("word length differs from group dimension");
  TorusPoint y = x;
  for (std::size_t i = maps_.size(); i-- > 0;)
    if (n[i] != 0) y = maps_[i].power_apply(n[i], y);
  return y;
}

AffineMap AffineSystem::word(const IntVec& n) const {
  if (n.size() != maps_.size()) throw DimensionMismatch("word length differs from group dimension");
  AffineMap w = AffineMap::identity(torus_dim(), exact_);
  for (std::size_t i = 0; i < maps_.size(); ++i)
    if (n[i] != 0) w = w.compose(maps_[i].power(n[i]));
  return AffineMap(w.matrix(), w.translation());
}

std::vector<TorusPoint> AffineSystem::translations() const {
  std::vector<TorusPoint> t;
  for (const auto& m : maps_) t.push_back(m.translation());
  return t;
}

namespace {

// Per-map rational coefficient tables: coeff[c][b] of alpha_i's coordinate c.
struct RotationData {
  std::size_t n = 0;
  std::size_t nb = 1;
  std::vector<std::vector<RatVec>> q;  // [i][c] -> coefficients over the basis
};

RotationData rotation_data(const std::vector<TorusPoint>& alphas) {
  RotationData d;
  if (alphas.empty()) throw PreconditionError("no rotation vectors given");
  d.n = alphas[0].dim();
  BasisPtr basis;
  for (const auto& a : alphas) {
    if (!a.is_exact()) throw MixedModeError("ergodicity criterion needs exact translations");
    if (a.dim() != d.n) throw DimensionMismatch("rotation vectors of different dimension");
    for (const auto& c : a.exact_coords())
      if (c.basis()) {
        if (basis && !(basis == c.basis() || basis->same_as(*c.basis())))
          throw PreconditionError("values are declared over different bases");
        basis = c.basis();
      }
  }
  d.nb = basis ? basis->size() : 1;
  for (const auto& a : alphas) {
    std::vector<RatVec> rows;
    for (const auto& c : a.exact_coords()) {
      RatVec v(d.nb);
      for (std::size_t b = 0; b < d.nb; ++b) v[b] = c.coeff(b);
      rows.push_back(std::move(v));
    }
    d.q.push_back(std::move(rows));
  }
  return d;
}

bool witness_ok(const RotationData& d, const IntVec& k) {
  if (is_zero(k)) return false;
  for (const auto& rows : d.q) {
    for (std::size_t b = 0; b < d.nb; ++b) {
      Rational s = 0;
      for (std::size_t c = 0; c < d.n; ++c)
        if (k[c] != 0) s += rows[c][b] * Rational(static_cast<long>(k[c]));
      if (b == 0 ? s.get_den() != 1 : sgn(s) != 0) return false;
    }
  }
  return true;
}

template <class F>
bool shell_scan(std::size_t n, Int h, IntVec& cur, std::size_t pos, bool on_shell, F&& f) {
  if (pos == n) return on_shell && f(cur);
  for (Int x = -h; x <= h; ++x) {
    bool edge = x == -h || x == h;
    if (!on_shell && !edge && pos + 1 == n) continue;
    cur[pos] = x;
    if (shell_scan(n, h, cur, pos + 1, on_shell || edge, f)) return true;
  }
  return false;
}

}  // namespace

bool is_ergodicity_witness(const std::vector<TorusPoint>& alphas, const IntVec& k) {
  RotationData d = rotation_data(alphas);
  if (k.size() != d.n) throw DimensionMismatch("witness length differs from torus dimension");
  return witness_ok(d, k);
}

ErgodicityResult rotation_is_ergodic(const std::vector<TorusPoint>& alphas, Int bound) {
  RotationData d = rotation_data(alphas);
  // Irrational parts must cancel exactly: kernel of the stacked coefficient rows.
  std::size_t rows = alphas.size() * (d.nb - 1);
  RatMatrix m(std::max<std::size_t>(rows, 1), d.n);
  std::size_t row = 0;
  for (const auto& q : d.q)
    for (std::size_t b = 1; b < d.nb; ++b, ++row)
      for (std::size_t c = 0; c < d.n; ++c) m(row, c) = q[c][b];
  auto kernel = rational_kernel(m);
  ErgodicityResult res;
  if (kernel.empty()) return res;
  res.ergodic = false;

  // Small witness by max-norm shells when the box is affordable.
  double box = std::pow(2.0 * static_cast<double>(std::max<Int>(bound, 1)) + 1.0,
                        static_cast<double>(d.n));
  if (box <= 2.5e6) {
    IntVec cur(d.n, 0);
    for (Int h = 1; h <= bound && !res.witness; ++h)
      shell_scan(d.n, h, cur, 0, false, [&](const IntVec& k) {
        for (Int x : k) {
          if (x == 0) continue;
          if (x < 0) return false;
          break;
        }
        if (!witness_ok(d, k)) return false;
        res.witness = k;
        return true;
      });
  }
  if (!res.witness) {
    IntVec k = primitive_integer_vector(kernel[0]);
    mpz_class l = 1;
    for (const auto& q : d.q) {
      Rational s = 0;
      for (std::size_t c = 0; c < d.n; ++c) s += q[c][0] * Rational(static_cast<long>(k[c]));
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), s.get_den_mpz_t());
    }
    Int scale = to_int(l);
    for (auto& x : k) x = checked_mul(x, scale);
    res.witness = k;
  }
  if (!witness_ok(d, *res.witness)) throw InternalBoundBreach("ergodicity witness failed verification");
  return res;
}

AffineSystem reparametrize(const AffineSystem& system, const IntMatrix& k) {
  const std::size_t d = system.group_dim();
  if (k.rows() != d || k.cols() != d) throw DimensionMismatch("reparametrization matrix must be d x d");
  if (sgn(RatMatrix(k).determinant()) == 0) throw SingularMatrix("reparametrization matrix is singular");
  return reparametrize_rectangular(system, k);
}

AffineSystem reparametrize_rectangular(const AffineSystem& system, const IntMatrix& k) {
  if (k.cols() != system.group_dim()) throw DimensionMismatch("reparametrization matrix has wrong width");
  if (rank(RatMatrix(k)) != static_cast<Int>(k.rows()))
    throw SingularMatrix("reparametrization matrix lacks full row rank");
  std::vector<AffineMap> maps;
  for (std::size_t i = 0; i < k.rows(); ++i) maps.push_back(system.word(k.row(i)));
  return AffineSystem(std::move(maps));
}

AffineSystem permute(const AffineSystem& system, const std::vector<std::size_t>& perm) {
  if (perm.size() != system.group_dim()) throw DimensionMismatch("permutation has wrong length");
  std::vector<bool> seen(perm.size(), false);
  std::vector<AffineMap> maps;
  for (auto p : perm) {
    if (p >= perm.size() || seen[p]) throw PreconditionError("not a permutation");
    seen[p] = true;
    maps.push_back(system.map(p));
  }
  return AffineSystem(std::move(maps));
}

FactorResult factor_by_last_commutator(const AffineSystem& system) {
  if (system.step() < 2) throw PreconditionError("factoring by the last commutator needs step >= 2");
  const SubtorusLattice& gs = system.lcs().chain.back();
  IntMatrix q;
  IntMatrix p = gs.quotient_projection(&q);
  std::vector<AffineMap> maps;
  for (const auto& m : system.maps()) {
    IntMatrix a = p * m.matrix() * q;
    if (!(a * p == p * m.matrix())) throw InternalBoundBreach("quotient map does not intertwine");
    maps.emplace_back(a, apply_matrix(p, m.translation()));
  }
  AffineSystem factor(std::move(maps));
  if (factor.step() != system.step() - 1) throw InternalBoundBreach("factor step is not s-1");
  return FactorResult{std::move(factor), p, q, gs};
}

TorusFactorTower maximal_torus_factor(const AffineSystem& system) {
  TorusFactorTower t;
  t.projection = IntMatrix::identity(system.torus_dim());
  AffineSystem cur = system;
  while (cur.step() >= 2) {
    FactorResult f = factor_by_last_commutator(cur);
    t.projection = f.projection * t.projection;
    cur = f.factor;
    t.levels.push_back(std::move(f));
  }
  t.rotation = cur.translations();
  return t;
}

}  // namespace nilrec
