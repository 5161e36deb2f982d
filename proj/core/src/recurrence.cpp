#include "nilrec/recurrence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace nilrec {

namespace {

using LMat = std::vector<long double>;

// Long double evaluation of words, used to screen candidates before the exact check.
class FastWord {
 public:
  explicit FastWord(const AffineSystem& s) : r_(s.torus_dim()) {
    for (const auto& m : s.maps()) {
      Map fm;
      IntMatrix n = m.matrix() - IntMatrix::identity(r_);
      IntMatrix p = IntMatrix::identity(r_);
      for (std::size_t j = 0; j < r_ && !p.is_zero(); ++j) {
        LMat lm(r_ * r_);
        for (std::size_t a = 0; a < r_; ++a)
          for (std::size_t b = 0; b < r_; ++b) lm[a * r_ + b] = static_cast<long double>(p(a, b));
        fm.npow.push_back(std::move(lm));
        p = p * n;
      }
      auto t = m.translation();
      for (std::size_t a = 0; a < r_; ++a)
        fm.alpha.push_back(t.is_exact() ? t.exact_coords()[a].eval().convert_to<long double>()
                                        : static_cast<long double>(t.float_coords()[a]));
      maps_.push_back(std::move(fm));
    }
  }

  // sum over coordinates of || (T^n x - x)_c ||
  long double distance(const IntVec& n, const std::vector<long double>& x) const {
    std::vector<long double> y = x, tmp(r_);
    for (std::size_t i = maps_.size(); i-- > 0;) {
      if (n[i] == 0) continue;
      const Map& m = maps_[i];
      std::fill(tmp.begin(), tmp.end(), 0.0L);
      long double bin = 1, bin1 = static_cast<long double>(n[i]);  // C(n, j), C(n, j+1)
      for (std::size_t j = 0; j < m.npow.size(); ++j) {
        const LMat& p = m.npow[j];
        for (std::size_t a = 0; a < r_; ++a) {
          long double s1 = 0, s2 = 0;
          for (std::size_t b = 0; b < r_; ++b) {
            s1 += p[a * r_ + b] * y[b];
            s2 += p[a * r_ + b] * m.alpha[b];
          }
          tmp[a] += reduce(bin * s1) + reduce(bin1 * s2);
        }
        bin = bin1;
        bin1 = bin1 * static_cast<long double>(n[i] - static_cast<Int>(j) - 1) / static_cast<long double>(j + 2);
      }
      for (std::size_t a = 0; a < r_; ++a) y[a] = reduce(tmp[a]);
    }
    long double d = 0;
    for (std::size_t a = 0; a < r_; ++a) {
      long double f = reduce(y[a] - x[a]);
      d += std::min(f, 1.0L - f);
    }
    return d;
  }

 private:
  static long double reduce(long double v) {
    long double f = v - floorl(v);
    return f >= 1.0L ? 0.0L : f;
  }
  struct Map {
    std::vector<LMat> npow;
    std::vector<long double> alpha;
  };
  std::size_t r_;
  std::vector<Map> maps_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Int column_sum_norm(const IntMatrix& m) {
  Int best = 0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    Int s = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) s = checked_add(s, m(i, j) < 0 ? -m(i, j) : m(i, j));
    best = std::max(best, s);
  }
  return best;
}

bool on_integers(const TorusPoint& b, std::size_t i) {
  if (b.is_exact()) return b.exact_coords()[i].is_zero();
  return torus_norm(b.float_coords()[i]) < 1e-12;
}

// All solutions z of K z = v mod Z^r with z_i = (centered(b_i) + k_i) / D_i,
// k_i in {-1, 0, 1}, mapped through `w` (r x q). Empty when v is not in the image.
std::vector<TorusPoint> congruence_candidates(const IntMatrix& k, const TorusPoint& v, const IntMatrix& w_of_z) {
  SmithForm s = smith_form(k);
  TorusPoint b = apply_matrix(s.U, v);
  for (std::size_t i = s.rank; i < b.dim(); ++i)
    if (!on_integers(b, i)) return {};
  std::size_t q = k.cols();
  IntMatrix w = w_of_z * s.V;
  std::vector<std::size_t> shiftable;
  for (std::size_t i = 0; i < s.rank; ++i)
    if (s.diag[i] > 1) shiftable.push_back(i);
  std::size_t combos = 1;
  for (std::size_t i = 0; i < shiftable.size() && combos < 729; ++i) combos *= 3;
  std::vector<TorusPoint> out;
  for (std::size_t c = 0; c < combos; ++c) {
    IntVec shift(q, 0);
    std::size_t code = c;
    for (std::size_t i = 0; i < shiftable.size() && code; ++i, code /= 3)
      shift[shiftable[i]] = static_cast<Int>(code % 3) - 1;
    if (v.is_exact()) {
      std::vector<ExactReal> z(q);
      for (std::size_t i = 0; i < s.rank; ++i)
        z[i] = (centered(b.exact_coords()[i]) + ExactReal(shift[i])) / Rational(s.diag[i]);
      std::vector<ExactReal> h(w.rows());
      for (std::size_t a = 0; a < w.rows(); ++a)
        for (std::size_t i = 0; i < s.rank; ++i)
          if (w(a, i) != 0) h[a] += z[i].scaled(w(a, i));
      out.push_back(TorusPoint::exact(std::move(h)));
    } else {
      std::vector<double> z(q, 0.0);
      for (std::size_t i = 0; i < s.rank; ++i)
        z[i] = (centered(b.float_coords()[i]) + static_cast<double>(shift[i])) / static_cast<double>(s.diag[i]);
      std::vector<double> h(w.rows(), 0.0);
      for (std::size_t a = 0; a < w.rows(); ++a)
        for (std::size_t i = 0; i < s.rank; ++i) h[a] += static_cast<double>(w(a, i)) * z[i];
      out.push_back(TorusPoint::floating(std::move(h)));
    }
  }
  return out;
}

// z itself (first candidate, no shifts), split into d blocks of q.
std::vector<TorusPoint> congruence_blocks(const IntMatrix& k, const TorusPoint& v, std::size_t d, std::size_t q) {
  auto c = congruence_candidates(k, v, IntMatrix::identity(k.cols()));
  if (c.empty()) return {};
  std::vector<TorusPoint> out;
  const TorusPoint& z = c.front();
  for (std::size_t i = 0; i < d; ++i) {
    if (z.is_exact()) {
      std::vector<ExactReal> part(z.exact_coords().begin() + static_cast<long>(i * q),
                                  z.exact_coords().begin() + static_cast<long>((i + 1) * q));
      out.push_back(TorusPoint::exact(std::move(part)));
    } else {
      std::vector<double> part(z.float_coords().begin() + static_cast<long>(i * q),
                               z.float_coords().begin() + static_cast<long>((i + 1) * q));
      out.push_back(TorusPoint::floating(std::move(part)));
    }
  }
  return out;
}

IntMatrix hyperplane_basis(const IntVec& v) {
  std::size_t d = v.size();
  IntMatrix row(1, d);
  for (std::size_t j = 0; j < d; ++j) row(0, j) = v[j];
  SmithForm s = smith_form(row);
  return s.V.submatrix(0, d, 1, d);
}

IntMatrix perm_matrix(const std::vector<std::size_t>& perm) {
  IntMatrix m(perm.size(), perm.size());
  for (std::size_t a = 0; a < perm.size(); ++a) m(perm[a], a) = 1;
  return m;
}

}  // namespace

double return_distance(const AffineSystem& system, const IntVec& n, const TorusPoint& x) {
  return torus_norm(system.power_apply(n, x) - x);
}

RecurrenceReport return_time_search(const AffineSystem& system, const LatticeSet& gen, const TorusPoint& x0,
                                    double eps, Int horizon, unsigned threads, const std::string& system_id) {
  if (!(eps > 0)) throw PreconditionError("eps must be positive");
  if (gen.dim() != system.group_dim()) throw DimensionMismatch("set and system differ in d");
  if (x0.dim() != system.torus_dim()) throw DimensionMismatch("base point has wrong dimension");
  auto t0 = std::chrono::steady_clock::now();
  RecurrenceReport rep;
  rep.system_id = system_id;
  rep.set = gen.provenance();
  rep.eps = eps;
  rep.base = x0;
  rep.horizon = horizon;
  rep.best_distance = std::numeric_limits<double>::infinity();

  FastWord fw(system);
  std::vector<long double> x;
  for (std::size_t a = 0; a < x0.dim(); ++a)
    x.push_back(x0.is_exact() ? x0.exact_coords()[a].eval().convert_to<long double>()
                              : static_cast<long double>(x0.float_coords()[a]));
  threads = std::max(1u, threads);
  const long double margin = 1e-6L;

  Int lo = 0, width = 16;
  while (lo <= horizon && !rep.found) {
    Int hi = std::min(horizon, lo + width - 1);
    auto block = gen.members_between(lo, hi);
    std::vector<long double> dist(block.size());
    auto work = [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) dist[k] = is_zero(block[k]) ? 2.0L : fw.distance(block[k], x);
    };
    if (threads == 1 || block.size() < 2048) {
      work(0, block.size());
    } else {
      std::vector<std::thread> pool;
      std::size_t chunk = (block.size() + threads - 1) / threads;
      for (unsigned t = 0; t < threads; ++t) {
        std::size_t b = std::min(block.size(), t * chunk), e = std::min(block.size(), b + chunk);
        pool.emplace_back(work, b, e);
      }
      for (auto& th : pool) th.join();
    }
    for (std::size_t k = 0; k < block.size(); ++k) {
      if (is_zero(block[k])) continue;
      ++rep.scanned;
      if (dist[k] < rep.best_distance) {
        rep.best_distance = static_cast<double>(dist[k]);
        rep.best = block[k];
      }
      if (dist[k] < static_cast<long double>(eps) + margin) {
        double exact = return_distance(system, block[k], x0);
        if (exact < eps) {
          rep.found = block[k];
          rep.distance = exact;
          break;
        }
      }
    }
    lo = hi + 1;
    if (block.size() < 20000) width = std::min<Int>(width * 2, 1 << 20);
    else if (block.size() > 200000) width = std::max<Int>(1, width / 2);
  }
  if (rep.found) {
    rep.best = rep.found;
    rep.best_distance = rep.distance;
  } else if (rep.best) {
    rep.best_distance = return_distance(system, *rep.best, x0);
  }
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

SubtorusLattice penultimate_subtorus(const AffineSystem& system) {
  int s = system.step();
  if (s >= 3) return system.lcs().chain[static_cast<std::size_t>(s - 3)];
  return SubtorusLattice(system.torus_dim(), IntMatrix::identity(system.torus_dim()));
}

TorusPoint commutator_map_psi(const AffineSystem& system, const std::vector<TorusPoint>& g) {
  if (g.size() != system.group_dim()) throw DimensionMismatch("need one element per generator");
  std::size_t r = system.torus_dim();
  SubtorusLattice below = penultimate_subtorus(system);
  bool exact = g.empty() ? system.is_exact() : g[0].is_exact();
  TorusPoint acc = TorusPoint::zero(r, exact);
  IntMatrix id = IntMatrix::identity(r);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i].dim() != r) throw DimensionMismatch("element has wrong dimension");
    if (!below.contains_point(g[i]))
      throw PreconditionError("g_" + std::to_string(i + 1) + " is not on G_{s-1}");
    acc = acc - apply_matrix(system.map(i).matrix() - id, g[i]);
  }
  return acc;
}

TorusPoint commutator_word(const AffineSystem& system, const TorusPoint& h, const IntVec& n) {
  if (n.size() != system.group_dim()) throw DimensionMismatch("word length differs from group dimension");
  AffineMap hm = AffineMap::translation(h);
  AffineMap acc = AffineMap::identity(system.torus_dim(), h.is_exact());
  for (std::size_t i = 0; i < n.size(); ++i)
    acc = acc.compose(commutator_by_composition(hm, system.map(i).power(n[i])));
  if (!acc.is_translation()) throw InternalBoundBreach("commutator word is not a translation");
  return acc.translation();
}

CommutatorApproximation approximate_last_commutator(const AffineSystem& system, const TorusPoint& v,
                                                    const IntVec& n, double eps, const CorrelationVector* p) {
  if (system.step() < 2) throw PreconditionError("system has no nontrivial commutator subgroup");
  if (n.size() != system.group_dim()) throw DimensionMismatch("n has wrong length");
  if (!(eps > 0)) throw PreconditionError("eps must be positive");
  const SubtorusLattice& gs = system.lcs().chain.back();
  if (v.dim() != system.torus_dim() || !gs.contains_point(v)) throw PreconditionError("v is not on G_s");
  std::size_t r = system.torus_dim(), d = system.group_dim();
  IntMatrix phi = penultimate_subtorus(system).saturated_generators();
  std::size_t q = phi.cols();
  IntMatrix id = IntMatrix::identity(r);

  auto check = [&](const TorusPoint& h, const std::string& method) -> std::optional<CommutatorApproximation> {
    CommutatorApproximation a;
    a.h = h;
    a.h_norm = torus_norm(h);
    a.word = commutator_word(system, h, n);
    a.error = torus_norm(a.word - v);
    a.method = method;
    if (a.h_norm < eps && a.error < eps) return a;
    return std::nullopt;
  };

  IntMatrix l(r, r);
  for (std::size_t i = 0; i < d; ++i)
    if (n[i] != 0) l = l - (system.map(i).matrix() - id).scaled(n[i]);
  std::optional<CommutatorApproximation> best;
  for (const auto& h : congruence_candidates(l * phi, v, phi)) {
    auto a = check(h, "congruence");
    if (a && (!best || a->h_norm < best->h_norm)) best = a;
  }
  if (best) return *best;

  if (p) {
    IntMatrix blocks(r, d * q);
    for (std::size_t i = 0; i < d; ++i) {
      IntMatrix b = (system.map(i).matrix() - id) * phi;
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t c = 0; c < q; ++c) blocks(a, i * q + c) = checked_neg(b(a, c));
    }
    auto targets = congruence_blocks(blocks, v, d, q);
    if (!targets.empty()) {
      Int scale = column_sum_norm(phi);
      for (std::size_t i = 0; i < d; ++i)
        scale = checked_add(scale, column_sum_norm((system.map(i).matrix() - id) * phi));
      double eps_b = eps / static_cast<double>(std::max<Int>(1, scale) * static_cast<Int>(q));
      auto cert = approximate_targets_rescaled(*p, n, targets, eps_b);
      if (v.is_exact()) {
        std::vector<ExactReal> h(r);
        for (std::size_t a = 0; a < r; ++a)
          for (std::size_t c = 0; c < q; ++c)
            if (phi(a, c) != 0) h[a] += ExactReal(Rational(cert.y[c].convert_to<double>())).scaled(phi(a, c));
        if (auto a = check(TorusPoint::exact(std::move(h)), "theorem-b")) return *a;
      } else {
        std::vector<double> h(r, 0.0);
        for (std::size_t a = 0; a < r; ++a)
          for (std::size_t c = 0; c < q; ++c) h[a] += static_cast<double>(phi(a, c)) * cert.y[c].convert_to<double>();
        if (auto a = check(TorusPoint::floating(std::move(h)), "theorem-b")) return *a;
      }
    }
  }
  throw PreconditionError("no h passes both checks for n = " + to_string(n) + " at eps " + format_double(eps));
}

std::vector<RecurrenceReport> PipelineResult::reports() const {
  std::vector<RecurrenceReport> out;
  for (const auto& lv : levels) {
    out.push_back(lv.full);
    if (lv.factor) out.push_back(*lv.factor);
  }
  return out;
}

PipelineResult theorem_a_experiment(const AffineSystem& system, const LatticeSet& gen, const PipelineConfig& config) {
  if (config.eps.empty()) throw PreconditionError("eps list is empty");
  for (double e : config.eps)
    if (!(e > 0)) throw PreconditionError("eps values must be positive");
  if (gen.dim() != system.group_dim()) throw DimensionMismatch("set and system differ in d");

  PipelineResult res{ErgodicityResult{}, {}, {}, CorrelationVector(gen.dim()), "", TransformLog{},
                     IntMatrix::identity(gen.dim()), system, gen, {}};

  auto tower = maximal_torus_factor(system);
  res.ergodicity = rotation_is_ergodic(tower.rotation, config.ergodicity_bound);
  if (!res.ergodicity.ergodic) {
    IntVec k = res.ergodicity.witness ? *res.ergodicity.witness : IntVec{};
    throw NonMinimalSystem("system is not minimal: torus factor rotation has witness k = " + to_string(k), k);
  }

  auto norm = normalize_essential_ordered(gen, config.scan_horizon);
  if (norm.diagnostics.empty) throw PreconditionError("set has no essential members within the scan horizon");
  res.perm = norm.perm;
  LatticeSet set = norm.set;
  AffineSystem sys = permute(system, norm.perm);
  IntMatrix to_orig = perm_matrix(norm.perm);

  while (set.dim() > 1) {
    auto v = redundancy_detect(set, config.scan_horizon);
    if (!v) break;
    res.redundancy_relations.push_back(*v);
    IntMatrix b = hyperplane_basis(*v);
    set = linear_pullback(hyperplane(set, *v), b);
    sys = reparametrize_rectangular(sys, b.transpose());
    to_orig = to_orig * b;
    auto again = normalize_essential_ordered(set, config.scan_horizon);
    if (again.diagnostics.empty) throw PreconditionError("set is empty after redundancy elimination");
    set = again.set;
    sys = permute(sys, again.perm);
    to_orig = to_orig * perm_matrix(again.perm);
  }

  CorrelationVector p(set.dim());
  if (auto ex = exact_correlations(set)) {
    p = *ex;
    res.p_source = "direction";
  } else {
    auto est = estimate_correlations(set, config.scan_horizon, config.grid_m, 1, config.threads).front();
    for (auto [i, j] : est.candidate.support()) {
      auto snapped = snap_rational(est.candidate.value(i, j), 2.0 / config.grid_m);
      if (!snapped)
        throw PreconditionError("correlation (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                ") has no exact value: estimate " + format_double(est.candidate.value(i, j)));
      p.set(i, j, ExactReal(*snapped));
    }
    res.p_source = "estimate";
  }

  auto enforced = enforce_complete_independence(set, p, sys, config.enforcement);
  res.log = enforced.log;
  res.p = enforced.p;
  set = enforced.set;
  sys = enforced.system;
  to_orig = to_orig * enforced.log.total;
  res.to_original = to_orig;
  res.system = sys;
  res.set = set;

  std::size_t r = sys.torus_dim();
  bool exact = sys.is_exact();
  TorusPoint zero = TorusPoint::zero(r, exact);
  std::size_t q = sys.step() >= 2 ? penultimate_subtorus(sys).rank() : 1;
  std::optional<FactorResult> factor;
  if (sys.step() >= 2) factor = factor_by_last_commutator(sys);

  for (double eps : config.eps) {
    LevelComparison lv;
    lv.eps = eps;
    lv.r_eps = build_R_eps(set, res.p, eps, q);
    Int probe = std::min(config.horizon, config.r_eps_horizon);
    bool has_members = static_cast<bool>(lv.r_eps->set.stream(probe).next());
    LatticeSet searched = has_members ? lv.r_eps->set : set;
    Int horizon = has_members ? probe : config.horizon;
    lv.searched = has_members ? "r_eps" : "enforced";
    lv.full = return_time_search(sys, searched, zero, eps, horizon, config.threads, config.system_id);
    if (has_members && !lv.full.found) {
      lv.searched = "enforced";
      searched = set;
      horizon = config.horizon;
      lv.full = return_time_search(sys, searched, zero, eps, horizon, config.threads, config.system_id);
    }
    if (factor) {
      lv.factor_radius = eps / static_cast<double>(std::max<Int>(1, column_sum_norm(factor->section)));
      TorusPoint fzero = TorusPoint::zero(factor->factor.torus_dim(), exact);
      auto fr = return_time_search(factor->factor, searched, fzero, lv.factor_radius, horizon, config.threads,
                                   config.system_id);
      fr.level = "factor";
      if (fr.found) {
        TorusPoint t = sys.power_apply(*fr.found, zero);
        TorusPoint f = apply_matrix(factor->section, apply_matrix(factor->projection, t));
        TorusPoint g = t - f;
        lv.lift = approximate_last_commutator(sys, g, *fr.found, eps, &res.p);
        lv.lifted_distance = torus_norm(sys.power_apply(*fr.found, lv.lift->h));
        if (!(lv.lifted_distance < 3 * eps))
          throw InternalBoundBreach("lifted return " + format_double(lv.lifted_distance) + " is not below 3 eps");
      }
      lv.factor = std::move(fr);
    }
    res.levels.push_back(std::move(lv));
  }
  return res;
}

}  // namespace nilrec
