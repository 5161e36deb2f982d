#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "nilrec/correlations.hpp"
#include "nilrec/integer_relation.hpp"

namespace nilrec {

CorrelationVector::CorrelationVector(std::size_t d) : d_(d), p_(d * d, Scalar(ExactReal(0))) {
  for (std::size_t i = 0; i < d; ++i) p_[i * d + i] = ExactReal(1);
}

const Scalar& CorrelationVector::at(std::size_t i, std::size_t j) const {
  if (i > j || j >= d_) throw DimensionMismatch("correlation index out of range");
  return p_[i * d_ + j];
}

void CorrelationVector::set(std::size_t i, std::size_t j, Scalar v) {
  if (i > j || j >= d_) throw DimensionMismatch("correlation index out of range");
  p_[i * d_ + j] = std::move(v);
}

double CorrelationVector::value(std::size_t i, std::size_t j) const { return to_double(at(i, j)); }

bool CorrelationVector::nonzero(std::size_t i, std::size_t j) const {
  const Scalar& s = at(i, j);
  return nilrec::is_exact(s) ? !exact_of(s).is_zero() : std::get<double>(s) != 0.0;
}

bool CorrelationVector::is_exact() const {
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = i; j < d_; ++j)
      if (!nilrec::is_exact(at(i, j))) return false;
  return true;
}

std::vector<std::pair<std::size_t, std::size_t>> CorrelationVector::support() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = i + 1; j < d_; ++j)
      if (nonzero(i, j)) out.emplace_back(i, j);
  return out;
}

std::string CorrelationVector::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = i + 1; j < d_; ++j) {
      if (!nonzero(i, j)) continue;
      if (!out.empty()) out += ";";
      out += std::to_string(i + 1) + "," + std::to_string(j + 1) + "=" + nilrec::to_string(at(i, j));
    }
  return out;
}

CorrelationVector CorrelationVector::parse(const std::string& text, std::size_t d, const BasisPtr& basis) {
  CorrelationVector p(d);
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw PreconditionError("correlation entry needs i,j=value: '" + item + "'");
    IntVec ij = parse_int_vector(item.substr(0, eq));
    if (ij.size() != 2 || ij[0] < 1 || ij[1] < 1 || ij[0] > ij[1] || static_cast<std::size_t>(ij[1]) > d)
      throw PreconditionError("bad correlation index in '" + item + "'");
    p.set(static_cast<std::size_t>(ij[0] - 1), static_cast<std::size_t>(ij[1] - 1),
          ExactReal::parse(item.substr(eq + 1), basis));
  }
  return p;
}

bool CorrelationVector::operator==(const CorrelationVector& o) const {
  if (d_ != o.d_) return false;
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = i; j < d_; ++j) {
      const Scalar &a = at(i, j), &b = o.at(i, j);
      if (nilrec::is_exact(a) != nilrec::is_exact(b)) return false;
      if (nilrec::is_exact(a) ? exact_of(a) != exact_of(b) : std::get<double>(a) != std::get<double>(b))
        return false;
    }
  return true;
}

std::optional<ExactReal> exact_ratio(const ExactReal& a, const ExactReal& b) {
  if (b.is_zero()) return std::nullopt;
  if (b.is_rational()) return a / b.rational_value();
  if (a.is_zero()) return ExactReal(0);
  if (a.is_rational()) return std::nullopt;
  if (!a.basis()->same_as(*b.basis())) return std::nullopt;
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (sgn(b.coeff(k)) == 0) continue;
    Rational r = a.coeff(k) / b.coeff(k);
    if (b.scaled(r) == a) return ExactReal(r);
    return std::nullopt;
  }
  return std::nullopt;
}

double consistency_defect(const CorrelationVector& p) {
  std::size_t d = p.dim();
  bool exact = p.is_exact();
  double worst = 0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j)
      for (std::size_t l = j; l < d; ++l) {
        double defect;
        if (exact) {
          const ExactReal &a = exact_of(p.at(i, l)), &b = exact_of(p.at(i, j)), &c = exact_of(p.at(j, l));
          if (b.is_rational() || c.is_rational()) {
            ExactReal diff = a - b * c;
            defect = diff.is_zero() ? 0.0 : abs(diff.eval()).convert_to<double>();
          } else {
            defect = abs(a.eval() - b.eval() * c.eval()).convert_to<double>();
          }
        } else {
          defect = std::fabs(p.value(i, l) - p.value(i, j) * p.value(j, l));
        }
        worst = std::max(worst, defect);
      }
  return worst;
}

namespace {

Int floor_div128(__int128 a, __int128 b) {
  if (b < 0) {
    a = -a;
    b = -b;
  }
  __int128 q = a / b;
  if (a % b != 0 && a < 0) --q;
  return static_cast<Int>(q);
}

// round_half((n_j / n_i + 1) m / 2)
Int cell_index(Int ni, Int nj, int m) {
  __int128 num = (static_cast<__int128>(nj) + ni) * m;
  __int128 den = 2 * static_cast<__int128>(ni);
  return floor_div128(2 * num + den, 2 * den);
}

std::vector<std::pair<std::size_t, std::size_t>> pairs_of(std::size_t d) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) out.emplace_back(i, j);
  return out;
}

std::vector<IntVec> checked_members(const LatticeSet& gen, Int horizon) {
  auto members = gen.members(horizon);
  for (const auto& n : members)
    if (!is_essential(n) || !is_ordered(n))
      throw PreconditionError("set is not essential and ordered: member " + nilrec::to_string(n));
  if (members.empty()) throw PreconditionError("no members within horizon");
  return members;
}

using CellCounts = std::map<std::vector<Int>, std::size_t>;

CellCounts bin(const std::vector<IntVec>& members, std::size_t begin, std::size_t end, int m,
               const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  CellCounts counts;
  std::vector<Int> key(pairs.size());
  for (std::size_t k = begin; k < end; ++k) {
    const IntVec& n = members[k];
    for (std::size_t p = 0; p < pairs.size(); ++p) key[p] = cell_index(n[pairs[p].first], n[pairs[p].second], m);
    ++counts[key];
  }
  return counts;
}

CorrelationVector center_vector(std::size_t d, const std::vector<Int>& cell, int m) {
  CorrelationVector p(d);
  auto pairs = pairs_of(d);
  for (std::size_t k = 0; k < pairs.size(); ++k)
    p.set(pairs[k].first, pairs[k].second, -1.0 + 2.0 * static_cast<double>(cell[k]) / m);
  return p;
}

}  // namespace

std::vector<CorrelationEstimate> estimate_correlations(const LatticeSet& gen, Int horizon, int grid_m,
                                                       std::size_t top_k, unsigned threads) {
  if (horizon < 1 || grid_m < 1) throw PreconditionError("horizon and grid resolution must be positive");
  auto members = checked_members(gen, horizon);
  std::size_t d = gen.dim();
  auto pairs = pairs_of(d);
  threads = std::max(1u, threads);
  CellCounts counts;
  if (threads == 1 || members.size() < 4096) {
    counts = bin(members, 0, members.size(), grid_m, pairs);
  } else {
    std::vector<CellCounts> parts(threads);
    std::vector<std::thread> pool;
    std::size_t chunk = (members.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        std::size_t b = std::min(members.size(), t * chunk), e = std::min(members.size(), b + chunk);
        parts[t] = bin(members, b, e, grid_m, pairs);
      });
    for (auto& th : pool) th.join();
    for (auto& part : parts)
      for (auto& [k, c] : part) counts[k] += c;
  }
  std::vector<std::pair<std::vector<Int>, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<CorrelationEstimate> out;
  for (std::size_t k = 0; k < std::min(top_k, ranked.size()); ++k) {
    CorrelationEstimate e;
    e.cell = ranked[k].first;
    e.candidate = center_vector(d, e.cell, grid_m);
    e.count = ranked[k].second;
    e.total = members.size();
    e.cell_size = 2.0 / grid_m;
    e.horizon = horizon;
    e.grid_m = grid_m;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<RefinementLevel> nested_refinement(const LatticeSet& gen, Int horizon, int grid_m, std::size_t levels) {
  if (horizon < 2 || grid_m < 1) throw PreconditionError("horizon must be at least 2 and grid positive");
  auto members = checked_members(gen, horizon);
  std::size_t d = gen.dim();
  auto pairs = pairs_of(d);
  Int half = horizon / 2;
  std::vector<RefinementLevel> out;
  int m = grid_m;
  for (std::size_t level = 0; level < levels; ++level, m *= 2) {
    std::map<std::vector<Int>, std::pair<std::size_t, std::size_t>> counts;
    std::vector<Int> key(pairs.size());
    for (const auto& n : members) {
      for (std::size_t p = 0; p < pairs.size(); ++p) key[p] = cell_index(n[pairs[p].first], n[pairs[p].second], m);
      auto& c = counts[key];
      ++c.first;
      if (max_norm(n) <= half) ++c.second;
    }
    const std::vector<Int>* best = nullptr;
    std::pair<std::size_t, std::size_t> bc{0, 0};
    for (const auto& [k, c] : counts)
      if (c.first > c.second && c.first > bc.first) {
        best = &k;
        bc = c;
      }
    if (!best) break;
    RefinementLevel r;
    r.grid_m = m;
    r.cell = *best;
    for (Int c : r.cell) r.center.push_back(-1.0 + 2.0 * static_cast<double>(c) / m);
    r.count = bc.first;
    r.count_half = bc.second;
    std::vector<IntVec> inside;
    for (const auto& n : members) {
      bool in = true;
      for (std::size_t p = 0; in && p < pairs.size(); ++p)
        in = cell_index(n[pairs[p].first], n[pairs[p].second], m) == r.cell[p];
      if (in) inside.push_back(n);
    }
    members = std::move(inside);
    out.push_back(std::move(r));
  }
  return out;
}

std::optional<CorrelationVector> exact_correlations(const LatticeSet& gen) {
  auto dir = gen.direction();
  if (!dir) return std::nullopt;
  std::size_t d = gen.dim();
  CorrelationVector p(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      auto r = exact_ratio((*dir)[j], (*dir)[i]);
      if (!r) return std::nullopt;
      p.set(i, j, *r);
    }
  return p;
}

std::optional<Rational> snap_rational(double x, double tol, Int max_den) {
  if (std::fabs(x) <= tol) return Rational(0);
  for (Int q = 1; q <= max_den; ++q) {
    double p = std::nearbyint(x * static_cast<double>(q));
    if (std::fabs(x - p / static_cast<double>(q)) <= tol)
      return ratio(static_cast<Int>(p), q);
  }
  return std::nullopt;
}

namespace {

class CorrelatedNode : public SetNode {
 public:
  CorrelatedNode(LatticeSet child, CorrelationVector p, double eps)
      : child_(std::move(child)), p_(std::move(p)), eps_(eps), big_eps_(eps) {
    if (!(eps > 0)) throw PreconditionError("eps must be positive");
    if (p_.dim() != child_.dim()) throw DimensionMismatch("correlations and set differ in dimension");
    for (auto [i, j] : pairs_of(p_.dim())) {
      Entry e{i, j, 0, std::nullopt};
      const Scalar& s = p_.at(i, j);
      if (is_exact(s)) {
        e.exact = exact_of(s);
        e.approx = e.exact->is_rational() ? static_cast<long double>(e.exact->to_double())
                                          : e.exact->eval().convert_to<long double>();
      } else {
        e.approx = std::get<double>(s);
      }
      entries_.push_back(std::move(e));
    }
  }
  std::size_t dim() const override { return child_.dim(); }
  bool keep(const IntVec& n) const {
    for (const auto& e : entries_) {
      if (n[e.i] == 0) return false;
      long double r = static_cast<long double>(n[e.j]) / static_cast<long double>(n[e.i]);
      long double dev = fabsl(r - e.approx);
      if (dev < eps_ - 1e-12L) continue;
      if (dev > eps_ + 1e-12L) return false;
      if (!e.exact) {
        if (dev > eps_) return false;
        continue;
      }
      ExactReal diff = ExactReal(ratio(n[e.j], n[e.i])) - *e.exact;
      if (abs(diff.eval()) > big_eps_) return false;
    }
    return true;
  }
  bool contains(const IntVec& n) const override { return child_.contains(n) && keep(n); }
  std::vector<IntVec> shell(Int h) const override {
    auto v = child_.shell(h);
    v.erase(std::remove_if(v.begin(), v.end(), [&](const IntVec& n) { return !keep(n); }), v.end());
    return v;
  }
  std::vector<IntVec> members_where(Int lo, Int hi, const Predicate& also) const override {
    if (!also) return child_.members_where(lo, hi, [this](const IntVec& n) { return keep(n); });
    return child_.members_where(lo, hi, [&](const IntVec& n) { return keep(n) && also(n); });
  }
  std::optional<std::vector<ExactReal>> direction() const override { return child_.direction(); }
  Provenance provenance() const override {
    Provenance p("correlated");
    p.set("p", p_.to_string()).set("eps", format_double(eps_));
    if (!p_.is_exact()) p.set("mode", "float");
    p.add(child_.provenance());
    return p;
  }

 private:
  struct Entry {
    std::size_t i, j;
    long double approx;
    std::optional<ExactReal> exact;
  };
  LatticeSet child_;
  CorrelationVector p_;
  double eps_;
  BigFloat big_eps_;
  std::vector<Entry> entries_;
};

}  // namespace

LatticeSet filter_correlated(const LatticeSet& gen, const CorrelationVector& p, double eps) {
  return LatticeSet(std::make_shared<CorrelatedNode>(gen, p, eps));
}

IndependenceResult complete_independence_check(const CorrelationVector& p) {
  if (!p.is_exact()) throw PreconditionError("complete independence needs exact correlations");
  for (std::size_t i = 0; i < p.dim(); ++i) {
    std::vector<std::size_t> cols;
    std::vector<ExactReal> xs;
    for (std::size_t j = i; j < p.dim(); ++j)
      if (p.nonzero(i, j)) {
        cols.push_back(j);
        xs.push_back(exact_of(p.at(i, j)));
      }
    if (auto rel = integer_relation(xs, 1)) return IndependenceResult{false, i, cols, *rel};
  }
  return {};
}

namespace {

// Row `row` restricted to columns [row, upto]: independent?
bool row_independent(const CorrelationVector& p, std::size_t row, std::size_t upto) {
  std::vector<ExactReal> xs;
  for (std::size_t j = row; j <= upto; ++j)
    if (p.nonzero(row, j)) xs.push_back(exact_of(p.at(row, j)));
  return !integer_relation(xs, 1).has_value();
}

std::size_t l_size(const CorrelationVector& p, std::size_t n0) {
  std::size_t c = 0;
  for (std::size_t j = n0 + 1; j < p.dim(); ++j) c += p.nonzero(n0, j);
  return c;
}

ExactReal abs_exact(const ExactReal& x) { return x.sign() < 0 ? -x : x; }

}  // namespace

EnforcementResult enforce_complete_independence(const LatticeSet& gen, const CorrelationVector& p0,
                                                const AffineSystem& system, const EnforcementOptions& opts) {
  std::size_t d = gen.dim();
  if (p0.dim() != d || system.group_dim() != d) throw DimensionMismatch("set, correlations and system differ in d");
  if (!p0.is_exact()) throw PreconditionError("enforcement needs exact correlations");
  if (consistency_defect(p0) > 1e-30) throw PreconditionError("correlations are not consistent");
  if (opts.check_redundancy) {
    if (auto v = redundancy_detect(gen, opts.horizon))
      throw PreconditionError("redundant input (relation " + nilrec::to_string(*v) +
                              "); eliminate redundancy first");
  }

  EnforcementResult res{gen, p0, system, TransformLog{}};
  res.log.dim = d;
  res.log.total = IntMatrix::identity(d);
  std::size_t pass_no = 0;

  for (std::size_t c = 1; c < d; ++c) {  // c = N (1-based) = index of the new column N+1
    while (true) {
      bool ok = true;
      for (std::size_t i = 0; i <= c && ok; ++i) ok = row_independent(res.p, i, c);
      if (ok) break;
      if (pass_no >= opts.max_passes) throw InternalBoundBreach("enforcement exceeded the pass limit");

      std::size_t l = 0;
      while (l <= c && !res.p.nonzero(l, c)) ++l;
      std::vector<ExactReal> xs;
      for (std::size_t j = l; j <= c; ++j) {
        if (!res.p.nonzero(l, j)) throw PreconditionError("correlations are not consistent");
        xs.push_back(exact_of(res.p.at(l, j)));
      }
      std::optional<IntVec> best;
      for (const auto& k : integer_kernel_basis(xs))
        if (k.back() != 0 && (!best || max_abs(k) < max_abs(*best))) best = k;
      if (!best) throw PreconditionError("dependent correlations without the new coordinate");

      EnforcementPass pass;
      pass.n = c;
      pass.l = l + 1;
      pass.v = IntVec(d, 0);
      for (std::size_t j = l; j <= c; ++j) pass.v[j] = (*best)[j - l];
      Int vlast = pass.v[c];
      Int vnorm = max_abs(pass.v);

      ExactReal mn = abs_exact(xs[0]);
      for (const auto& x : xs)
        if (abs_exact(x).eval() < mn.eval()) mn = abs_exact(x);
      pass.eps_bound = mn / Rational(static_cast<long>(2 * d * vnorm));
      const auto& sched = opts.eps_schedule;
      Rational factor = sched.empty() ? Rational(1) : sched[std::min(pass_no, sched.size() - 1)];
      if (factor <= 0 || factor > 1) throw PreconditionError("eps schedule factors must lie in (0, 1]");
      pass.eps = pass.eps_bound.scaled(factor).to_double();
      if (!(BigFloat(pass.eps) <= pass.eps_bound.eval() * (1 + 1e-15)))
        throw InternalBoundBreach("pass eps exceeds the bound");
      pass.l_size_before = l_size(res.p, c - 1);

      pass.m = IntMatrix(d, d);
      for (std::size_t i = 0; i < d; ++i) pass.m(i, i) = vlast;
      for (std::size_t j = l; j < c; ++j) pass.m(c, j) = -pass.v[j];

      LatticeSet filtered = filter_correlated(res.set, res.p, pass.eps);
      LatticeSet pulled = essential(apply_rational_matrix(filtered, RatMatrix(pass.m), MatrixDirection::Pullback));
      AffineSystem sys = reparametrize(res.system, pass.m.transpose());

      // Where the moved coordinate settles among c+1..d-1.
      auto sample = pulled.members(opts.horizon);
      if (sample.empty())
        throw PreconditionError("transformed set has no members within horizon " + std::to_string(opts.horizon) +
                                " (pass " + std::to_string(pass_no + 1) + ")");
      std::size_t best_pos = c, best_count = 0;
      for (std::size_t pos = c; pos < d; ++pos) {
        std::size_t count = 0;
        for (const auto& m : sample) {
          Int mc = m[c] < 0 ? -m[c] : m[c];
          bool fits = true;
          for (std::size_t k = c + 1; k < d && fits; ++k) {
            Int mk = m[k] < 0 ? -m[k] : m[k];
            fits = k <= pos ? mk >= mc : mc >= mk;
          }
          count += fits;
        }
        if (pos == c || count > best_count) {
          best_count = count;
          best_pos = pos;
        }
      }
      pass.perm.clear();
      for (std::size_t a = 0; a < c; ++a) pass.perm.push_back(a);
      for (std::size_t a = c + 1; a <= best_pos; ++a) pass.perm.push_back(a);
      pass.perm.push_back(c);
      for (std::size_t a = best_pos + 1; a < d; ++a) pass.perm.push_back(a);

      LatticeSet next = permute_coordinates(order_class(pulled, pass.perm, "majority"), pass.perm);
      sys = permute(sys, pass.perm);

      // Correlations: old pairs keep their slopes, earlier rows lose the moved
      // coordinate, and the moved coordinate's remaining slopes are re-derived.
      std::vector<std::size_t> inv(d);
      for (std::size_t a = 0; a < d; ++a) inv[pass.perm[a]] = a;
      CorrelationVector np(d);
      std::vector<std::pair<std::size_t, std::size_t>> unknown;
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a + 1; b < d; ++b) {
          std::size_t oa = pass.perm[a], ob = pass.perm[b];
          if (oa != c && ob != c) {
            np.set(a, b, res.p.at(std::min(oa, ob), std::max(oa, ob)));
          } else {
            std::size_t other = oa == c ? ob : oa;
            if (other < c) np.set(a, b, ExactReal(0));
            else unknown.emplace_back(a, b);
          }
        }
      if (!unknown.empty()) {
        auto dir = next.direction();
        std::vector<IntVec> outer;
        bool sampled = false;
        for (auto [a, b] : unknown) {
          std::optional<ExactReal> val;
          if (dir) val = exact_ratio((*dir)[b], (*dir)[a]);
          if (!val) {
            if (!sampled) {
              outer = next.members_between(opts.horizon / 2 + 1, opts.horizon);
              sampled = true;
            }
            if (outer.empty())
              throw PreconditionError("no members between H/2 and H to re-extend correlations");
            std::map<Int, std::size_t> counts;
            for (const auto& m : outer) ++counts[cell_index(m[a], m[b], opts.grid_m)];
            auto top = counts.begin();
            for (auto it = counts.begin(); it != counts.end(); ++it)
              if (it->second > top->second) top = it;
            double x = -1.0 + 2.0 * static_cast<double>(top->first) / opts.grid_m;
            auto q = snap_rational(x, 2.0 / opts.grid_m, opts.snap_max_den);
            if (!q)
              throw PreconditionError("cannot re-extend correlation (" + std::to_string(a + 1) + "," +
                                      std::to_string(b + 1) + "): estimate " + format_double(x) +
                                      " does not snap to a small rational");
            val = ExactReal(*q);
          }
          np.set(a, b, *val);
        }
      }
      pass.l_size_after = l_size(np, c - 1);
      if (pass.l_size_after >= pass.l_size_before)
        throw InternalBoundBreach("enforcement pass did not shrink the correlated set");

      IntMatrix pm(d, d);
      for (std::size_t a = 0; a < d; ++a) pm(pass.perm[a], a) = 1;
      res.log.total = res.log.total * pass.m * pm;
      pass.members_after = next.members(opts.horizon).size();

      res.set = next;
      res.p = np;
      res.system = sys;
      res.log.passes.push_back(std::move(pass));
      ++pass_no;
    }
  }
  auto check = complete_independence_check(res.p);
  if (!check.independent) throw InternalBoundBreach("enforcement output is not completely independent");
  return res;
}

IntVec replay(const TransformLog& log, const IntVec& m) {
  if (m.size() != log.dim) throw DimensionMismatch("member length differs from log dimension");
  return log.total * m;
}

AffineSystem replay_system(const TransformLog& log, const AffineSystem& original) {
  AffineSystem sys = original;
  for (const auto& p : log.passes) {
    sys = reparametrize(sys, p.m.transpose());
    sys = permute(sys, p.perm);
  }
  return sys;
}

std::string TransformLog::to_text() const {
  std::ostringstream os;
  os << "nilrec-transform-log 1\n";
  os << "dim " << dim << "\n";
  for (const auto& p : passes) {
    os << "pass\n";
    os << "  n " << p.n << "\n";
    os << "  l " << p.l << "\n";
    os << "  v " << format_int_vector(p.v) << "\n";
    os << "  m " << format_int_matrix(p.m) << "\n";
    os << "  eps-bound " << p.eps_bound.to_string() << "\n";
    os << "  eps " << format_double(p.eps) << "\n";
    os << "  perm " << format_perm(p.perm) << "\n";
    os << "  l-before " << p.l_size_before << "\n";
    os << "  l-after " << p.l_size_after << "\n";
    os << "  members-after " << p.members_after << "\n";
    os << "end\n";
  }
  os << "total " << format_int_matrix(total) << "\n";
  return os.str();
}

TransformLog TransformLog::parse(const std::string& text, const BasisPtr& basis) {
  TransformLog log;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  EnforcementPass* cur = nullptr;
  bool header = false, have_total = false;
  auto fail = [&](const std::string& what) { throw ParseError("transform log", lineno, what); };
  while (std::getline(is, line)) {
    ++lineno;
    auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    line = line.substr(b);
    auto sp = line.find(' ');
    std::string key = line.substr(0, sp);
    std::string val = sp == std::string::npos ? "" : line.substr(line.find_first_not_of(' ', sp));
    try {
      if (!header) {
        if (line != "nilrec-transform-log 1") fail("expected header 'nilrec-transform-log 1'");
        header = true;
      } else if (key == "dim") {
        log.dim = static_cast<std::size_t>(std::stoul(val));
      } else if (key == "pass") {
        if (cur) fail("nested pass");
        log.passes.emplace_back();
        cur = &log.passes.back();
      } else if (key == "end") {
        if (!cur) fail("'end' outside a pass");
        cur = nullptr;
      } else if (key == "total") {
        log.total = parse_int_matrix(val);
        have_total = true;
      } else if (!cur) {
        fail("unexpected key '" + key + "'");
      } else if (key == "n") {
        cur->n = std::stoul(val);
      } else if (key == "l") {
        cur->l = std::stoul(val);
      } else if (key == "v") {
        cur->v = parse_int_vector(val);
      } else if (key == "m") {
        cur->m = parse_int_matrix(val);
      } else if (key == "eps-bound") {
        cur->eps_bound = ExactReal::parse(val, basis);
      } else if (key == "eps") {
        cur->eps = std::stod(val);
      } else if (key == "perm") {
        cur->perm = parse_perm(val);
      } else if (key == "l-before") {
        cur->l_size_before = std::stoul(val);
      } else if (key == "l-after") {
        cur->l_size_after = std::stoul(val);
      } else if (key == "members-after") {
        cur->members_after = std::stoul(val);
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  if (!header) throw ParseError("transform log", lineno, "empty input");
  if (cur) throw ParseError("transform log", lineno, "unterminated pass");
  if (!have_total) throw ParseError("transform log", lineno, "missing total");
  return log;
}

}  // namespace nilrec
