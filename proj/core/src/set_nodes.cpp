#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "nilrec/lattice_sets.hpp"

namespace nilrec {

Int max_norm(const IntVec& n) { return max_abs(n); }

bool enumeration_less(const IntVec& a, const IntVec& b) {
  Int na = max_norm(a), nb = max_norm(b);
  if (na != nb) return na < nb;
  return a < b;
}

void sort_enumeration(std::vector<IntVec>& v) {
  std::sort(v.begin(), v.end(), enumeration_less);
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

namespace {

// Lexicographic product of per-coordinate integer ranges, keeping only vectors
// with at least one coordinate equal to +-h when `need_edge` is set.
void product_ranges(const std::vector<std::pair<Int, Int>>& ranges, Int h, bool need_edge,
                    const IntVec& prefix, std::vector<IntVec>& out) {
  IntVec cur = prefix;
  cur.resize(prefix.size() + ranges.size());
  std::function<void(std::size_t, bool)> rec = [&](std::size_t j, bool edge) {
    if (j == ranges.size()) {
      if (edge || !need_edge) out.push_back(cur);
      return;
    }
    auto [lo, hi] = ranges[j];
    bool last = j + 1 == ranges.size();
    for (Int x = lo; x <= hi; ++x) {
      bool e = x == h || x == -h;
      if (last && need_edge && !edge && !e) {
        // jump straight to the next edge value
        if (x < h && h <= hi && x > -h) x = h - 1;
        else if (x < -h) x = -h - 1;
        continue;
      }
      cur[prefix.size() + j] = x;
      rec(j + 1, edge || e);
    }
  };
  rec(0, false);
}

}  // namespace

std::vector<IntVec> integer_shell(std::size_t d, Int h) {
  std::vector<IntVec> out;
  if (d == 0) return out;
  if (h == 0) {
    out.emplace_back(d, 0);
    return out;
  }
  std::vector<std::pair<Int, Int>> ranges(d, {-h, h});
  product_ranges(ranges, h, true, {}, out);
  return out;
}

std::vector<IntVec> SetNode::shell(Int h) const {
  std::vector<IntVec> out;
  for (auto& n : integer_shell(dim(), h))
    if (contains(n)) out.push_back(std::move(n));
  return out;
}

std::vector<IntVec> SetNode::members_where(Int lo, Int hi, const Predicate& keep) const {
  std::vector<IntVec> out;
  for (Int h = std::max<Int>(lo, 0); h <= hi; ++h)
    for (auto& n : shell(h))
      if (!keep || keep(n)) out.push_back(std::move(n));
  return out;
}

LatticeSet::LatticeSet(std::shared_ptr<const SetNode> node) : node_(std::move(node)) {
  if (!node_) throw PreconditionError("null set node");
}

bool LatticeSet::contains(const IntVec& n) const {
  if (n.size() != dim()) throw DimensionMismatch("vector length differs from set dimension");
  return node_->contains(n);
}

SetStream LatticeSet::stream(Int horizon) const { return SetStream(*this, horizon); }

SetStream::SetStream(LatticeSet set, Int horizon) : set_(std::move(set)), horizon_(horizon) {}

std::vector<IntVec> SetStream::next_block() {
  std::vector<IntVec> block;
  while (block.empty() && done_to_ < horizon_) {
    Int lo = done_to_ + 1;
    Int hi = std::min(horizon_, std::max<Int>(lo + 15, 2 * lo));
    block = set_.members_between(lo, hi);
    done_to_ = hi;
  }
  return block;
}

std::optional<IntVec> SetStream::next() {
  if (pos_ >= buf_.size()) {
    buf_ = next_block();
    pos_ = 0;
    if (buf_.empty()) return std::nullopt;
  }
  return buf_[pos_++];
}

std::string to_string(IntegerKind k) {
  switch (k) {
    case IntegerKind::All: return "all";
    case IntegerKind::Nonzero: return "nonzero";
    case IntegerKind::Positive: return "positive";
  }
  return "all";
}

IntegerKind parse_integer_kind(const std::string& s) {
  if (s == "all") return IntegerKind::All;
  if (s == "nonzero") return IntegerKind::Nonzero;
  if (s == "positive") return IntegerKind::Positive;
  throw PreconditionError("unknown integer kind '" + s + "'");
}

namespace {

bool in_domain(Int n, IntegerKind k) {
  switch (k) {
    case IntegerKind::All: return true;
    case IntegerKind::Nonzero: return n != 0;
    case IntegerKind::Positive: return n > 0;
  }
  return true;
}

class IntegersNode : public SetNode {
 public:
  IntegersNode(std::size_t d, IntegerKind k) : d_(d), k_(k) {
    if (d == 0) throw PreconditionError("dimension must be positive");
  }
  std::size_t dim() const override { return d_; }
  bool contains(const IntVec& n) const override {
    switch (k_) {
      case IntegerKind::All: return true;
      case IntegerKind::Nonzero: return !is_zero(n);
      case IntegerKind::Positive:
        return std::all_of(n.begin(), n.end(), [](Int x) { return x > 0; });
    }
    return true;
  }
  std::vector<IntVec> shell(Int h) const override {
    if (k_ == IntegerKind::All) return integer_shell(d_, h);
    if (h == 0) return {};
    if (k_ == IntegerKind::Nonzero) return integer_shell(d_, h);
    std::vector<IntVec> out;
    std::vector<std::pair<Int, Int>> ranges(d_, {1, h});
    product_ranges(ranges, h, true, {}, out);
    return out;
  }
  Provenance provenance() const override {
    Provenance p("integers");
    p.set("dim", std::to_string(d_)).set("kind", to_string(k_));
    return p;
  }

 private:
  std::size_t d_;
  IntegerKind k_;
};

class FiniteNode : public SetNode {
 public:
  FiniteNode(std::size_t d, std::vector<IntVec> pts) : d_(d) {
    for (auto& p : pts)
      if (p.size() != d) throw DimensionMismatch("finite set point has wrong length");
    sort_enumeration(pts);
    pts_ = std::move(pts);
    set_.insert(pts_.begin(), pts_.end());
  }
  std::size_t dim() const override { return d_; }
  bool contains(const IntVec& n) const override { return set_.count(n) > 0; }
  std::vector<IntVec> shell(Int h) const override { return members_between(h, h); }
  std::vector<IntVec> members_where(Int lo, Int hi, const Predicate& keep) const override {
    std::vector<IntVec> out;
    for (const auto& p : pts_) {
      Int m = max_norm(p);
      if (m >= lo && m <= hi && (!keep || keep(p))) out.push_back(p);
    }
    return out;
  }
  Provenance provenance() const override {
    Provenance p("finite");
    std::string s;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (i) s += ";";
      s += format_int_vector(pts_[i]);
    }
    p.set("dim", std::to_string(d_)).set("points", s);
    return p;
  }

 private:
  std::size_t d_;
  std::vector<IntVec> pts_;
  std::set<IntVec> set_;
};

// round_half(n * alpha) with a long double fast path and an exact fallback.
struct SlopeEval {
  ExactReal exact;
  bool rational = false;
  __int128 p = 0, q = 1;
  long double approx = 0;

  explicit SlopeEval(const ExactReal& a) : exact(a) {
    if (a.is_rational()) {
      Rational r = a.rational_value();
      if (mpz_fits_slong_p(r.get_num_mpz_t()) && mpz_fits_slong_p(r.get_den_mpz_t())) {
        rational = true;
        p = r.get_num().get_si();
        q = r.get_den().get_si();
      }
    }
    approx = a.is_rational() ? static_cast<long double>(a.to_double())
                             : a.eval().convert_to<long double>();
  }

  Int operator()(Int n) const {
    if (rational) {
      __int128 num = 2 * static_cast<__int128>(n) * p + q;
      __int128 den = 2 * q;
      __int128 f = num / den;
      if ((num % den != 0) && ((num < 0) != (den < 0))) --f;
      return static_cast<Int>(f);
    }
    long double v = static_cast<long double>(n) * approx + 0.5L;
    long double f = floorl(v);
    long double dist = std::min(v - f, f + 1.0L - v);
    if (dist > 1e-7L) return static_cast<Int>(f);
    return round_half(exact.scaled(n));
  }
};

class FloorSlopeNode : public SetNode {
 public:
  FloorSlopeNode(LatticeSet base, std::vector<ExactReal> alpha) : base_(std::move(base)), alpha_(std::move(alpha)) {
    if (base_.dim() != 1) throw PreconditionError("floor-slope base must be one-dimensional");
    if (alpha_.empty()) throw PreconditionError("floor-slope needs at least one slope");
    for (const auto& a : alpha_) evals_.emplace_back(a);
    for (std::size_t i = 0; i < evals_.size(); ++i)
      if (fabsl(evals_[i].approx) > amax_) {
        amax_ = fabsl(evals_[i].approx);
        imax_ = i;
      }
  }
  std::size_t dim() const override { return alpha_.size(); }

  IntVec image(Int n) const {
    IntVec v(alpha_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = evals_[i](n);
    return v;
  }

  bool contains(const IntVec& x) const override {
    if (x.size() != dim()) return false;
    if (amax_ == 0) return is_zero(x) && !base_.members_between(0, 64).empty();
    long double a = evals_[imax_].approx;
    long double t = static_cast<long double>(x[imax_]);
    long double e1 = (t - 0.5L) / a, e2 = (t + 0.5L) / a;
    Int lo = static_cast<Int>(floorl(std::min(e1, e2))) - 1;
    Int hi = static_cast<Int>(ceill(std::max(e1, e2))) + 1;
    for (Int n = lo; n <= hi; ++n)
      if (image(n) == x && base_.contains({n})) return true;
    return false;
  }

  std::vector<IntVec> shell(Int h) const override {
    std::vector<IntVec> out;
    if (amax_ == 0) {
      if (h == 0 && !base_.members_between(0, 64).empty()) out.emplace_back(dim(), 0);
      return out;
    }
    for (int sign : {-1, 1}) {
      Int a = first_at_least(h, sign);
      Int b = first_at_least(h + 1, sign) - 1;
      for (Int m = a; m <= b; ++m) {
        Int n = sign * m;
        if (n == 0 && sign < 0) continue;
        if (!base_.contains({n})) continue;
        IntVec v = image(n);
        if (max_norm(v) == h) out.push_back(std::move(v));
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<IntVec> members_where(Int lo, Int hi, const Predicate& keep) const override {
    std::vector<IntVec> out;
    lo = std::max<Int>(lo, 0);
    if (lo > hi) return out;
    if (amax_ == 0) {
      if (lo == 0) out = shell(0);
      if (keep && !out.empty() && !keep(out[0])) out.clear();
      return out;
    }
    IntVec v(dim());
    for (int sign : {-1, 1}) {
      Int a = first_at_least(lo, sign);
      Int b = first_at_least(hi + 1, sign) - 1;
      for (Int m = a; m <= b; ++m) {
        Int n = sign * m;
        if (n == 0 && sign < 0) continue;
        Int norm = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
          v[i] = evals_[i](n);
          norm = std::max(norm, v[i] < 0 ? -v[i] : v[i]);
        }
        if (norm < lo || norm > hi) continue;
        if (keep && !keep(v)) continue;
        if (!base_.contains({n})) continue;
        out.push_back(v);
      }
    }
    sort_enumeration(out);
    return out;
  }

  std::optional<std::vector<ExactReal>> direction() const override { return alpha_; }

  Provenance provenance() const override {
    Provenance p("floor_slope");
    p.set("alpha", format_exact_vector(alpha_));
    p.add(base_.provenance());
    return p;
  }

  const std::vector<ExactReal>& alpha() const { return alpha_; }
  const LatticeSet& base() const { return base_; }

 private:
  // Smallest m >= 0 with max-norm of image(sign * m) >= target; the norm is
  // nondecreasing in m.
  Int first_at_least(Int target, int sign) const {
    Int lo = 0;
    Int hi = static_cast<Int>(ceill((static_cast<long double>(target) + 3.0L) / amax_)) + 2;
    while (lo < hi) {
      Int mid = lo + (hi - lo) / 2;
      if (max_norm(image(sign * mid)) >= target) hi = mid;
      else lo = mid + 1;
    }
    return lo;
  }

  LatticeSet base_;
  std::vector<ExactReal> alpha_;
  std::vector<SlopeEval> evals_;
  long double amax_ = 0;
  std::size_t imax_ = 0;
};

Int ceil_q(const Rational& q) {
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return to_int(c);
}

Int floor_q(const Rational& q) {
  mpz_class c;
  mpz_fdiv_q(c.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return to_int(c);
}

// s * n + c * |n|^e, rounded up (lower bound) or down (upper bound).
Int eval_bound(const StripBound& b, Int n, bool lower) {
  Int a = n < 0 ? -n : n;
  if (b.exponent.get_den() == 1 && b.exponent >= 0) {
    mpz_class pw;
    mpz_ui_pow_ui(pw.get_mpz_t(), static_cast<unsigned long>(a),
                  static_cast<unsigned long>(b.exponent.get_num().get_ui()));
    Rational v = b.slope * Rational(static_cast<long>(n)) + b.coef * Rational(pw);
    return lower ? ceil_q(v) : floor_q(v);
  }
  long double v = static_cast<long double>(b.slope.get_d()) * static_cast<long double>(n) +
                  static_cast<long double>(b.coef.get_d()) *
                      powl(static_cast<long double>(a), static_cast<long double>(b.exponent.get_d()));
  long double r = lower ? ceill(v) : floorl(v);
  if (!(fabsl(r) < 9.2e18L)) throw OverflowError("strip bound out of range");
  return static_cast<Int>(r);
}

bool monotone_in_abs(const StripBound& b) { return sgn(b.slope) == 0 && b.coef >= 0 && b.exponent >= 0; }

class StripNode : public SetNode {
 public:
  explicit StripNode(StripSpec s) : s_(std::move(s)) {}
  std::size_t dim() const override { return 2; }
  bool contains(const IntVec& n) const override {
    if (n.size() != 2 || !in_domain(n[0], s_.domain)) return false;
    return eval_bound(s_.lower, n[0], true) <= n[1] && n[1] <= eval_bound(s_.upper, n[0], false);
  }
  std::vector<IntVec> shell(Int h) const override {
    std::vector<IntVec> out;
    auto push_full_row = [&](Int n1) {
      if (!in_domain(n1, s_.domain)) return;
      Int lo = std::max(eval_bound(s_.lower, n1, true), -h);
      Int hi = std::min(eval_bound(s_.upper, n1, false), h);
      for (Int n2 = lo; n2 <= hi; ++n2) out.push_back({n1, n2});
    };
    auto push_edges = [&](Int n1) {
      if (!in_domain(n1, s_.domain)) return;
      Int lo = eval_bound(s_.lower, n1, true), hi = eval_bound(s_.upper, n1, false);
      for (Int t : {-h, h})
        if (lo <= t && t <= hi && (t != -h || h != 0)) out.push_back({n1, t});
      if (h == 0) out.erase(std::unique(out.begin(), out.end()), out.end());
    };
    push_full_row(-h);
    if (h == 0) {
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    }
    if (monotone_in_abs(s_.lower) && monotone_in_abs(s_.upper)) {
      // a in [0, h-1] with lower(a) <= t <= upper(a): a suffix of a prefix.
      std::set<Int> cand;
      for (Int t : {-h, h}) {
        Int lo = 0, hi = h;  // largest a < h with lower(a) <= t, as first failing index
        while (lo < hi) {
          Int mid = lo + (hi - lo) / 2;
          if (eval_bound(s_.lower, mid, true) <= t) lo = mid + 1;
          else hi = mid;
        }
        Int pmax = lo - 1;
        lo = 0;
        hi = h;
        while (lo < hi) {
          Int mid = lo + (hi - lo) / 2;
          if (eval_bound(s_.upper, mid, false) >= t) hi = mid;
          else lo = mid + 1;
        }
        for (Int a = lo; a <= std::min(pmax, h - 1); ++a) {
          cand.insert(a);
          cand.insert(-a);
        }
      }
      for (Int n1 : cand) push_edges(n1);
    } else {
      for (Int n1 = -h + 1; n1 <= h - 1; ++n1) push_edges(n1);
    }
    push_full_row(h);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  std::optional<std::vector<ExactReal>> direction() const override {
    // Both bounds superlinear with positive leading coefficient: n_1 / n_2 -> 0.
    auto superlinear = [](const StripBound& b) { return b.exponent > 1 && b.coef > 0; };
    if (superlinear(s_.lower) && superlinear(s_.upper)) return std::vector<ExactReal>{0, 1};
    return std::nullopt;
  }

  Provenance provenance() const override {
    Provenance p("strip");
    p.set("kind", s_.kind);
    if (s_.kind != "parabolic") {
      auto fmt = [](const StripBound& b) {
        return rational_string(b.slope) + "," + rational_string(b.coef) + "," + rational_string(b.exponent);
      };
      p.set("lower", fmt(s_.lower)).set("upper", fmt(s_.upper));
      p.set("domain", to_string(s_.domain));
      p.set("lengths_unbounded", s_.lengths_unbounded ? "asserted" : "not_asserted");
    }
    return p;
  }

 private:
  StripSpec s_;
};

class BandNode : public SetNode {
 public:
  explicit BandNode(BandSpec s) : s_(std::move(s)) {
    std::size_t k = s_.center.size();
    if (s_.width.size() != k || s_.exponent.size() != k)
      throw DimensionMismatch("band parameters must have equal length");
    for (std::size_t j = 0; j < k; ++j) {
      if (s_.width[j] < 0 || s_.exponent[j] < 0)
        throw PreconditionError("band widths and exponents must be nonnegative");
      wd_.push_back(static_cast<long double>(s_.width[j].get_d()));
      ed_.push_back(static_cast<long double>(s_.exponent[j].get_d()));
    }
  }
  std::size_t dim() const override { return s_.center.size() + 1; }

  std::pair<Int, Int> range(std::size_t j, Int n1) const {
    long double a = static_cast<long double>(n1 < 0 ? -n1 : n1);
    long double w = wd_[j] * powl(a, ed_[j]);
    Rational c = s_.center[j] * Rational(static_cast<long>(n1));
    long double cd = static_cast<long double>(c.get_d());
    return {static_cast<Int>(ceill(cd - w - 1e-12L)), static_cast<Int>(floorl(cd + w + 1e-12L))};
  }

  bool contains(const IntVec& n) const override {
    if (n.size() != dim() || !in_domain(n[0], s_.domain)) return false;
    for (std::size_t j = 0; j + 1 < n.size(); ++j) {
      auto [lo, hi] = range(j, n[0]);
      if (n[j + 1] < lo || n[j + 1] > hi) return false;
    }
    return true;
  }

  std::vector<IntVec> shell(Int h) const override {
    std::vector<IntVec> out;
    auto row = [&](Int n1, bool full) {
      if (!in_domain(n1, s_.domain)) return;
      std::vector<std::pair<Int, Int>> rs;
      for (std::size_t j = 0; j + 1 < dim(); ++j) {
        auto [lo, hi] = range(j, n1);
        lo = std::max(lo, -h);
        hi = std::min(hi, h);
        if (lo > hi) return;
        rs.emplace_back(lo, hi);
      }
      product_ranges(rs, h, !full, {n1}, out);
    };
    if (h == 0) {
      row(0, true);
      return out;
    }
    row(-h, true);
    // |n1| < h contributes only if some coordinate can reach +-h.
    auto reach = [&](Int a) {
      long double best = 0;
      for (std::size_t j = 0; j + 1 < dim(); ++j) {
        long double c = fabsl(static_cast<long double>(s_.center[j].get_d()));
        best = std::max(best, c * a + wd_[j] * powl(static_cast<long double>(a), ed_[j]));
      }
      return best + 1.0L;
    };
    Int lo = 0, hi = h;
    while (lo < hi) {
      Int mid = lo + (hi - lo) / 2;
      if (reach(mid) >= static_cast<long double>(h)) hi = mid;
      else lo = mid + 1;
    }
    Int a0 = std::max<Int>(lo, 1);
    for (Int n1 = -(h - 1); n1 <= -a0; ++n1) row(n1, false);
    if (lo == 0) row(0, false);
    for (Int n1 = a0; n1 <= h - 1; ++n1) row(n1, false);
    row(h, true);
    return out;
  }

  std::optional<std::vector<ExactReal>> direction() const override {
    std::vector<ExactReal> d{1};
    for (std::size_t j = 0; j < s_.center.size(); ++j) {
      if (s_.exponent[j] >= 1 && s_.width[j] > 0) return std::nullopt;
      d.emplace_back(s_.center[j]);
    }
    return d;
  }

  Provenance provenance() const override {
    Provenance p("band");
    p.set("domain", to_string(s_.domain));
    p.set("center", format_rat_vector(s_.center));
    p.set("width", format_rat_vector(s_.width));
    p.set("exponent", format_rat_vector(s_.exponent));
    return p;
  }

 private:
  BandSpec s_;
  std::vector<long double> wd_, ed_;
};

class FilterNode : public SetNode {
 public:
  explicit FilterNode(LatticeSet child) : child_(std::move(child)) {}
  std::size_t dim() const override { return child_.dim(); }
  bool contains(const IntVec& n) const override { return child_.contains(n) && keep(n); }
  std::vector<IntVec> shell(Int h) const override { return filter(child_.shell(h)); }
  std::vector<IntVec> members_where(Int lo, Int hi, const Predicate& keep_also) const override {
    if (!keep_also) return child_.members_where(lo, hi, [this](const IntVec& n) { return keep(n); });
    return child_.members_where(lo, hi, [&](const IntVec& n) { return keep(n) && keep_also(n); });
  }
  std::optional<std::vector<ExactReal>> direction() const override { return child_.direction(); }
  virtual bool keep(const IntVec& n) const = 0;

 protected:
  std::vector<IntVec> filter(std::vector<IntVec> v) const {
    v.erase(std::remove_if(v.begin(), v.end(), [&](const IntVec& n) { return !keep(n); }), v.end());
    return v;
  }
  Provenance wrap(Provenance p) const {
    p.add(child_.provenance());
    return p;
  }
  LatticeSet child_;
};

class BandRemoveNode : public FilterNode {
 public:
  BandRemoveNode(LatticeSet c, std::size_t i, Int k) : FilterNode(std::move(c)), i_(i), k_(k) {
    if (k == 0) throw PreconditionError("band_remove needs k != 0");
    if (i >= dim()) throw DimensionMismatch("band coordinate out of range");
  }
  bool keep(const IntVec& n) const override { return n[i_] != k_; }
  Provenance provenance() const override {
    Provenance p("band_remove");
    p.set("coord", std::to_string(i_ + 1)).set("k", std::to_string(k_));
    return wrap(p);
  }

 private:
  std::size_t i_;
  Int k_;
};

class EssentialNode : public FilterNode {
 public:
  using FilterNode::FilterNode;
  bool keep(const IntVec& n) const override { return is_essential(n); }
  Provenance provenance() const override { return wrap(Provenance("essential")); }
};

class OrderClassNode : public FilterNode {
 public:
  OrderClassNode(LatticeSet c, std::vector<std::size_t> perm, std::string selection)
      : FilterNode(std::move(c)), perm_(std::move(perm)), selection_(std::move(selection)) {
    if (perm_.size() != dim()) throw DimensionMismatch("permutation has wrong length");
  }
  bool keep(const IntVec& n) const override {
    for (std::size_t a = 0; a + 1 < perm_.size(); ++a) {
      Int x = n[perm_[a]], y = n[perm_[a + 1]];
      if ((x < 0 ? -x : x) < (y < 0 ? -y : y)) return false;
    }
    return true;
  }
  Provenance provenance() const override {
    Provenance p("order_class");
    p.set("perm", format_perm(perm_));
    if (!selection_.empty()) p.set("selection", selection_);
    return wrap(p);
  }

 private:
  std::vector<std::size_t> perm_;
  std::string selection_;
};

class BallComplementNode : public FilterNode {
 public:
  BallComplementNode(LatticeSet c, Int m) : FilterNode(std::move(c)), m_(m) {}
  bool keep(const IntVec& n) const override {
    for (Int x : n)
      if ((x < 0 ? -x : x) <= m_) return false;
    return true;
  }
  std::vector<IntVec> shell(Int h) const override {
    if (h <= m_) return {};
    return FilterNode::shell(h);
  }
  std::vector<IntVec> members_where(Int lo, Int hi, const Predicate& keep_also) const override {
    lo = std::max(lo, m_ + 1);
    if (lo > hi) return {};
    return FilterNode::members_where(lo, hi, keep_also);
  }
  Provenance provenance() const override {
    Provenance p("ball_complement");
    p.set("m", std::to_string(m_));
    return wrap(p);
  }

 private:
  Int m_;
};

class TaggedNode : public FilterNode {
 public:
  TaggedNode(LatticeSet c, Provenance tag) : FilterNode(std::move(c)), tag_(std::move(tag)) {}
  bool keep(const IntVec&) const override { return true; }
  std::vector<IntVec> shell(Int h) const override { return child_.shell(h); }
  std::vector<IntVec> members_where(Int lo, Int hi, const Predicate& keep_also) const override {
    return child_.members_where(lo, hi, keep_also);
  }
  Provenance provenance() const override { return wrap(tag_); }

 private:
  Provenance tag_;
};

class HyperplaneNode : public FilterNode {
 public:
  HyperplaneNode(LatticeSet c, IntVec v) : FilterNode(std::move(c)), v_(std::move(v)) {
    if (v_.size() != dim()) throw DimensionMismatch("hyperplane normal has wrong length");
  }
  bool keep(const IntVec& n) const override {
    Int s = 0;
    for (std::size_t i = 0; i < n.size(); ++i) s = checked_add(s, checked_mul(v_[i], n[i]));
    return s == 0;
  }
  Provenance provenance() const override {
    Provenance p("hyperplane");
    p.set("normal", format_int_vector(v_));
    return wrap(p);
  }

 private:
  IntVec v_;
};

class SublatticeNode : public FilterNode {
 public:
  SublatticeNode(LatticeSet c, IntMatrix basis) : FilterNode(std::move(c)), basis_(std::move(basis)) {
    if (basis_.rows() != dim() || basis_.cols() != dim())
      throw DimensionMismatch("sublattice basis must be d x d");
    RatMatrix b(basis_);
    if (sgn(b.determinant()) == 0) throw SingularMatrix("sublattice basis is singular");
    inv_ = b.inverse();
  }
  bool keep(const IntVec& n) const override { return integral_vector(inv_ * n, nullptr); }
  Provenance provenance() const override {
    Provenance p("sublattice");
    p.set("basis", format_int_matrix(basis_));
    return wrap(p);
  }

 private:
  IntMatrix basis_;
  RatMatrix inv_;
};

class BohrFilterNode : public FilterNode {
 public:
  BohrFilterNode(LatticeSet c, BohrNeighborhood b) : FilterNode(std::move(c)), b_(std::move(b)) {
    if (b_.dim() != dim()) throw DimensionMismatch("Bohr frequencies have wrong length");
  }
  bool keep(const IntVec& n) const override { return b_.contains(n); }
  Provenance provenance() const override {
    Provenance p("bohr");
    std::string f;
    for (std::size_t j = 0; j < b_.freqs().size(); ++j) {
      if (j) f += ";";
      for (std::size_t i = 0; i < b_.freqs()[j].size(); ++i) {
        if (i) f += ",";
        f += to_string(b_.freqs()[j][i]);
      }
    }
    p.set("freqs", f).set("eps", format_double(b_.eps()));
    if (!b_.freqs()[0].empty() && !is_exact(b_.freqs()[0][0])) p.set("mode", "float");
    return wrap(p);
  }

 private:
  BohrNeighborhood b_;
};

class PermuteNode : public SetNode {
 public:
  PermuteNode(LatticeSet c, std::vector<std::size_t> perm) : child_(std::move(c)), perm_(std::move(perm)) {
    if (perm_.size() != child_.dim()) throw DimensionMismatch("permutation has wrong length");
    std::vector<bool> seen(perm_.size(), false);
    for (auto p : perm_) {
      if (p >= perm_.size() || seen[p]) throw PreconditionError("not a permutation");
      seen[p] = true;
    }
  }
  std::size_t dim() const override { return perm_.size(); }
  IntVec forward(const IntVec& n) const {
    IntVec o(n.size());
    for (std::size_t a = 0; a < n.size(); ++a) o[a] = n[perm_[a]];
    return o;
  }
  bool contains(const IntVec& o) const override {
    IntVec n(o.size());
    for (std::size_t a = 0; a < o.size(); ++a) n[perm_[a]] = o[a];
    return child_.contains(n);
  }
  std::vector<IntVec> shell(Int h) const override { return members_between(h, h); }
  std::vector<IntVec> members_where(Int lo, Int hi, const Predicate& keep) const override {
    std::vector<IntVec> v;
    if (keep) v = child_.members_where(lo, hi, [&](const IntVec& n) { return keep(forward(n)); });
    else v = child_.members_between(lo, hi);
    for (auto& n : v) n = forward(n);
    sort_enumeration(v);
    return v;
  }
  std::optional<std::vector<ExactReal>> direction() const override {
    auto d = child_.direction();
    if (!d) return d;
    std::vector<ExactReal> o(d->size());
    for (std::size_t a = 0; a < o.size(); ++a) o[a] = (*d)[perm_[a]];
    return o;
  }
  Provenance provenance() const override {
    Provenance p("permute");
    p.set("perm", format_perm(perm_));
    p.add(child_.provenance());
    return p;
  }

 private:
  LatticeSet child_;
  std::vector<std::size_t> perm_;
};

Rational row_sum_norm(const RatMatrix& m) {
  Rational best = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Rational s = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += abs(m(i, j));
    if (s > best) best = s;
  }
  return best;
}

// Rational matrix as integer numerators over one common denominator.
struct ScaledMatrix {
  IntMatrix num;
  Int den = 1;

  explicit ScaledMatrix(const RatMatrix& m) : num(m.rows(), m.cols()) {
    mpz_class l = 1;
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(i, j).get_den_mpz_t());
    den = to_int(l);
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) num(i, j) = to_int(m(i, j).get_num() * (l / m(i, j).get_den()));
  }

  // Integer image, or nothing when some entry is fractional.
  std::optional<IntVec> apply(const IntVec& v) const {
    IntVec out(num.rows());
    for (std::size_t i = 0; i < num.rows(); ++i) {
      __int128 s = 0;
      for (std::size_t j = 0; j < num.cols(); ++j) s += static_cast<__int128>(num(i, j)) * v[j];
      if (s % den != 0) return std::nullopt;
      s /= den;
      if (s > INT64_MAX || s < INT64_MIN) throw OverflowError("lattice map overflow");
      out[i] = static_cast<Int>(s);
    }
    return out;
  }
};

// Members of `self` are m with F m in child; recovered from child members by G.
class LinearNode : public SetNode {
 public:
  LinearNode(LatticeSet c, const RatMatrix& f, const RatMatrix& g, std::string name, std::string matrix_text)
      : child_(std::move(c)), f_(f), g_(g), name_(std::move(name)), text_(std::move(matrix_text)) {
    if (f.rows() != child_.dim()) throw DimensionMismatch("matrix height differs from set dimension");
    fn_ = row_sum_norm(f);
    gn_ = row_sum_norm(g);
  }
  std::size_t dim() const override { return f_.num.cols(); }
  bool contains(const IntVec& m) const override {
    auto n = f_.apply(m);
    return n && child_.contains(*n);
  }
  std::vector<IntVec> shell(Int h) const override { return members_between(h, h); }
  std::optional<IntVec> pull(const IntVec& n, Int lo, Int hi) const {
    auto m = g_.apply(n);
    if (!m) return std::nullopt;
    Int mn = max_norm(*m);
    if (mn < lo || mn > hi) return std::nullopt;
    auto back = f_.apply(*m);
    if (!back || *back != n) return std::nullopt;
    return m;
  }
  std::vector<IntVec> members_where(Int lo, Int hi, const Predicate& keep) const override {
    Int clo = sgn(gn_) == 0 ? 0 : floor_q(Rational(static_cast<long>(lo)) / gn_);
    Int chi = ceil_q(Rational(static_cast<long>(hi)) * fn_);
    auto hits = child_.members_where(std::max<Int>(clo, 0), chi, [&](const IntVec& n) {
      auto m = pull(n, lo, hi);
      return m && (!keep || keep(*m));
    });
    std::vector<IntVec> out;
    out.reserve(hits.size());
    for (const auto& n : hits) out.push_back(*pull(n, lo, hi));
    sort_enumeration(out);
    return out;
  }
  std::optional<std::vector<ExactReal>> direction() const override {
    auto d = child_.direction();
    if (!d) return d;
    std::vector<ExactReal> o(dim());
    for (std::size_t i = 0; i < o.size(); ++i)
      for (std::size_t j = 0; j < d->size(); ++j)
        if (g_.num(i, j) != 0) o[i] += (*d)[j].scaled(ratio(g_.num(i, j), g_.den));
    return o;
  }
  Provenance provenance() const override {
    Provenance p(name_);
    p.set("matrix", text_);
    p.add(child_.provenance());
    return p;
  }

 private:
  LatticeSet child_;
  ScaledMatrix f_, g_;
  std::string name_, text_;
  Rational fn_, gn_;
};

}  // namespace

LatticeSet integers(std::size_t d, IntegerKind kind) {
  return LatticeSet(std::make_shared<IntegersNode>(d, kind));
}

LatticeSet finite_set(std::size_t d, std::vector<IntVec> points) {
  return LatticeSet(std::make_shared<FiniteNode>(d, std::move(points)));
}

LatticeSet floor_slope_generator(const LatticeSet& base, std::vector<ExactReal> alpha) {
  return LatticeSet(std::make_shared<FloorSlopeNode>(base, std::move(alpha)));
}

StripSpec parabolic_strip() { return StripSpec{}; }

LatticeSet strip_generator(const StripSpec& spec) {
  if (spec.kind != "parabolic" && spec.kind != "custom")
    throw PreconditionError("strip kind must be parabolic or custom");
  return LatticeSet(std::make_shared<StripNode>(spec));
}

LatticeSet cone_band(const BandSpec& spec) { return LatticeSet(std::make_shared<BandNode>(spec)); }

LatticeSet band_remove(const LatticeSet& gen, std::size_t i, Int k) {
  return LatticeSet(std::make_shared<BandRemoveNode>(gen, i, k));
}

LatticeSet apply_rational_matrix(const LatticeSet& gen, const RatMatrix& m, MatrixDirection dir) {
  if (m.rows() != gen.dim() || m.cols() != gen.dim()) throw DimensionMismatch("matrix must be d x d");
  if (sgn(m.determinant()) == 0) throw SingularMatrix("matrix is singular");
  RatMatrix inv = m.inverse();
  if (dir == MatrixDirection::Pullback)
    return LatticeSet(std::make_shared<LinearNode>(gen, m, inv, "pullback", format_rat_matrix(m)));
  return LatticeSet(std::make_shared<LinearNode>(gen, inv, m, "image", format_rat_matrix(m)));
}

LatticeSet linear_pullback(const LatticeSet& gen, const IntMatrix& b) {
  if (b.rows() != gen.dim()) throw DimensionMismatch("matrix height differs from set dimension");
  RatMatrix f(b);
  RatMatrix ft = f.transpose();
  RatMatrix gram = ft * f;
  if (sgn(gram.determinant()) == 0) throw SingularMatrix("matrix lacks full column rank");
  RatMatrix g = gram.inverse() * ft;
  return LatticeSet(std::make_shared<LinearNode>(gen, f, g, "linear_pullback", format_int_matrix(b)));
}

LatticeSet intersect_sublattice(const LatticeSet& gen, const IntMatrix& basis) {
  return LatticeSet(std::make_shared<SublatticeNode>(gen, basis));
}

LatticeSet essential(const LatticeSet& gen) { return LatticeSet(std::make_shared<EssentialNode>(gen)); }

LatticeSet order_class(const LatticeSet& gen, const std::vector<std::size_t>& perm,
                       const std::string& selection) {
  return LatticeSet(std::make_shared<OrderClassNode>(gen, perm, selection));
}

LatticeSet permute_coordinates(const LatticeSet& gen, const std::vector<std::size_t>& perm) {
  return LatticeSet(std::make_shared<PermuteNode>(gen, perm));
}

LatticeSet ball_complement(const LatticeSet& gen, Int m) {
  return LatticeSet(std::make_shared<BallComplementNode>(gen, m));
}

LatticeSet tagged(const LatticeSet& gen, Provenance tag) {
  if (!tag.children.empty()) throw PreconditionError("tag must not have children");
  return LatticeSet(std::make_shared<TaggedNode>(gen, std::move(tag)));
}

LatticeSet hyperplane(const LatticeSet& gen, const IntVec& v) {
  return LatticeSet(std::make_shared<HyperplaneNode>(gen, v));
}

LatticeSet bohr_filter(const LatticeSet& gen, const BohrNeighborhood& b) {
  return LatticeSet(std::make_shared<BohrFilterNode>(gen, b));
}

LatticeSet bohr_set(const BohrNeighborhood& b) { return bohr_filter(integers(b.dim()), b); }

}  // namespace nilrec
