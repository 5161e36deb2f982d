#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "nilrec/lattice_sets.hpp"

namespace nilrec {

bool is_essential(const IntVec& n) {
  return std::none_of(n.begin(), n.end(), [](Int x) { return x == 0; });
}

bool is_ordered(const IntVec& n) {
  for (std::size_t i = 0; i + 1 < n.size(); ++i)
    if ((n[i] < 0 ? -n[i] : n[i]) < (n[i + 1] < 0 ? -n[i + 1] : n[i + 1])) return false;
  return true;
}

BohrNeighborhood::BohrNeighborhood(std::vector<std::vector<Scalar>> freqs, double eps)
    : freqs_(std::move(freqs)), eps_(eps) {
  if (!(eps > 0)) throw PreconditionError("eps must be positive");
  if (freqs_.empty()) throw PreconditionError("at least one frequency vector is needed");
  dim_ = freqs_[0].size();
  bool any_exact = false, any_float = false;
  for (const auto& f : freqs_) {
    if (f.size() != dim_) throw DimensionMismatch("frequency vectors differ in length");
    for (const auto& s : f) (is_exact(s) ? any_exact : any_float) = true;
  }
  if (any_exact && any_float) throw MixedModeError("frequency vectors mix exact and floating entries");
  exact_ = !any_float;
}

double BohrNeighborhood::distance(const IntVec& n) const {
  if (n.size() != dim_) throw DimensionMismatch("vector length differs from Bohr dimension");
  double best = 0;
  for (const auto& f : freqs_) {
    double t;
    if (exact_) {
      ExactReal s;
      for (std::size_t i = 0; i < dim_; ++i) s += exact_of(f[i]).scaled(n[i]);
      t = torus_norm(s).convert_to<double>();
    } else {
      long double s = 0;
      for (std::size_t i = 0; i < dim_; ++i) s += static_cast<long double>(n[i]) * std::get<double>(f[i]);
      t = torus_norm(static_cast<double>(s - floorl(s)));
    }
    best = std::max(best, t);
  }
  return best;
}

bool BohrNeighborhood::contains(const IntVec& n) const {
  if (!exact_) return distance(n) < eps_;
  BigFloat e(eps_);
  for (const auto& f : freqs_) {
    ExactReal s;
    for (std::size_t i = 0; i < dim_; ++i) s += exact_of(f[i]).scaled(n[i]);
    if (!(torus_norm(s) < e)) return false;
  }
  return true;
}

namespace {

void check_bohr_eps(double eps) {
  if (!(eps > 0 && eps < 0.5)) throw PreconditionError("bohr_min_element needs 0 < eps < 1/2");
}

}  // namespace

Int bohr_min_element(const ExactReal& freq, double eps, Int cap) {
  check_bohr_eps(eps);
  long double f = freq.is_rational() ? static_cast<long double>(freq.to_double())
                                     : freq.eval().convert_to<long double>();
  BigFloat e(eps);
  for (Int n = 1; n <= cap; ++n) {
    long double x = static_cast<long double>(n) * f;
    long double t = x - floorl(x);
    t = std::min(t, 1.0L - t);
    if (fabsl(t - static_cast<long double>(eps)) > 1e-9L) {
      if (t < eps) return n;
      continue;
    }
    if (torus_norm(freq.scaled(n)) < e) return n;
  }
  throw SearchExhausted("no Bohr element below the cap");
}

Int bohr_min_element(double freq, double eps, Int cap) {
  check_bohr_eps(eps);
  for (Int n = 1; n <= cap; ++n) {
    long double x = static_cast<long double>(n) * freq;
    double t = static_cast<double>(x - floorl(x));
    if (torus_norm(t) < eps) return n;
  }
  throw SearchExhausted("no Bohr element below the cap");
}

NormalizeResult normalize_essential_ordered(const LatticeSet& gen, Int horizon) {
  if (horizon < 1) throw PreconditionError("horizon must be at least 1");
  std::size_t d = gen.dim();
  NormalizeDiagnostics diag;
  std::vector<IntVec> survivors;
  for (auto& n : gen.members(horizon)) {
    ++diag.scanned;
    if (is_essential(n)) survivors.push_back(std::move(n));
    else ++diag.dropped_non_essential;
  }
  diag.survivors = survivors.size();
  diag.empty = survivors.empty();

  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  std::size_t best_count = 0;
  bool first = true;
  do {
    std::size_t c = 0;
    for (const auto& n : survivors) {
      bool ok = true;
      for (std::size_t a = 0; ok && a + 1 < d; ++a) {
        Int x = n[perm[a]], y = n[perm[a + 1]];
        ok = (x < 0 ? -x : x) >= (y < 0 ? -y : y);
      }
      c += ok;
    }
    diag.class_counts.emplace_back(perm, c);
    if (first || c > best_count) {
      best = perm;
      best_count = c;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  LatticeSet out = permute_coordinates(order_class(essential(gen), best, "majority"), best);
  return NormalizeResult{out, best, diag};
}

std::optional<IntVec> redundancy_detect(const LatticeSet& gen, Int horizon, const RedundancyOptions& opts) {
  std::size_t d = gen.dim();
  std::size_t threshold = opts.threshold ? opts.threshold : 2 * d;
  // Echelon rows with pivot columns.
  std::vector<RatVec> rows;
  std::vector<std::size_t> pivots;
  std::size_t count = 0;
  SetStream st = gen.stream(horizon);
  for (auto block = st.next_block(); !block.empty(); block = st.next_block()) {
    for (const auto& n : block) {
      ++count;
      RatVec v(n.begin(), n.end());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (sgn(v[pivots[r]]) == 0) continue;
        Rational f = v[pivots[r]];
        for (std::size_t j = 0; j < d; ++j) v[j] -= f * rows[r][j];
      }
      auto it = std::find_if(v.begin(), v.end(), [](const Rational& q) { return sgn(q) != 0; });
      if (it == v.end()) continue;
      std::size_t p = static_cast<std::size_t>(it - v.begin());
      Rational inv = 1 / v[p];
      for (auto& x : v) x *= inv;
      for (auto& row : rows) {
        if (sgn(row[p]) == 0) continue;
        Rational f = row[p];
        for (std::size_t j = 0; j < d; ++j) row[j] -= f * v[j];
      }
      rows.push_back(std::move(v));
      pivots.push_back(p);
      if (rows.size() == d) return std::nullopt;
    }
  }
  if (count <= threshold) return std::nullopt;

  RatMatrix m(rows.empty() ? 1 : rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = rows[i][j];
  auto ker = rational_kernel(m);
  if (ker.size() == 1) {
    IntVec v = primitive_integer_vector(ker[0]);
    if (max_abs(v) <= opts.coeff_bound) return v;
    return std::nullopt;
  }
  for (Int h = 1; h <= opts.coeff_bound; ++h) {
    for (const auto& v : integer_shell(d, h)) {
      auto nz = std::find_if(v.begin(), v.end(), [](Int x) { return x != 0; });
      if (*nz < 0) continue;
      bool ok = true;
      for (std::size_t i = 0; ok && i < rows.size(); ++i) {
        Rational s = 0;
        for (std::size_t j = 0; j < d; ++j) s += rows[i][j] * Rational(static_cast<long>(v[j]));
        ok = sgn(s) == 0;
      }
      if (ok) return v;
    }
  }
  return std::nullopt;
}

void write_members_csv(std::ostream& os, const LatticeSet& gen, Int horizon) {
  for (std::size_t i = 0; i < gen.dim(); ++i) os << (i ? "," : "") << "n_" << i + 1;
  os << "\n";
  SetStream st = gen.stream(horizon);
  for (auto block = st.next_block(); !block.empty(); block = st.next_block())
    for (const auto& n : block) os << format_int_vector(n) << "\n";
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

Int parse_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw PreconditionError("not an integer: '" + s + "'");
  }
}

template <class T, class F>
std::string join(const std::vector<T>& v, char sep, F f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += f(v[i]);
  }
  return out;
}

}  // namespace

std::string format_int_vector(const IntVec& v) {
  return join(v, ',', [](Int x) { return std::to_string(x); });
}

IntVec parse_int_vector(const std::string& s) {
  IntVec out;
  for (const auto& t : split(s, ',')) out.push_back(parse_int(t));
  return out;
}

std::string format_rat_vector(const std::vector<Rational>& v) {
  return join(v, ',', [](const Rational& q) { return rational_string(q); });
}

std::vector<Rational> parse_rat_vector(const std::string& s) {
  std::vector<Rational> out;
  for (const auto& t : split(s, ',')) out.push_back(parse_rational(t));
  return out;
}

std::string format_int_matrix(const IntMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += ";";
    out += format_int_vector(m.row(i));
  }
  return out;
}

IntMatrix parse_int_matrix(const std::string& s) {
  std::vector<IntVec> rows;
  for (const auto& r : split(s, ';')) rows.push_back(parse_int_vector(r));
  if (rows.empty()) return IntMatrix();
  IntMatrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw DimensionMismatch("matrix rows differ in length");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::string format_rat_matrix(const RatMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += ";";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ",";
      out += rational_string(m(i, j));
    }
  }
  return out;
}

RatMatrix parse_rat_matrix(const std::string& s) {
  std::vector<std::vector<Rational>> rows;
  for (const auto& r : split(s, ';')) rows.push_back(parse_rat_vector(r));
  if (rows.empty()) return RatMatrix();
  RatMatrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw DimensionMismatch("matrix rows differ in length");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::string format_exact_vector(const std::vector<ExactReal>& v) {
  return join(v, ',', [](const ExactReal& x) { return x.to_string(); });
}

std::vector<ExactReal> parse_exact_vector(const std::string& s, const BasisPtr& basis) {
  std::vector<ExactReal> out;
  for (const auto& t : split(s, ',')) out.push_back(ExactReal::parse(t, basis));
  return out;
}

std::string format_perm(const std::vector<std::size_t>& p) {
  return join(p, ',', [](std::size_t x) { return std::to_string(x + 1); });
}

std::vector<std::size_t> parse_perm(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& t : split(s, ',')) {
    Int x = parse_int(t);
    if (x < 1) throw PreconditionError("permutation entries are 1-based");
    out.push_back(static_cast<std::size_t>(x - 1));
  }
  std::vector<std::size_t> sorted = out;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != i) throw PreconditionError("not a permutation: '" + s + "'");
  return out;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace nilrec
