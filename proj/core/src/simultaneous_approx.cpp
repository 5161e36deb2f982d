#include "nilrec/simultaneous_approx.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "nilrec/integer_relation.hpp"

namespace nilrec {

namespace {

long double frac_ld(long double x) {
  long double r = x - floorl(x);
  return r >= 1.0L ? 0.0L : r;
}

BigFloat frac_big(const BigFloat& x) { return x - floor(x); }

BigFloat tnorm(const BigFloat& x) {
  BigFloat f = frac_big(x);
  return f > BigFloat(0.5) ? BigFloat(1) - f : f;
}

std::vector<std::size_t> row_support(const CorrelationVector& p, std::size_t l) {
  std::vector<std::size_t> out;
  for (std::size_t j = l + 1; j < p.dim(); ++j)
    if (p.nonzero(l, j)) out.push_back(j);
  return out;
}

BigFloat big_of(const Scalar& s) {
  if (is_exact(s)) return exact_of(s).eval();
  return BigFloat(std::get<double>(s));
}

}  // namespace

double circle_gap(const std::vector<double>& xs, Int n) {
  if (xs.size() != 1) throw DimensionMismatch("circle_gap takes one slope");
  long double x = xs[0];
  std::vector<long double> pts;
  pts.reserve(static_cast<std::size_t>(2 * n + 1));
  for (Int k = -n; k <= n; ++k) pts.push_back(frac_ld(static_cast<long double>(k) * x));
  std::sort(pts.begin(), pts.end());
  long double gap = pts.front() + 1.0L - pts.back();
  for (std::size_t i = 1; i < pts.size(); ++i) gap = std::max(gap, pts[i] - pts[i - 1]);
  return static_cast<double>(gap);
}

double grid_audit(const std::vector<double>& xs, Int n, double resolution) {
  std::size_t m = xs.size();
  if (m == 0) return 0;
  if (!(resolution > 0)) throw PreconditionError("audit resolution must be positive");
  auto steps = static_cast<std::size_t>(std::ceil(1.0 / resolution));
  double cells = std::pow(static_cast<double>(steps), static_cast<double>(m));
  if (cells * static_cast<double>(2 * n + 1) > 4e9)
    throw PreconditionError("grid audit too large: " + format_double(cells) + " grid points");
  std::vector<std::vector<double>> samples;
  for (Int k = -n; k <= n; ++k) {
    std::vector<double> s(m);
    for (std::size_t j = 0; j < m; ++j)
      s[j] = static_cast<double>(frac_ld(static_cast<long double>(k) * static_cast<long double>(xs[j])));
    samples.push_back(std::move(s));
  }
  std::vector<std::size_t> idx(m, 0);
  double worst = 0;
  while (true) {
    double best = 1;
    for (const auto& s : samples) {
      double dist = 0;
      for (std::size_t j = 0; j < m && dist < best; ++j) {
        double g = static_cast<double>(idx[j]) / static_cast<double>(steps);
        dist = std::max(dist, torus_norm(g - s[j]));
      }
      best = std::min(best, dist);
    }
    worst = std::max(worst, best);
    std::size_t a = 0;
    while (a < m && ++idx[a] == steps) idx[a++] = 0;
    if (a == m) break;
  }
  return worst;
}

bool row_dense(const std::vector<double>& xs, Int n, double eps, const DensityOptions& opts) {
  if (xs.empty() || eps >= 0.5) return true;
  if (xs.size() == 1) return circle_gap(xs, n) <= eps;
  double res = eps / opts.audit_div;
  return 2 * (grid_audit(xs, n, res) + res / 2) <= eps;
}

Int density_horizon_row(const CorrelationVector& p, std::size_t l, double eps, const DensityOptions& opts) {
  if (!(eps > 0)) throw PreconditionError("eps must be positive");
  if (l >= p.dim()) throw DimensionMismatch("row out of range");
  std::vector<double> xs;
  for (std::size_t j : row_support(p, l)) xs.push_back(p.value(l, j));
  if (xs.empty() || eps >= 0.5) return 1;
  Int hi = 1;
  while (!row_dense(xs, hi, eps, opts)) {
    if (hi >= opts.cap) {
      std::string why;
      if (p.is_exact()) {
        std::vector<ExactReal> row{ExactReal(1)};
        for (std::size_t j : row_support(p, l)) row.push_back(exact_of(p.at(l, j)));
        if (auto rel = integer_relation(row, 1)) why = "; row is rationally dependent, relation " + to_string(*rel);
      }
      throw SearchExhausted("row " + std::to_string(l + 1) + " is not " + format_double(eps) +
                            "-dense for N up to " + std::to_string(opts.cap) + why);
    }
    hi = std::min(opts.cap, 2 * hi);
  }
  Int lo = hi / 2;  // not dense at lo (or lo == 0)
  while (hi - lo > 1) {
    Int mid = lo + (hi - lo) / 2;
    if (row_dense(xs, mid, eps, opts)) hi = mid;
    else lo = mid;
  }
  return hi;
}

Int density_horizon(const CorrelationVector& p, double eps, std::size_t r, const DensityOptions& opts) {
  Int n = std::max<Int>(1, static_cast<Int>(r));
  for (std::size_t l = 0; l < p.dim(); ++l) n = std::max(n, density_horizon_row(p, l, eps, opts));
  return n;
}

Int theorem_b_M(Int n, double eps) {
  if (!(eps > 0)) throw PreconditionError("eps must be positive");
  // exact ceil of n / eps for the double eps
  Rational q = Rational(n) / Rational(eps);
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return checked_add(to_int(c), 1);
}

ApproximationCertificate approximate_targets(const CorrelationVector& p, const IntVec& n,
                                             const std::vector<TorusPoint>& w, double eps, Int N) {
  std::size_t d = p.dim();
  if (n.size() != d || w.size() != d) throw DimensionMismatch("n and targets must have d entries");
  std::size_t r = w[0].dim();
  if (r == 0) throw PreconditionError("targets must have positive dimension");
  for (const auto& t : w)
    if (t.dim() != r) throw DimensionMismatch("targets differ in dimension");
  if (!(eps > 0)) throw PreconditionError("eps must be positive");

  ApproximationCertificate cert;
  cert.n = n;
  cert.eps = eps;
  cert.N = N > 0 ? N : density_horizon(p, eps, r);
  cert.M = theorem_b_M(cert.N, eps);
  cert.C = checked_add(cert.N, static_cast<Int>(d) + 1);
  for (Int x : n)
    if ((x < 0 ? -x : x) <= cert.M)
      throw PreconditionError("n = " + to_string(n) + " has a coordinate of size <= M = " + std::to_string(cert.M));
  if (!filter_correlated(integers(d), p, eps / static_cast<double>(cert.M)).contains(n))
    throw PreconditionError("n = " + to_string(n) + " is not correlated within eps / M");

  for (const auto& t : w) {
    std::vector<BigFloat> c(r);
    for (std::size_t a = 0; a < r; ++a)
      c[a] = t.is_exact() ? frac_big(t.exact_coords()[a].eval()) : frac_big(BigFloat(t.float_coords()[a]));
    cert.w.push_back(std::move(c));
  }

  BigFloat big_eps(eps), big_c(cert.C);
  cert.y_parts.assign(d, std::vector<BigFloat>(r));
  cert.k.assign(d, IntVec(r, 0));
  cert.y_parts[d - 1] = cert.w[d - 1];
  for (std::size_t l = d - 1; l-- > 0;) {
    auto support = row_support(p, l);
    std::vector<BigFloat> slopes;
    for (std::size_t j : support) slopes.push_back(big_of(p.at(l, j)));
    for (std::size_t a = 0; a < r; ++a) {
      BigFloat t = cert.w[l][a];
      for (std::size_t i = l + 1; i < d; ++i)
        t -= frac_big(BigFloat(n[l]) / BigFloat(n[i]) * cert.y_parts[i][a]);
      std::optional<Int> found;
      BigFloat best_dev(1);
      for (Int step = 0; step <= 2 * cert.N && !found; ++step) {
        Int k = step % 2 == 1 ? (step + 1) / 2 : -(step / 2);
        BigFloat dev(0);
        for (const auto& s : slopes) dev = std::max(dev, tnorm(s * (BigFloat(k) + t)));
        best_dev = std::min(best_dev, dev);
        if (dev <= big_eps) found = k;
      }
      if (!found)
        throw PreconditionError("no k in [-N, N] for row " + std::to_string(l + 1) + ", coordinate " +
                                std::to_string(a + 1) + " (best deviation " +
                                format_double(best_dev.convert_to<double>()) + ")");
      cert.k[l][a] = *found;
      cert.y_parts[l][a] = t + BigFloat(*found);
      if (abs(cert.y_parts[l][a]) > big_c)
        throw InternalBoundBreach("|y_" + std::to_string(l + 1) + "| exceeds C = " + std::to_string(cert.C));
    }
  }

  cert.y.assign(r, BigFloat(0));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t a = 0; a < r; ++a) cert.y[a] += cert.y_parts[i][a] / BigFloat(n[i]);
  cert.y_norm = 0;
  cert.error = 0;
  for (std::size_t a = 0; a < r; ++a) {
    cert.y_norm = std::max(cert.y_norm, BigFloat(abs(cert.y[a])));
    for (std::size_t i = 0; i < d; ++i) cert.error += tnorm(BigFloat(n[i]) * cert.y[a] - cert.w[i][a]);
  }
  return cert;
}

ApproximationCertificate approximate_targets_rescaled(const CorrelationVector& p, const IntVec& n,
                                                      const std::vector<TorusPoint>& w, double eps, Int N) {
  double d3 = static_cast<double>(p.dim() + 3);
  return approximate_targets(p, n, w, eps / (d3 * d3 * d3), N);
}

VerifyResult verify_certificate(const ApproximationCertificate& cert) {
  std::size_t d = cert.n.size();
  if (cert.w.size() != d || cert.y_parts.size() != d) throw DimensionMismatch("certificate is inconsistent");
  std::size_t r = cert.y.size();
  VerifyResult v;
  v.y_norm = 0;
  v.error = 0;
  v.telescoped = 0;
  v.parts_match = true;
  for (std::size_t a = 0; a < r; ++a) {
    v.y_norm = std::max(v.y_norm, BigFloat(abs(cert.y[a])));
    BigFloat sum(0);
    for (std::size_t i = 0; i < d; ++i) sum += cert.y_parts[i][a] / BigFloat(cert.n[i]);
    if (abs(sum - cert.y[a]) > BigFloat(1e-20)) v.parts_match = false;
    for (std::size_t j = 0; j < d; ++j) {
      v.error += tnorm(BigFloat(cert.n[j]) * cert.y[a] - cert.w[j][a]);
      BigFloat s(0);
      for (std::size_t i = 0; i < j; ++i) s += BigFloat(cert.n[j]) / BigFloat(cert.n[i]) * cert.y_parts[i][a];
      v.telescoped += tnorm(s);
    }
  }
  v.telescope_ok = abs(v.error - v.telescoped) <= BigFloat(1e-9);
  return v;
}

namespace {

std::string big_list(const std::vector<BigFloat>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += big_to_string(v[i], 30);
  }
  return out;
}

std::vector<BigFloat> parse_big_list(const std::string& s) {
  std::vector<BigFloat> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(parse_big(item));
  return out;
}

}  // namespace

std::string ApproximationCertificate::to_text() const {
  std::ostringstream os;
  os << "nilrec-certificate 1\n";
  os << "eps " << format_double(eps) << "\n";
  os << "N " << N << "\nM " << M << "\nC " << C << "\n";
  os << "n " << format_int_vector(n) << "\n";
  for (std::size_t i = 0; i < w.size(); ++i) os << "w " << i + 1 << " " << big_list(w[i]) << "\n";
  for (std::size_t i = 0; i < k.size(); ++i) os << "k " << i + 1 << " " << format_int_vector(k[i]) << "\n";
  for (std::size_t i = 0; i < y_parts.size(); ++i) os << "y-part " << i + 1 << " " << big_list(y_parts[i]) << "\n";
  os << "y " << big_list(y) << "\n";
  os << "y-norm " << big_to_string(y_norm, 30) << "\n";
  os << "error " << big_to_string(error, 30) << "\n";
  os << "end\n";
  return os.str();
}

ApproximationCertificate ApproximationCertificate::parse(const std::string& text) {
  ApproximationCertificate c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  bool header = false, ended = false;
  std::map<std::size_t, std::vector<BigFloat>> ws, parts;
  std::map<std::size_t, IntVec> ks;
  auto indexed = [&](std::istringstream& ls) {
    long i = 0;
    if (!(ls >> i) || i < 1) throw ParseError("certificate", lineno, "expected a 1-based index");
    return static_cast<std::size_t>(i - 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key, rest;
    ls >> key;
    try {
      if (!header) {
        if (line != "nilrec-certificate 1") throw ParseError("certificate", lineno, "bad header");
        header = true;
        continue;
      }
      if (key == "eps") {
        ls >> rest;
        c.eps = std::stod(rest);
      } else if (key == "N" || key == "M" || key == "C") {
        Int v = 0;
        if (!(ls >> v)) throw ParseError("certificate", lineno, "expected an integer");
        (key == "N" ? c.N : key == "M" ? c.M : c.C) = v;
      } else if (key == "n") {
        ls >> rest;
        c.n = parse_int_vector(rest);
      } else if (key == "w" || key == "y-part" || key == "k") {
        std::size_t i = indexed(ls);
        ls >> rest;
        if (key == "w") ws[i] = parse_big_list(rest);
        else if (key == "y-part") parts[i] = parse_big_list(rest);
        else ks[i] = parse_int_vector(rest);
      } else if (key == "y") {
        ls >> rest;
        c.y = parse_big_list(rest);
      } else if (key == "y-norm") {
        ls >> rest;
        c.y_norm = parse_big(rest);
      } else if (key == "error") {
        ls >> rest;
        c.error = parse_big(rest);
      } else if (key == "end") {
        ended = true;
        break;
      } else {
        throw ParseError("certificate", lineno, "unknown key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError("certificate", lineno, e.what());
    }
  }
  if (!ended) throw ParseError("certificate", lineno, "missing 'end'");
  std::size_t d = c.n.size();
  if (ws.size() != d || parts.size() != d) throw ParseError("certificate", lineno, "need d targets and d y-parts");
  for (auto& [i, v] : ws) c.w.push_back(std::move(v));
  for (auto& [i, v] : parts) c.y_parts.push_back(std::move(v));
  for (auto& [i, v] : ks) c.k.push_back(std::move(v));
  return c;
}

REps build_R_eps(const LatticeSet& gen, const CorrelationVector& p, double eps, std::size_t r,
                 const DensityOptions& opts) {
  if (!p.is_exact()) throw PreconditionError("build_R_eps needs exact correlations");
  if (!(eps > 0)) throw PreconditionError("eps must be positive");
  auto check = complete_independence_check(p);
  if (!check.independent)
    throw PreconditionError("correlations are not completely independent (row " + std::to_string(check.row + 1) +
                            ", relation " + to_string(check.relation) + ")");
  double d3 = static_cast<double>(p.dim() + 3);
  REps out{gen, 0, 0, eps, eps / (d3 * d3 * d3), 0};
  out.N = density_horizon(p, out.inner_eps, r, opts);
  out.M = theorem_b_M(out.N, out.inner_eps);
  out.filter_eps = out.inner_eps / static_cast<double>(out.M);
  Provenance tag("r_eps");
  tag.set("eps", format_double(eps)).set("r", std::to_string(r));
  tag.set("N", std::to_string(out.N)).set("M", std::to_string(out.M));
  out.set = tagged(ball_complement(filter_correlated(gen, p, out.filter_eps), out.M), tag);
  return out;
}

std::vector<IntVec> sample_R_eps(const REps& r, Int horizon, std::size_t count) {
  std::vector<IntVec> out;
  SetStream s = r.set.stream(horizon);
  while (out.size() < count) {
    auto n = s.next();
    if (!n) break;
    out.push_back(std::move(*n));
  }
  if (out.empty())
    throw PreconditionError("R_eps has no members within horizon " + std::to_string(horizon) + " (M = " +
                            std::to_string(r.M) + ", N = " + std::to_string(r.N) + ")");
  return out;
}

}  // namespace nilrec
