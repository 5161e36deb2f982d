// Acceptance runner. `--criterion N` runs one check and exits 0 on pass;
// `--report` runs all of them and always exits 0.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "nilrec/formats.hpp"
#include "nilrec/recurrence.hpp"
#include "oracles.hpp"

using namespace nilrec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

void check_time(Outcome& o, const Clock& c, double limit) {
  double s = c.seconds();
  if (s >= limit) fail(o, "took " + fmt("%.1f", s) + " s, limit " + fmt("%.0f", limit) + " s");
  if (o.pass) o.detail += (o.detail.empty() ? "" : ", ") + fmt("%.2f s", s);
}

BasisPtr basis() { return IrrationalBasis::standard({"sqrt2", "sqrt3", "sqrt6"}); }
ExactReal ex(const std::string& s) { return ExactReal::parse(s, basis()); }

LatticeSet floor_slope(std::vector<ExactReal> alpha) {
  return floor_slope_generator(integers(1, IntegerKind::Positive), std::move(alpha));
}

AffineSystem skew2() {
  AffineMap t1(IntMatrix{{1, 0}, {2, 1}}, TorusPoint::exact({ex("sqrt2"), ex("sqrt2")}));
  AffineMap t2(IntMatrix::identity(2), TorusPoint::exact({ExactReal(0), ex("sqrt3")}));
  return AffineSystem({t1, t2});
}

oracle::Dec dec(const BigFloat& x) { return oracle::Dec(big_to_string(x, 45)); }

Outcome criterion1() {
  Outcome o;
  Clock clock;
  const double eps = 0.05;
  const std::size_t d = 2, r = 2;
  auto p = CorrelationVector::parse("1,2=sqrt2/2", d, basis());
  auto rs = build_R_eps(floor_slope({ExactReal(1), ex("sqrt2/2")}), p, eps, r);
  auto members = sample_R_eps(rs, 100000000, 20);
  if (members.size() < 20) fail(o, "only " + std::to_string(members.size()) + " members of R_eps");
  oracle::Gen g(1);
  std::size_t certs = 0;
  oracle::Dec worst_y = 0, worst_err = 0;
  for (const auto& n : members) {
    for (int t = 0; t < 50; ++t) {
      std::vector<TorusPoint> w;
      for (std::size_t i = 0; i < d; ++i) w.push_back(TorusPoint::floating({g.unit(), g.unit()}));
      auto c = approximate_targets_rescaled(p, n, w, eps, rs.N);
      ++certs;
      // decimal recomputation from n, the parts and the targets only
      oracle::Dec y_norm = 0, err = 0;
      for (std::size_t a = 0; a < r; ++a) {
        oracle::Dec y = 0;
        for (std::size_t i = 0; i < d; ++i) y += dec(c.y_parts[i][a]) / oracle::Dec(n[i]);
        y_norm = std::max(y_norm, oracle::Dec(abs(y)));
        for (std::size_t i = 0; i < d; ++i) {
          oracle::Dec target = oracle::frac(oracle::Dec(w[i].float_coords()[a]));
          err += oracle::tnorm(oracle::Dec(n[i]) * y - target);
        }
      }
      worst_y = std::max(worst_y, y_norm);
      worst_err = std::max(worst_err, err);
      oracle::Dec inner(c.eps);
      double dd = static_cast<double>(d);
      if (!(y_norm < oracle::Dec(eps)) || !(err < oracle::Dec(eps)))
        fail(o, "rescaled bound fails at n = " + to_string(n));
      if (!(y_norm < inner * (dd * (dd + 2))) || !(err < inner * ((dd + 3) * (dd + 3) * (dd + 3))))
        fail(o, "raw bound fails at n = " + to_string(n));
    }
  }
  o.detail = std::to_string(certs) + " certificates, max |y| " + fmt("%.3g", worst_y.convert_to<double>()) +
             ", max error " + fmt("%.3g", worst_err.convert_to<double>()) + ", N " + std::to_string(rs.N) + ", M " +
             std::to_string(rs.M);
  check_time(o, clock, 60);
  return o;
}

Outcome criterion2() {
  Outcome o;
  Clock clock;
  const int m = 200;
  auto set = essential(floor_slope({ExactReal(1), ex("sqrt2/2"), ex("sqrt6/6")}));
  auto est = estimate_correlations(set, 10000, m);
  double defect = consistency_defect(est.at(0).candidate);
  o.detail = "P = " + est[0].candidate.to_string() + ", defect " + fmt("%.4g", defect);
  if (defect > 5.0 / m) fail(o, "defect " + fmt("%.4g", defect) + " > 5/m");
  check_time(o, clock, 10);
  return o;
}

oracle::ZMat to_z(const IntMatrix& a) {
  oracle::ZMat z(a.rows(), std::vector<mpz_class>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) z[i][j] = static_cast<long>(a(i, j));
  return z;
}

Outcome criterion3() {
  Outcome o;
  oracle::Gen g(3);
  for (int t = 0; t < 100; ++t) {
    IntMatrix a = IntMatrix::identity(4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) a(i, j) = g.integer(-3, 3);
    IntMatrix e = IntMatrix::identity(4), einv = IntMatrix::identity(4);
    std::size_t i = static_cast<std::size_t>(g.integer(0, 3));
    e(i, (i + 1) % 4) = 1;
    einv(i, (i + 1) % 4) = -1;
    a = e * a * einv;
    long n = g.integer(0, 64);
    BigMatrix got = unipotent_power(a, n);
    auto want = oracle::zpow(to_z(a), n);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c)
        if (got[r][c] != want[r][c]) fail(o, "power mismatch at trial " + std::to_string(t));
  }
  auto rnd = [&] {
    return ExactReal(basis(), RatVec{ratio(g.integer(-5, 5), g.integer(1, 4)), ratio(g.integer(-3, 3), g.integer(1, 3)),
                                     ratio(g.integer(-3, 3), g.integer(1, 3)), Rational(0)});
  };
  for (int t = 0; t < 100; ++t) {
    IntMatrix nm(3, 3);
    nm(0, 1) = g.integer(-3, 3);
    nm(0, 2) = g.integer(-3, 3);
    nm(1, 2) = g.integer(-3, 3);
    IntMatrix n2 = nm * nm;
    auto poly = [&](Int x, Int y) { return IntMatrix::identity(3) + nm.scaled(x) + n2.scaled(y); };
    AffineMap f(poly(g.integer(-2, 2), g.integer(-2, 2)), TorusPoint::exact({rnd(), rnd(), rnd()}));
    AffineMap h(poly(g.integer(-2, 2), g.integer(-2, 2)), TorusPoint::exact({rnd(), rnd(), rnd()}));
    if (!(commutator(f, h) == commutator_by_composition(f, h))) fail(o, "commutator mismatch at trial " + std::to_string(t));
  }
  if (o.pass) o.detail = "100 powers, 100 commutators";
  return o;
}

// Any nonzero k in [-bound, bound]^r with k . alpha_i an integer for every i.
std::optional<IntVec> brute_witness(const std::vector<std::vector<RatVec>>& coords, std::size_t r, Int bound) {
  IntVec k(r, -bound);
  while (true) {
    if (!is_zero(k)) {
      bool all = true;
      for (const auto& alpha : coords) {
        RatVec s(alpha[0].size(), Rational(0));
        for (std::size_t j = 0; j < r; ++j)
          for (std::size_t c = 0; c < s.size(); ++c) s[c] += alpha[j][c] * Rational(k[j]);
        bool integral = s[0].get_den() == 1;
        for (std::size_t c = 1; c < s.size(); ++c) integral = integral && s[c] == 0;
        if (!integral) {
          all = false;
          break;
        }
      }
      if (all) return k;
    }
    std::size_t i = 0;
    while (i < r && k[i] == bound) k[i++] = -bound;
    if (i == r) return std::nullopt;
    ++k[i];
  }
}

Outcome criterion4() {
  Outcome o;
  Clock clock;
  oracle::Gen g(4);
  auto b = IrrationalBasis::standard({"sqrt2", "sqrt3"});
  int ergodic = 0;
  for (int t = 0; t < 50; ++t) {
    std::size_t r = static_cast<std::size_t>(g.integer(1, 2)), d = static_cast<std::size_t>(g.integer(1, 2));
    std::vector<std::vector<RatVec>> coords(d);
    std::vector<TorusPoint> alphas;
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<ExactReal> xs;
      for (std::size_t j = 0; j < r; ++j) {
        RatVec c{ratio(g.integer(-6, 6), g.integer(1, 7)), Rational(0), Rational(0)};
        int kind = static_cast<int>(g.integer(0, 3));
        if (kind >= 1) c[1] = ratio(g.integer(-2, 2), g.integer(1, 2));
        if (kind >= 2) c[2] = ratio(g.integer(-2, 2), g.integer(1, 2));
        coords[i].push_back(c);
        xs.push_back(ExactReal(b, c));
      }
      alphas.push_back(TorusPoint::exact(xs));
    }
    auto res = rotation_is_ergodic(alphas, 50);
    auto brute = brute_witness(coords, r, 50);
    if (res.ergodic != !brute.has_value()) fail(o, "disagreement on system " + std::to_string(t));
    if (!res.ergodic) {
      if (!res.witness || !is_ergodicity_witness(alphas, *res.witness) ||
          brute_witness(coords, r, max_abs(*res.witness)) == std::nullopt)
        fail(o, "unverified witness on system " + std::to_string(t));
    } else {
      ++ergodic;
    }
  }
  if (o.pass) o.detail = "50 systems, " + std::to_string(ergodic) + " ergodic";
  check_time(o, clock, 5);
  return o;
}

Outcome criterion5() {
  Outcome o;
  auto a = ex("sqrt2");
  std::string got;
  for (auto [eps, want] : {std::pair<double, Int>{0.4, 3}, {0.1, 5}, {0.05, 12}}) {
    Int n = bohr_min_element(a, eps);
    got += (got.empty() ? "" : ", ") + fmt("%g", eps) + " -> " + std::to_string(n);
    if (n != want) fail(o, "");
  }
  o.detail = (o.pass ? "" : "expected 3, 5, 12; ") + got;
  return o;
}

Outcome criterion6() {
  Outcome o;
  auto gen = essential(cone_band(BandSpec{IntegerKind::Nonzero, {ratio(1, 2)}, {ratio(1, 2)}, {ratio(1, 2)}}));
  auto p = CorrelationVector::parse("1,2=1/2", 2, basis());
  auto sys = skew2();
  auto res = enforce_complete_independence(gen, p, sys);
  if (!complete_independence_check(res.p).independent) fail(o, "output not independent");
  if (res.log.passes.empty()) fail(o, "no pass ran");
  for (const auto& pass : res.log.passes) {
    if (pass.l_size_after >= pass.l_size_before) fail(o, "|L| did not decrease");
  }
  if (res.log.passes.size() == 1) {
    const auto& pass = res.log.passes[0];
    Rational mn = 1;
    for (std::size_t j = 0; j < 2; ++j) {
      std::size_t a = std::min(pass.l - 1, j), c = std::max(pass.l - 1, j);
      if (!p.nonzero(a, c) && a != c) continue;
      Rational v = a == c ? Rational(1) : exact_of(p.at(a, c)).rational_value();
      mn = std::min(mn, Rational(abs(v)));
    }
    Rational want = mn / (Rational(2 * 2) * Rational(max_abs(pass.v)));
    if (!(pass.eps_bound == ExactReal(want)) || pass.eps != want.get_d()) fail(o, "pass eps differs from the formula");
  }
  auto ms = res.set.members(400);
  if (ms.size() < 20) fail(o, "fewer than 20 members");
  for (std::size_t i = 0; i < std::min<std::size_t>(20, ms.size()); ++i) {
    IntVec n = replay(res.log, ms[i]);
    if (!gen.contains(n) || !(res.system.word(ms[i]) == sys.word(n))) fail(o, "word mismatch at " + to_string(ms[i]));
  }
  if (o.pass)
    o.detail = std::to_string(res.log.passes.size()) + " pass(es), eps " + res.log.passes[0].eps_bound.to_string() +
               ", 20 words equal";
  return o;
}

Outcome criterion7() {
  Outcome o;
  Clock clock;
  auto sys = skew2();
  std::vector<std::pair<std::string, LatticeSet>> sets{{"strip", strip_generator()},
                                                       {"floor-slope", floor_slope({ExactReal(1), ex("sqrt2/2")})}};
  auto zero = TorusPoint::exact({ExactReal(0), ExactReal(0)});
  std::string detail;
  for (const auto& [name, set] : sets) {
    PipelineConfig cfg;
    cfg.eps = {0.2, 0.1};
    cfg.system_id = "skew2";
    auto res = theorem_a_experiment(sys, set, cfg);
    for (const auto& lv : res.levels) {
      auto rep = return_time_search(sys, set, zero, lv.eps, 1000000);
      if (!rep.found || !(rep.distance < lv.eps)) fail(o, name + ": no return below " + fmt("%g", lv.eps));
      if (!lv.factor || !lv.factor->found || !lv.lift) fail(o, name + ": factor level missing at " + fmt("%g", lv.eps));
      if (!(lv.lifted_distance < 3 * lv.eps)) fail(o, name + ": lifted distance " + fmt("%.4f", lv.lifted_distance));
      if (rep.found)
        detail += (detail.empty() ? "" : "; ") + name + " " + fmt("%g", lv.eps) + ": n " + to_string(*rep.found) +
                  " lifted " + fmt("%.4f", lv.lifted_distance);
    }
  }
  if (o.pass) o.detail = detail;
  check_time(o, clock, 120);
  return o;
}

Outcome criterion8() {
  Outcome o;
  auto p = CorrelationVector::parse("1,2=sqrt2/2", 2, basis());
  Int n = density_horizon(p, 0.1, 1);
  double x = std::sqrt(2.0) / 2;
  double g7 = oracle::circle_gap(oracle::sqrt_of(2) / 2, 7), g8 = oracle::circle_gap(oracle::sqrt_of(2) / 2, 8);
  if (n != 8) fail(o, "N = " + std::to_string(n));
  if (row_dense({x}, 7, 0.1) || !row_dense({x}, 8, 0.1)) fail(o, "density audit disagrees at 7/8");
  if (!(g7 > 0.1) || !(g8 <= 0.1)) fail(o, "oracle gaps " + fmt("%.4f", g7) + ", " + fmt("%.4f", g8));
  if (o.pass) o.detail = "N = 8, gap " + fmt("%.4f", g7) + " at 7, " + fmt("%.4f", g8) + " at 8";
  return o;
}

Outcome criterion9() {
  Outcome o;
  std::string samples = NILREC_SAMPLES;
  auto root = fs::temp_directory_path() / "nilrec-acceptance-replay";
  fs::remove_all(root);
  std::vector<std::pair<std::string, std::vector<std::string>>> cmds{
      {"simulate", {"--config", samples + "/simulate.conf"}},
      {"bohr-min", {"--alpha", "sqrt2", "--eps", "0.2,0.1,0.05"}},
      {"correlate", {"--config", samples + "/correlate.conf"}},
      {"enforce", {"--config", samples + "/enforce.conf"}},
      {"approx", {"--config", samples + "/approx.conf"}},
      {"recur", {"--config", samples + "/recur.conf"}},
      {"pipeline", {"--config", samples + "/pipeline_strip.conf"}}};
  for (const auto& [cmd, extra] : cmds) {
    std::string text[2];
    for (int run = 0; run < 2; ++run) {
      auto dir = root / (cmd + "-" + std::to_string(run));
      std::vector<std::string> args{cmd};
      args.insert(args.end(), extra.begin(), extra.end());
      args.push_back("--out");
      args.push_back(dir.string());
      std::ostringstream out, err;
      int code = cli::run(args, out, err);
      if (code != 0) fail(o, cmd + " exited " + std::to_string(code) + ": " + err.str());
      if (fs::exists(dir / (cmd + ".csv"))) text[run] = read_text_file((dir / (cmd + ".csv")).string());
    }
    if (text[0].empty() || text[0] != text[1]) fail(o, cmd + ": CSV differs between runs");
  }
  fs::remove_all(root);
  if (o.pass) o.detail = "7 subcommands, identical CSV";
  return o;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"approximation bounds", criterion1},     {"consistency defect", criterion2},
      {"exact powers and commutators", criterion3}, {"ergodicity criterion", criterion4},
      {"bohr minimal elements", criterion5},    {"independence enforcement", criterion6},
      {"recurrence and factor lift", criterion7}, {"density horizon", criterion8},
      {"replay determinism", criterion9}};
  return all;
}

bool run_one(std::size_t i) {
  const auto& [name, fn] = criteria()[i];
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << name
            << (o.detail.empty() ? "" : " (" + o.detail + ")") << std::endl;
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.size() == 2 && args[0] == "--criterion") {
    std::size_t n = std::stoul(args[1]);
    if (n < 1 || n > criteria().size()) {
      std::cerr << "no criterion " << n << "\n";
      return 2;
    }
    return run_one(n - 1) ? 0 : 1;
  }
  if (args.size() == 1 && args[0] == "--report") {
    std::size_t passed = 0;
    for (std::size_t i = 0; i < criteria().size(); ++i) passed += run_one(i) ? 1 : 0;
    std::cout << passed << "/" << criteria().size() << " criteria pass" << std::endl;
    return 0;
  }
  std::cerr << "usage: nilrec_acceptance --criterion N | --report\n";
  return 2;
}
