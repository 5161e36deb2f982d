#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <random>
#include <regex>
#include <set>

#include "nilrec/correlations.hpp"
#include "nilrec/error.hpp"
#include "nilrec/formats.hpp"
#include "nilrec/recurrence.hpp"
#include "nilrec/simultaneous_approx.hpp"

namespace nilrec::cli {

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::vector<std::string> eps;
  bool eps_given = false;
  std::optional<Int> horizon;
  std::optional<int> grid_m;
  std::optional<unsigned> threads;
  std::string alpha;
};

using Clock = std::chrono::steady_clock;

std::string join_ints(const IntVec& v, const std::string& sep = " ") {
  std::string o;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) o += sep;
    o += std::to_string(v[i]);
  }
  return o;
}

std::string big_field(const BigFloat& x) { return csv_double(x.convert_to<double>()); }

class Context {
 public:
  Context(std::string command, ExperimentConfig cfg, std::ostream& out)
      : command_(std::move(command)), cfg_(std::move(cfg)), out_(out), summary_("nilrec " + command_) {
    start_ = Clock::now();
    dir_ = cfg_.out_dir;
    if (dir_.empty())
      if (const char* env = std::getenv("NILREC_OUT")) dir_ = env;
    if (dir_.empty()) dir_ = "nilrec-out";
    summary_.add("command", command_);
    summary_.add("config", cfg_.source);
    summary_.add("config-hash", hex64(fnv1a(cfg_.canonical())));
  }

  const ExperimentConfig& cfg() const { return cfg_; }
  std::ostream& out() { return out_; }
  Summary& summary() { return summary_; }

  [[noreturn]] void missing(const std::string& key) const {
    throw ParseError(cfg_.source, 0, command_ + " needs '" + key + "' in the config");
  }

  const SystemFile& system() {
    if (!system_) {
      if (cfg_.system_path.empty()) missing("system");
      auto text = read_text_file(cfg_.system_path);
      system_ = parse_system_file(text, cfg_.system_path);
      summary_.add("system", cfg_.system_path);
      summary_.add("system-hash", hex64(fnv1a(text)));
      if (!cfg_.system_id.empty()) summary_.add("system-id", cfg_.system_id);
    }
    return *system_;
  }

  const SetFile& set() {
    if (!set_) {
      if (cfg_.set_path.empty()) missing("set");
      set_ = read_set_file(cfg_.set_path);
      summary_.add("set", cfg_.set_path);
      summary_.add("set-provenance", set_->set.provenance().to_sexpr());
    }
    return *set_;
  }

  const std::vector<double>& eps() const {
    if (cfg_.eps.empty()) missing("eps");
    return cfg_.eps;
  }

  std::string path(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }

  void write(const std::string& name, const std::string& text) {
    write_text_file(path(name), text);
    written_.push_back(name);
  }

  void finish(const CsvTable& csv) {
    write(command_ + ".csv", csv.to_text());
    double wall = std::chrono::duration<double>(Clock::now() - start_).count();
    summary_.add("rows", std::to_string(csv.size()));
    std::string files;
    for (const auto& w : written_) files += (files.empty() ? "" : " ") + w;
    summary_.add("files", files);
    summary_.add("wall-seconds", csv_double(wall));
    write_text_file(path(command_ + ".summary.txt"), summary_.to_text());
  }

 private:
  std::string command_;
  ExperimentConfig cfg_;
  std::ostream& out_;
  Summary summary_;
  std::string dir_;
  Clock::time_point start_;
  std::optional<SystemFile> system_;
  std::optional<SetFile> set_;
  std::vector<std::string> written_;
};

TorusPoint start_point(Context& ctx, const SystemFile& sf) {
  std::size_t r = sf.system.torus_dim();
  if (!ctx.cfg().has("point")) return TorusPoint::zero(r, sf.system.is_exact());
  auto text = ctx.cfg().get_string("point", "");
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (parts.size() != r)
    throw ParseError(ctx.cfg().source, ctx.cfg().line_of("point"), "point needs " + std::to_string(r) + " coordinates");
  try {
    if (sf.system.is_exact()) {
      std::vector<ExactReal> xs;
      for (const auto& p : parts) xs.push_back(ExactReal::parse(p, sf.basis));
      return TorusPoint::exact(xs);
    }
    std::vector<double> xs;
    for (const auto& p : parts) xs.push_back(std::stod(p));
    return TorusPoint::floating(xs);
  } catch (const std::exception& e) {
    throw ParseError(ctx.cfg().source, ctx.cfg().line_of("point"), std::string("point: ") + e.what());
  }
}

IntVec int_list(Context& ctx, const std::string& key, IntVec fallback) {
  if (!ctx.cfg().has(key)) return fallback;
  try {
    return parse_int_vector(ctx.cfg().get_string(key, ""));
  } catch (const Error& e) {
    throw ParseError(ctx.cfg().source, ctx.cfg().line_of(key), key + ": " + e.what());
  }
}

Int positive(Context& ctx, const std::string& key, Int fallback) {
  Int v = ctx.cfg().get_int(key, fallback);
  if (v < 1) throw ParseError(ctx.cfg().source, ctx.cfg().line_of(key), key + ": must be positive");
  return v;
}

CorrelationVector correlations_for(Context& ctx, const LatticeSet& set, const BasisPtr& basis, std::string* source) {
  const auto& cfg = ctx.cfg();
  if (cfg.has("p")) {
    *source = "config";
    try {
      return CorrelationVector::parse(cfg.get_string("p", ""), set.dim(), basis);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(cfg.source, cfg.line_of("p"), std::string("p: ") + e.what());
    }
  }
  if (auto ex = exact_correlations(set)) {
    *source = "direction";
    return *ex;
  }
  *source = "estimate";
  int m = cfg.grid_m.value_or(20);
  auto est = estimate_correlations(set, cfg.horizon.value_or(400), m, 1, cfg.threads.value_or(1)).front();
  CorrelationVector p(set.dim());
  for (std::size_t i = 0; i < p.dim(); ++i)
    for (std::size_t j = i + 1; j < p.dim(); ++j) {
      auto q = snap_rational(est.candidate.value(i, j), 2.0 / m);
      if (!q) throw PreconditionError("estimated correlation does not snap to a small rational; give 'p' in the config");
      p.set(i, j, ExactReal(*q));
    }
  return p;
}

int cmd_simulate(Context& ctx) {
  const auto& sf = ctx.system();
  const auto& sys = sf.system;
  auto x0 = start_point(ctx, sf);
  IntVec e1(sys.group_dim(), 0);
  e1[0] = 1;
  IntVec word = int_list(ctx, "word", e1);
  if (word.size() != sys.group_dim())
    throw ParseError(ctx.cfg().source, ctx.cfg().line_of("word"), "word needs one exponent per map");
  Int steps = ctx.cfg().horizon ? *ctx.cfg().horizon : positive(ctx, "steps", 20);
  std::vector<std::string> cols{"k", "n"};
  for (std::size_t i = 0; i < sys.torus_dim(); ++i) cols.push_back("x" + std::to_string(i + 1));
  cols.push_back("exact");
  cols.push_back("return_distance");
  CsvTable csv(cols);
  for (Int k = 0; k <= steps; ++k) {
    IntVec n(word.size());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = checked_mul(word[i], k);
    auto x = sys.power_apply(n, x0);
    std::vector<std::string> row{std::to_string(k), join_ints(n)};
    for (double c : x.to_doubles()) row.push_back(csv_double(c));
    row.push_back(x.is_exact() ? x.to_string() : "");
    row.push_back(csv_double(torus_norm(x - x0)));
    csv.row(row);
  }
  ctx.summary().add("start", x0.to_string()).add("word", join_ints(word, ",")).add("steps", std::to_string(steps));
  ctx.finish(csv);
  return kOk;
}

int cmd_bohr_min(Context& ctx, const std::string& alpha_flag) {
  std::string alpha = alpha_flag.empty() ? ctx.cfg().get_string("alpha", "") : alpha_flag;
  if (alpha.empty()) ctx.missing("alpha");
  std::vector<std::string> labels;
  static const std::regex ident("[A-Za-z][A-Za-z0-9]*");
  for (auto it = std::sregex_iterator(alpha.begin(), alpha.end(), ident); it != std::sregex_iterator(); ++it) {
    auto l = it->str();
    if (!IrrationalBasis::is_standard_label(l)) throw ParseError("alpha", 1, "unknown label '" + l + "'");
    if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
  }
  auto basis = IrrationalBasis::standard(labels);
  ExactReal a;
  try {
    a = ExactReal::parse(alpha, basis);
  } catch (const Error& e) {
    throw ParseError("alpha", 1, e.what());
  }
  Int cap = positive(ctx, "cap", 1000000000);
  CsvTable csv({"alpha", "eps", "n", "distance"});
  for (double eps : ctx.eps()) {
    Int n = bohr_min_element(a, eps, cap);
    ctx.out() << n << "\n";
    csv.row({a.to_string(), csv_double(eps), std::to_string(n), csv_double(torus_norm(a.scaled(n)).convert_to<double>())});
  }
  std::string bl;
  for (const auto& l : labels) bl += (bl.empty() ? "" : " ") + l;
  ctx.summary().add("alpha", a.to_string()).add("basis", bl.empty() ? "rational" : bl);
  ctx.finish(csv);
  return kOk;
}

int cmd_correlate(Context& ctx) {
  const auto& set = ctx.set().set;
  Int h = ctx.cfg().horizon.value_or(10000);
  int m = ctx.cfg().grid_m.value_or(200);
  auto top = static_cast<std::size_t>(positive(ctx, "top_k", 1));
  auto ests = estimate_correlations(set, h, m, top, ctx.cfg().threads.value_or(1));
  CsvTable csv({"rank", "i", "j", "P_ij", "count", "cell_size"});
  for (std::size_t k = 0; k < ests.size(); ++k) {
    const auto& e = ests[k];
    for (std::size_t i = 0; i < set.dim(); ++i)
      for (std::size_t j = i + 1; j < set.dim(); ++j)
        csv.row({std::to_string(k + 1), std::to_string(i + 1), std::to_string(j + 1),
                 csv_double(e.candidate.value(i, j)), std::to_string(e.count), csv_double(e.cell_size)});
  }
  if (!ests.empty()) {
    ctx.summary().add("members", std::to_string(ests[0].total));
    ctx.summary().add("consistency-defect", csv_double(consistency_defect(ests[0].candidate)));
  }
  ctx.summary().add("horizon", std::to_string(h)).add("grid-m", std::to_string(m));
  ctx.finish(csv);
  return kOk;
}

int cmd_enforce(Context& ctx) {
  const auto& sf = ctx.system();
  const auto& setf = ctx.set();
  std::string src;
  auto p = correlations_for(ctx, setf.set, setf.basis, &src);
  EnforcementOptions opts;
  opts.horizon = positive(ctx, "enforce_horizon", ctx.cfg().horizon.value_or(opts.horizon));
  opts.grid_m = static_cast<int>(positive(ctx, "enforce_grid_m", opts.grid_m));
  auto res = enforce_complete_independence(setf.set, p, sf.system, opts);
  CsvTable csv({"pass", "l", "v", "matrix", "eps_bound", "eps", "perm", "L_before", "L_after", "members_after"});
  for (const auto& ps : res.log.passes)
    csv.row({std::to_string(ps.n), std::to_string(ps.l), format_int_vector(ps.v), format_int_matrix(ps.m),
             ps.eps_bound.to_string(), csv_double(ps.eps), format_perm(ps.perm), std::to_string(ps.l_size_before),
             std::to_string(ps.l_size_after), std::to_string(ps.members_after)});
  ctx.write("transform_log.txt", res.log.to_text());
  ctx.write("enforced_set.txt", write_set_file(res.set, setf.basis));
  ctx.write("enforced_system.txt", write_system_file(res.system, sf.basis));
  auto check = complete_independence_check(res.p);
  ctx.summary()
      .add("p-source", src)
      .add("p-input", p.to_string())
      .add("p-final", res.p.to_string())
      .add("independent", check.independent ? "yes" : "no")
      .add("total", format_int_matrix(res.log.total));
  ctx.finish(csv);
  return kOk;
}

// 53 random bits mapped to [0, 1).
double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int cmd_approx(Context& ctx) {
  const auto& setf = ctx.set();
  std::string src;
  auto p = correlations_for(ctx, setf.set, setf.basis, &src);
  auto r = static_cast<std::size_t>(positive(ctx, "r", 1));
  auto members = static_cast<std::size_t>(positive(ctx, "members", 20));
  auto targets = positive(ctx, "targets", 50);
  Int horizon = ctx.cfg().horizon.value_or(100000000);
  std::mt19937_64 rng(ctx.cfg().seed);
  CsvTable csv({"eps", "member", "target", "n", "N", "M", "C", "y_norm", "error", "telescoped", "parts_match",
                "telescope_ok"});
  std::size_t level = 0;
  std::size_t failures = 0;
  for (double eps : ctx.eps()) {
    auto R = build_R_eps(setf.set, p, eps, r);
    auto sample = sample_R_eps(R, horizon, members);
    std::string certs;
    for (std::size_t mi = 0; mi < sample.size(); ++mi)
      for (Int t = 0; t < targets; ++t) {
        std::vector<TorusPoint> w;
        for (std::size_t i = 0; i < p.dim(); ++i) {
          std::vector<double> xs(r);
          for (auto& x : xs) x = unit_double(rng);
          w.push_back(TorusPoint::floating(xs));
        }
        auto cert = approximate_targets_rescaled(p, sample[mi], w, eps, R.N);
        auto text = cert.to_text();
        certs += text;
        auto v = verify_certificate(ApproximationCertificate::parse(text));
        bool ok = v.parts_match && v.telescope_ok && v.y_norm < eps && v.error < eps;
        if (!ok) ++failures;
        csv.row({csv_double(eps), std::to_string(mi + 1), std::to_string(t + 1), join_ints(sample[mi]),
                 std::to_string(cert.N), std::to_string(cert.M), std::to_string(cert.C), big_field(v.y_norm),
                 big_field(v.error), big_field(v.telescoped), v.parts_match ? "1" : "0", v.telescope_ok ? "1" : "0"});
      }
    ++level;
    ctx.write("certificates_" + std::to_string(level) + ".txt", certs);
    ctx.summary().add("r-eps-" + std::to_string(level), R.set.provenance().to_sexpr());
  }
  ctx.summary().add("p-source", src).add("p", p.to_string()).add("seed", std::to_string(ctx.cfg().seed));
  ctx.summary().add("failed-certificates", std::to_string(failures));
  ctx.finish(csv);
  if (failures) throw InternalBoundBreach(std::to_string(failures) + " certificates failed verification");
  return kOk;
}

void report_row(CsvTable& csv, const RecurrenceReport& r) {
  csv.row({csv_double(r.eps), r.level, r.found ? "1" : "0", r.found ? join_ints(*r.found) : "",
           r.found ? csv_double(r.distance) : "", r.best ? join_ints(*r.best) : "",
           r.best ? csv_double(r.best_distance) : "", std::to_string(r.horizon), std::to_string(r.scanned)});
}

int cmd_recur(Context& ctx) {
  const auto& sf = ctx.system();
  const auto& setf = ctx.set();
  auto x0 = start_point(ctx, sf);
  Int h = ctx.cfg().horizon.value_or(1000000);
  CsvTable csv({"eps", "level", "found", "n", "distance", "best", "best_distance", "horizon", "scanned"});
  for (double eps : ctx.eps()) {
    auto r = return_time_search(sf.system, setf.set, x0, eps, h, ctx.cfg().threads.value_or(1), ctx.cfg().system_id);
    report_row(csv, r);
    ctx.out() << "eps " << eps << ": " << (r.found ? join_ints(*r.found) : "none") << "\n";
  }
  ctx.summary().add("start", x0.to_string());
  ctx.finish(csv);
  return kOk;
}

int cmd_pipeline(Context& ctx) {
  const auto& sf = ctx.system();
  const auto& setf = ctx.set();
  const auto& cfg = ctx.cfg();
  PipelineConfig pc;
  pc.system_id = cfg.system_id;
  pc.eps = ctx.eps();
  pc.horizon = cfg.horizon.value_or(pc.horizon);
  pc.grid_m = cfg.grid_m.value_or(pc.grid_m);
  pc.threads = cfg.threads.value_or(pc.threads);
  pc.scan_horizon = positive(ctx, "scan_horizon", pc.scan_horizon);
  pc.r_eps_horizon = positive(ctx, "r_eps_horizon", pc.r_eps_horizon);
  pc.ergodicity_bound = positive(ctx, "ergodicity_bound", pc.ergodicity_bound);
  pc.enforcement.horizon = positive(ctx, "enforce_horizon", pc.enforcement.horizon);
  pc.enforcement.grid_m = static_cast<int>(positive(ctx, "enforce_grid_m", pc.enforcement.grid_m));
  auto res = theorem_a_experiment(sf.system, setf.set, pc);
  CsvTable csv({"eps", "level", "searched", "n", "original_n", "distance", "radius", "N", "M"});
  for (const auto& lv : res.levels) {
    std::string N = lv.r_eps ? std::to_string(lv.r_eps->N) : "";
    std::string M = lv.r_eps ? std::to_string(lv.r_eps->M) : "";
    auto orig = [&](const std::optional<IntVec>& n) { return n ? join_ints(res.to_original * *n) : std::string(); };
    csv.row({csv_double(lv.eps), "full", lv.searched, lv.full.found ? join_ints(*lv.full.found) : "",
             orig(lv.full.found), lv.full.found ? csv_double(lv.full.distance) : "", csv_double(lv.eps), N, M});
    if (lv.factor)
      csv.row({csv_double(lv.eps), "factor", lv.searched, lv.factor->found ? join_ints(*lv.factor->found) : "",
               orig(lv.factor->found), lv.factor->found ? csv_double(lv.factor->distance) : "",
               csv_double(lv.factor_radius), N, M});
    if (lv.lift)
      csv.row({csv_double(lv.eps), "lifted", lv.searched, lv.factor->found ? join_ints(*lv.factor->found) : "",
               orig(lv.factor->found), csv_double(lv.lifted_distance), csv_double(3 * lv.eps), N, M});
    ctx.out() << "eps " << lv.eps << ": full "
              << (lv.full.found ? join_ints(*lv.full.found) + " at " + std::to_string(lv.full.distance) : "none");
    if (lv.lift) ctx.out() << ", lifted " << lv.lifted_distance;
    ctx.out() << "\n";
  }
  std::string rel;
  for (const auto& v : res.redundancy_relations) rel += (rel.empty() ? "" : " ") + format_int_vector(v);
  ctx.summary()
      .add("ergodic", res.ergodicity.ergodic ? "yes" : "no")
      .add("perm", format_perm(res.perm))
      .add("redundancy-relations", rel.empty() ? "none" : rel)
      .add("p-source", res.p_source)
      .add("p", res.p.to_string())
      .add("enforcement-passes", std::to_string(res.log.passes.size()))
      .add("to-original", format_int_matrix(res.to_original))
      .add("final-set", res.set.provenance().to_sexpr());
  for (const auto& lv : res.levels) {
    if (lv.lift) ctx.summary().add("lift-" + csv_double(lv.eps), lv.lift->method + " h=" + lv.lift->h.to_string());
    if (lv.r_eps) ctx.summary().add("r-eps-" + csv_double(lv.eps), lv.r_eps->set.provenance().to_sexpr());
  }
  ctx.write("transform_log.txt", res.log.to_text());
  ctx.finish(csv);
  return kOk;
}

ExperimentConfig effective_config(const Flags& f) {
  ExperimentConfig base = f.config.empty() ? parse_config("", "command line") : read_config(f.config);
  std::string text;
  if (!f.out.empty()) text += "out = " + f.out + "\n";
  if (f.eps_given) {
    std::string e;
    for (const auto& x : f.eps) e += (e.empty() ? "" : ",") + x;
    text += "eps = " + e + "\n";
  }
  if (f.horizon) text += "horizon = " + std::to_string(*f.horizon) + "\n";
  if (f.grid_m) text += "grid_m = " + std::to_string(*f.grid_m) + "\n";
  if (f.threads) text += "threads = " + std::to_string(*f.threads) + "\n";
  if (text.empty()) return base;
  return merge_config(base, parse_config(text, "command line"));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact simulation and recurrence experiments for unipotent affine torus systems", "nilrec"};
  app.require_subcommand(1);
  Flags f;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "orbit table of one word direction"},
      {"bohr-min", "smallest n >= 1 with ||n alpha|| < eps"},
      {"correlate", "correlation estimates and consistency defect"},
      {"enforce", "complete-independence transform log"},
      {"approx", "simultaneous approximation certificates"},
      {"recur", "return-time search"},
      {"pipeline", "full recurrence experiment with factor lift"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", f.config, "config file (key = value)");
    sub->add_option("--out", f.out, "output directory (default $NILREC_OUT, then ./nilrec-out)");
    sub->add_option("--eps", f.eps, "eps values")->delimiter(',')->allow_extra_args(false);
    sub->add_option("--horizon", f.horizon, "search or scan horizon");
    sub->add_option("--grid-m", f.grid_m, "grid resolution");
    sub->add_option("--threads", f.threads, "worker threads");
    if (name == "bohr-min") sub->add_option("--alpha", f.alpha, "frequency, e.g. sqrt2");
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  std::string command;
  for (const auto* s : app.get_subcommands()) command = s->get_name();
  f.eps_given = app.get_subcommand(command)->count("--eps") > 0;

  try {
    Context ctx(command, effective_config(f), out);
    if (command == "simulate") return cmd_simulate(ctx);
    if (command == "bohr-min") return cmd_bohr_min(ctx, f.alpha);
    if (command == "correlate") return cmd_correlate(ctx);
    if (command == "enforce") return cmd_enforce(ctx);
    if (command == "approx") return cmd_approx(ctx);
    if (command == "recur") return cmd_recur(ctx);
    return cmd_pipeline(ctx);
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InternalBoundBreach& e) {
    err << "internal bound breach: " << e.what() << "\n";
    return kBoundBreach;
  } catch (const NonMinimalSystem& e) {
    err << "error: " << e.what() << " (witness " << join_ints(IntVec(e.witness().begin(), e.witness().end()), ",")
        << ")\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace nilrec::cli
