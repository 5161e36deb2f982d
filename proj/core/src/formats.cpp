#include "nilrec/formats.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nilrec/correlations.hpp"
#include "nilrec/error.hpp"
#include "nilrec/simultaneous_approx.hpp"

namespace nilrec {

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& s) {
  auto h = s.find('#');
  return h == std::string::npos ? s : s.substr(0, h);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

struct Line {
  int no = 0;
  std::string head;
  std::string rest;
};

std::vector<Line> content_lines(const std::string& text) {
  std::vector<Line> out;
  std::istringstream is(text);
  std::string raw;
  int no = 0;
  while (std::getline(is, raw)) {
    ++no;
    auto s = trim(strip_comment(raw));
    if (s.empty()) continue;
    auto sp = s.find_first_of(" \t");
    Line l;
    l.no = no;
    l.head = s.substr(0, sp);
    l.rest = sp == std::string::npos ? "" : trim(s.substr(sp));
    out.push_back(l);
  }
  return out;
}

std::string no_spaces(const std::string& s) {
  std::string o;
  for (char c : s)
    if (c != ' ' && c != '\t') o += c;
  return o;
}

Int parse_int_strict(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw PreconditionError("not an integer: '" + s + "'");
  return static_cast<Int>(v);
}

double parse_double_strict(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw PreconditionError("not a number: '" + s + "'");
  return v;
}

void check_header(const std::vector<Line>& lines, const std::string& magic, const std::string& source) {
  if (lines.empty() || lines[0].head != magic || lines[0].rest != "1")
    throw ParseError(source, lines.empty() ? 1 : lines[0].no, "expected '" + magic + " 1'");
}

// Consumes basis, constant and independence lines.
bool basis_line(const Line& l, BasisDecl& decl, const std::string& source) {
  if (l.head == "basis") {
    std::istringstream is(l.rest);
    std::string label;
    while (is >> label) {
      if (!IrrationalBasis::is_standard_label(label))
        throw ParseError(source, l.no, "unknown standard label '" + label + "'; declare it with 'constant'");
      decl.entries.push_back({label, IrrationalBasis::standard_decimal(label)});
    }
    return true;
  }
  if (l.head == "constant") {
    std::istringstream is(l.rest);
    std::string label, decimal, extra;
    if (!(is >> label >> decimal) || (is >> extra))
      throw ParseError(source, l.no, "expected 'constant <label> <decimal>'");
    decl.entries.push_back({label, decimal});
    return true;
  }
  if (l.head == "independence") {
    if (l.rest == "assumed")
      decl.independence_assumed = true;
    else if (l.rest == "not_assumed")
      decl.independence_assumed = false;
    else
      throw ParseError(source, l.no, "independence must be 'assumed' or 'not_assumed'");
    return true;
  }
  return false;
}

BasisPtr build_basis(const BasisDecl& decl, const std::string& source, int line) {
  try {
    return decl.build();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, line, e.what());
  }
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string o;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) o += sep;
    o += v[i];
  }
  return o;
}

}  // namespace

BasisPtr BasisDecl::build() const {
  std::vector<IrrationalBasis::Entry> all{{"1", "1"}};
  all.insert(all.end(), entries.begin(), entries.end());
  return std::make_shared<const IrrationalBasis>(std::move(all), independence_assumed);
}

std::string BasisDecl::to_text() const {
  std::string out;
  std::vector<std::string> standard;
  std::size_t i = 0;
  for (; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!IrrationalBasis::is_standard_label(e.label) || IrrationalBasis::standard_decimal(e.label) != e.decimal)
      break;
    standard.push_back(e.label);
  }
  if (!standard.empty()) out += "basis " + join(standard, " ") + "\n";
  for (; i < entries.size(); ++i) out += "constant " + entries[i].label + " " + entries[i].decimal + "\n";
  if (!independence_assumed) out += "independence not_assumed\n";
  return out;
}

BasisDecl basis_decl_of(const BasisPtr& basis) {
  BasisDecl d;
  if (!basis) return d;
  for (std::size_t i = 1; i < basis->size(); ++i) d.entries.push_back(basis->entries()[i]);
  d.independence_assumed = basis->independence_assumed();
  return d;
}

SystemFile parse_system_file(const std::string& text, const std::string& source) {
  auto lines = content_lines(text);
  check_header(lines, "nilrec-system", source);
  BasisDecl decl;
  std::optional<std::size_t> r;
  bool floating = false;
  struct MapText {
    int line = 0;
    std::optional<Line> matrix, translation;
  };
  std::vector<MapText> maps;
  bool in_map = false;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& l = lines[k];
    if (in_map) {
      if (l.head == "matrix") {
        maps.back().matrix = l;
      } else if (l.head == "translation") {
        maps.back().translation = l;
      } else if (l.head == "end") {
        if (!maps.back().matrix || !maps.back().translation)
          throw ParseError(source, l.no, "map needs both 'matrix' and 'translation'");
        in_map = false;
      } else {
        throw ParseError(source, l.no, "unexpected '" + l.head + "' inside map");
      }
      continue;
    }
    if (basis_line(l, decl, source)) continue;
    if (l.head == "torus") {
      try {
        Int v = parse_int_strict(l.rest);
        if (v < 1) throw PreconditionError("torus dimension must be positive");
        r = static_cast<std::size_t>(v);
      } catch (const Error& e) {
        throw ParseError(source, l.no, e.what());
      }
    } else if (l.head == "mode") {
      if (l.rest != "float" && l.rest != "exact") throw ParseError(source, l.no, "mode must be 'exact' or 'float'");
      floating = l.rest == "float";
    } else if (l.head == "map") {
      maps.push_back({l.no, std::nullopt, std::nullopt});
      in_map = true;
    } else {
      throw ParseError(source, l.no, "unknown keyword '" + l.head + "'");
    }
  }
  if (in_map) throw ParseError(source, maps.back().line, "map block is not closed by 'end'");
  if (!r) throw ParseError(source, lines[0].no, "missing 'torus <r>'");
  if (maps.empty()) throw ParseError(source, lines[0].no, "no maps declared");
  auto basis = build_basis(decl, source, lines[0].no);

  std::vector<AffineMap> built;
  for (const auto& m : maps) {
    IntMatrix a;
    try {
      a = parse_int_matrix(no_spaces(m.matrix->rest));
    } catch (const Error& e) {
      throw ParseError(source, m.matrix->no, e.what());
    }
    if (a.rows() != *r || a.cols() != *r)
      throw ParseError(source, m.matrix->no, "matrix must be " + std::to_string(*r) + "x" + std::to_string(*r));
    auto parts = split_list(m.translation->rest, ',');
    if (parts.size() != *r)
      throw ParseError(source, m.translation->no, "translation needs " + std::to_string(*r) + " entries");
    TorusPoint alpha;
    try {
      if (floating) {
        std::vector<double> xs;
        for (const auto& p : parts) xs.push_back(parse_double_strict(p));
        alpha = TorusPoint::floating(xs);
      } else {
        std::vector<ExactReal> xs;
        for (const auto& p : parts) xs.push_back(ExactReal::parse(p, basis));
        alpha = TorusPoint::exact(xs);
      }
    } catch (const Error& e) {
      throw ParseError(source, m.translation->no, e.what());
    }
    try {
      built.emplace_back(a, alpha);
    } catch (const Error& e) {
      throw ParseError(source, m.line, e.what());
    }
  }
  try {
    return SystemFile{basis, AffineSystem(std::move(built))};
  } catch (const Error& e) {
    throw ParseError(source, maps[0].line, e.what());
  }
}

std::string write_system_file(const AffineSystem& system, const BasisPtr& basis) {
  std::string out = "nilrec-system 1\n";
  out += basis_decl_of(basis).to_text();
  out += "torus " + std::to_string(system.torus_dim()) + "\n";
  if (!system.is_exact()) out += "mode float\n";
  for (const auto& m : system.maps()) {
    out += "map\n  matrix " + format_int_matrix(m.matrix()) + "\n  translation ";
    std::vector<std::string> xs;
    if (m.is_exact())
      for (const auto& x : m.translation().exact_coords()) xs.push_back(x.to_string());
    else
      for (double x : m.translation().float_coords()) xs.push_back(format_double(x));
    out += join(xs, ",") + "\nend\n";
  }
  return out;
}

SystemFile read_system_file(const std::string& path) { return parse_system_file(read_text_file(path), path); }

namespace {

class SetBuilder {
 public:
  SetBuilder(BasisPtr basis, std::string source) : basis_(std::move(basis)), source_(std::move(source)) {}

  LatticeSet build(const Provenance& t) const {
    try {
      return node(t);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source_, t.line, e.what());
    }
  }

 private:
  LatticeSet child(const Provenance& t) const {
    if (t.children.size() != 1)
      throw PreconditionError("'" + t.name + "' needs exactly one child, got " + std::to_string(t.children.size()));
    return build(t.children[0]);
  }

  void leaf(const Provenance& t) const {
    if (!t.children.empty()) throw PreconditionError("'" + t.name + "' takes no children");
  }

  static std::size_t index(const std::string& s) {
    Int v = parse_int_strict(s);
    if (v < 1) throw PreconditionError("coordinates are 1-based");
    return static_cast<std::size_t>(v - 1);
  }

  static StripBound bound(const std::string& s) {
    auto v = parse_rat_vector(s);
    if (v.size() != 3) throw PreconditionError("strip bound needs slope,coef,exponent");
    return {v[0], v[1], v[2]};
  }

  LatticeSet node(const Provenance& t) const {
    const auto& n = t.name;
    if (n == "integers") {
      leaf(t);
      auto kind = t.has("kind") ? parse_integer_kind(t.get("kind")) : IntegerKind::All;
      return integers(static_cast<std::size_t>(parse_int_strict(t.get("dim"))), kind);
    }
    if (n == "finite") {
      leaf(t);
      std::vector<IntVec> pts;
      for (const auto& p : split_list(t.get("points"), ';')) pts.push_back(parse_int_vector(p));
      return finite_set(static_cast<std::size_t>(parse_int_strict(t.get("dim"))), std::move(pts));
    }
    if (n == "floor_slope") return floor_slope_generator(child(t), parse_exact_vector(t.get("alpha"), basis_));
    if (n == "strip") {
      leaf(t);
      if (t.get("kind") == "parabolic") return strip_generator(parabolic_strip());
      StripSpec s;
      s.kind = t.get("kind");
      s.lower = bound(t.get("lower"));
      s.upper = bound(t.get("upper"));
      s.domain = parse_integer_kind(t.get("domain"));
      const auto& lu = t.get("lengths_unbounded");
      if (lu != "asserted" && lu != "not_asserted")
        throw PreconditionError("lengths_unbounded must be asserted or not_asserted");
      s.lengths_unbounded = lu == "asserted";
      return strip_generator(s);
    }
    if (n == "band") {
      leaf(t);
      BandSpec b;
      b.domain = parse_integer_kind(t.get("domain"));
      b.center = parse_rat_vector(t.get("center"));
      b.width = parse_rat_vector(t.get("width"));
      b.exponent = parse_rat_vector(t.get("exponent"));
      return cone_band(b);
    }
    if (n == "band_remove") return band_remove(child(t), index(t.get("coord")), parse_int_strict(t.get("k")));
    if (n == "essential") return essential(child(t));
    if (n == "order_class")
      return order_class(child(t), parse_perm(t.get("perm")), t.has("selection") ? t.get("selection") : "");
    if (n == "ball_complement") return ball_complement(child(t), parse_int_strict(t.get("m")));
    if (n == "hyperplane") return hyperplane(child(t), parse_int_vector(t.get("normal")));
    if (n == "sublattice") return intersect_sublattice(child(t), parse_int_matrix(t.get("basis")));
    if (n == "bohr") {
      bool fl = t.has("mode") && t.get("mode") == "float";
      std::vector<std::vector<Scalar>> freqs;
      for (const auto& row : split_list(t.get("freqs"), ';')) {
        std::vector<Scalar> f;
        for (const auto& x : split_list(row, ','))
          f.push_back(fl ? Scalar(parse_double_strict(x)) : Scalar(ExactReal::parse(x, basis_)));
        freqs.push_back(std::move(f));
      }
      return bohr_filter(child(t), BohrNeighborhood(std::move(freqs), parse_double_strict(t.get("eps"))));
    }
    if (n == "permute") return permute_coordinates(child(t), parse_perm(t.get("perm")));
    if (n == "pullback") return apply_rational_matrix(child(t), parse_rat_matrix(t.get("matrix")), MatrixDirection::Pullback);
    if (n == "image") return apply_rational_matrix(child(t), parse_rat_matrix(t.get("matrix")), MatrixDirection::Image);
    if (n == "linear_pullback") return linear_pullback(child(t), parse_int_matrix(t.get("matrix")));
    if (n == "correlated") {
      auto c = child(t);
      auto p = CorrelationVector::parse(t.get("p"), c.dim(), basis_);
      if (t.has("mode") && t.get("mode") == "float")
        for (std::size_t i = 0; i < p.dim(); ++i)
          for (std::size_t j = i + 1; j < p.dim(); ++j) p.set(i, j, p.value(i, j));
      return filter_correlated(c, p, parse_double_strict(t.get("eps")));
    }
    if (n == "r_eps") {
      Provenance tag(t.name);
      tag.params = t.params;
      return tagged(child(t), tag);
    }
    throw PreconditionError("unknown set node '" + n + "'");
  }

  BasisPtr basis_;
  std::string source_;
};

}  // namespace

LatticeSet build_set(const Provenance& tree, const BasisPtr& basis, const std::string& source) {
  return SetBuilder(basis, source).build(tree);
}

SetFile parse_set_file(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string raw;
  int no = 0;
  BasisDecl decl;
  bool header = false;
  int tree_line = 0;
  std::string tree_text;
  while (std::getline(is, raw)) {
    ++no;
    auto s = trim(strip_comment(raw));
    if (tree_line) {
      tree_text += s + "\n";
      continue;
    }
    if (s.empty()) continue;
    if (!header) {
      if (s != "nilrec-set 1") throw ParseError(source, no, "expected 'nilrec-set 1'");
      header = true;
      continue;
    }
    if (s[0] == '(') {
      tree_line = no;
      tree_text = s + "\n";
      continue;
    }
    auto ls = content_lines(s);
    Line l = ls[0];
    l.no = no;
    if (!basis_line(l, decl, source)) throw ParseError(source, no, "unknown keyword '" + l.head + "'");
  }
  if (!header) throw ParseError(source, 1, "expected 'nilrec-set 1'");
  if (!tree_line) throw ParseError(source, no, "missing set expression");
  auto basis = build_basis(decl, source, 1);
  auto tree = parse_sexpr(tree_text, source, tree_line);
  auto set = build_set(tree, basis, source);
  return SetFile{basis, tree, set};
}

SetFile read_set_file(const std::string& path) { return parse_set_file(read_text_file(path), path); }

std::string write_set_file(const LatticeSet& set, const BasisPtr& basis) {
  return "nilrec-set 1\n" + basis_decl_of(basis).to_text() + set.provenance().to_sexpr() + "\n";
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "system", "set", "system_id", "eps", "horizon", "grid_m", "threads", "out", "seed",
      // subcommand parameters
      "alpha", "point", "steps", "word", "members", "targets", "r", "scan_horizon", "r_eps_horizon",
      "enforce_horizon", "enforce_grid_m", "top_k", "p", "ergodicity_bound", "cap"};
  return keys;
}

}  // namespace

int ExperimentConfig::line_of(const std::string& key) const {
  auto it = entries.find(key);
  return it == entries.end() ? 0 : it->second.second;
}

Int ExperimentConfig::get_int(const std::string& key, Int fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  try {
    return parse_int_strict(it->second.first);
  } catch (const Error& e) {
    throw ParseError(source, it->second.second, key + ": " + e.what());
  }
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  try {
    return parse_double_strict(it->second.first);
  } catch (const Error& e) {
    throw ParseError(source, it->second.second, key + ": " + e.what());
  }
}

std::string ExperimentConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries.find(key);
  return it == entries.end() ? fallback : it->second.first;
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries) out += k + " = " + v.first + "\n";
  return out;
}

namespace {

void finalize(ExperimentConfig& c) {
  const auto& source = c.source;
  c.eps.clear();
  auto fail = [&](const std::string& key, const std::string& why) -> void {
    throw ParseError(source, c.line_of(key), key + ": " + why);
  };
  c.system_path = c.get_string("system", "");
  c.set_path = c.get_string("set", "");
  c.system_id = c.get_string("system_id", "");
  c.out_dir = c.get_string("out", "");
  if (c.has("eps")) {
    auto items = split_list(c.get_string("eps", ""), ',');
    if (items.empty()) fail("eps", "eps list is empty");
    for (const auto& x : items) {
      double v = 0;
      try {
        v = parse_double_strict(x);
      } catch (const Error& e) {
        fail("eps", e.what());
      }
      if (!(v > 0)) fail("eps", "eps values must be positive");
      c.eps.push_back(v);
    }
  }
  if (c.has("horizon")) {
    c.horizon = c.get_int("horizon", 0);
    if (*c.horizon < 1) fail("horizon", "must be positive");
  }
  if (c.has("grid_m")) {
    Int g = c.get_int("grid_m", 0);
    if (g < 1 || g > 1000000) fail("grid_m", "must be in [1, 1000000]");
    c.grid_m = static_cast<int>(g);
  }
  if (c.has("threads")) {
    Int t = c.get_int("threads", 0);
    if (t < 1 || t > 1024) fail("threads", "must be in [1, 1024]");
    c.threads = static_cast<unsigned>(t);
  }
  if (c.has("seed")) {
    Int sd = c.get_int("seed", 0);
    if (sd < 0) fail("seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(sd);
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig c;
  c.source = source;
  std::istringstream is(text);
  std::string raw;
  int no = 0;
  while (std::getline(is, raw)) {
    ++no;
    auto s = trim(strip_comment(raw));
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(source, no, "expected 'key = value'");
    auto key = trim(s.substr(0, eq));
    auto value = trim(s.substr(eq + 1));
    if (!known_keys().count(key)) throw ParseError(source, no, "unknown key '" + key + "'");
    if (c.entries.count(key)) throw ParseError(source, no, "duplicate key '" + key + "'");
    c.entries[key] = {value, no};
  }
  finalize(c);
  return c;
}

ExperimentConfig merge_config(ExperimentConfig base, const ExperimentConfig& over) {
  for (const auto& [k, v] : over.entries) base.entries[k] = v;
  finalize(base);
  return base;
}

ExperimentConfig read_config(const std::string& path) {
  auto c = parse_config(read_text_file(path), path);
  auto dir = std::filesystem::path(path).parent_path();
  for (const char* key : {"system", "set", "out"}) {
    auto it = c.entries.find(key);
    if (it != c.entries.end() && !it->second.first.empty() && std::filesystem::path(it->second.first).is_relative())
      it->second.first = (dir / it->second.first).lexically_normal().string();
  }
  finalize(c);
  return c;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

std::string csv_double(double x) { return format_double(x); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

CsvTable& CsvTable::row(std::vector<std::string> fields) {
  if (fields.size() != columns_.size())
    throw DimensionMismatch("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(columns_.size()));
  rows_.push_back(std::move(fields));
  return *this;
}

std::string CsvTable::to_text() const {
  auto line = [](const std::vector<std::string>& v) {
    std::string o;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) o += ",";
      o += csv_field(v[i]);
    }
    return o + "\n";
  };
  std::string out = line(columns_);
  for (const auto& r : rows_) out += line(r);
  return out;
}

Summary::Summary(std::string title) : title_(std::move(title)) {}

Summary& Summary::add(const std::string& key, const std::string& value) {
  items_.emplace_back(key, value);
  return *this;
}

std::string Summary::to_text() const {
  std::string out = "# " + title_ + "\n";
  for (const auto& [k, v] : items_) out += k + ": " + v + "\n";
  return out;
}

}  // namespace nilrec
