#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nilrec/affine.hpp"
#include "nilrec/lattice_sets.hpp"

namespace nilrec {

// Line-oriented text shared by the system and set files:
//   basis sqrt2 pi          standard labels
//   constant c 0.1234...    custom basis element (>= 50 digits)
//   independence not_assumed
// '#' starts a comment.
struct BasisDecl {
  std::vector<IrrationalBasis::Entry> entries;  // without the leading 1
  bool independence_assumed = true;

  BasisPtr build() const;
  std::string to_text() const;
};
BasisDecl basis_decl_of(const BasisPtr& basis);

struct SystemFile {
  BasisPtr basis;
  AffineSystem system;
};

// nilrec-system 1
// basis sqrt2
// torus 2
// mode float            (optional; translations read as doubles)
// map
//   matrix 1,0;2,1
//   translation sqrt2,sqrt2
// end
SystemFile parse_system_file(const std::string& text, const std::string& source);
SystemFile read_system_file(const std::string& path);
std::string write_system_file(const AffineSystem& system, const BasisPtr& basis);

struct SetFile {
  BasisPtr basis;
  Provenance tree;
  LatticeSet set;
};

// nilrec-set 1, basis lines, then one s-expression (may span lines).
SetFile parse_set_file(const std::string& text, const std::string& source);
SetFile read_set_file(const std::string& path);
std::string write_set_file(const LatticeSet& set, const BasisPtr& basis);

// Rebuilds a set from its provenance tree. ParseError carries the node's line.
LatticeSet build_set(const Provenance& tree, const BasisPtr& basis, const std::string& source = "<set>");

// `key = value` lines; '#' comments; list values are comma separated.
struct ExperimentConfig {
  std::string source;
  std::string system_path;
  std::string set_path;
  std::string system_id;
  std::vector<double> eps;
  std::optional<Int> horizon;
  std::optional<int> grid_m;
  std::optional<unsigned> threads;
  std::string out_dir;
  std::uint64_t seed = 1;
  // Every key as written, with its line number.
  std::map<std::string, std::pair<std::string, int>> entries;

  bool has(const std::string& key) const { return entries.count(key) > 0; }
  // ParseError at the key's line when the value does not parse.
  Int get_int(const std::string& key, Int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  int line_of(const std::string& key) const;
  // Sorted `key = value` lines as written; the hash input.
  std::string canonical() const;
};

ExperimentConfig parse_config(const std::string& text, const std::string& source);
// Relative system, set and out paths are resolved against the file's directory.
ExperimentConfig read_config(const std::string& path);
// Keys of `over` replace those of `base`; the result is revalidated.
ExperimentConfig merge_config(ExperimentConfig base, const ExperimentConfig& over);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);
std::string hex64(std::uint64_t x);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// 17 significant digits.
std::string csv_double(double x);
std::string csv_field(const std::string& s);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);
  CsvTable& row(std::vector<std::string> fields);
  std::size_t size() const { return rows_.size(); }
  std::string to_text() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// `key: value` lines, in insertion order.
class Summary {
 public:
  explicit Summary(std::string title);
  Summary& add(const std::string& key, const std::string& value);
  std::string to_text() const;

 private:
  std::string title_;
  std::vector<std::pair<std::string, std::string>> items_;
};

}  // namespace nilrec
