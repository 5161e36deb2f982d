#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nilrec/exact_real.hpp"
#include "nilrec/int_matrix.hpp"
#include "nilrec/sexpr.hpp"
#include "nilrec/torus.hpp"

namespace nilrec {

// max |n_i|
Int max_norm(const IntVec& n);
// Enumeration order: max-norm, then lexicographic.
bool enumeration_less(const IntVec& a, const IntVec& b);
void sort_enumeration(std::vector<IntVec>& v);
// Points of Z^d with max-norm exactly h, lexicographic.
std::vector<IntVec> integer_shell(std::size_t d, Int h);

class SetNode {
 public:
  using Predicate = std::function<bool(const IntVec&)>;

  virtual ~SetNode() = default;
  virtual std::size_t dim() const = 0;
  virtual bool contains(const IntVec& n) const = 0;
  virtual Provenance provenance() const = 0;
  // Members with max-norm h, lexicographic. Default: scan the Z^d shell.
  virtual std::vector<IntVec> shell(Int h) const;
  // Members with lo <= max-norm <= hi passing `keep` (may be empty), in
  // enumeration order. Default: shells.
  virtual std::vector<IntVec> members_where(Int lo, Int hi, const Predicate& keep) const;
  std::vector<IntVec> members_between(Int lo, Int hi) const { return members_where(lo, hi, {}); }
  // Asymptotic direction: members are n = t * dir + o(t) along the set, when known.
  virtual std::optional<std::vector<ExactReal>> direction() const { return std::nullopt; }
};

class SetStream;

// Enumerable subset of Z^d. Cheap to copy; nodes are immutable and shared.
class LatticeSet {
 public:
  explicit LatticeSet(std::shared_ptr<const SetNode> node);

  std::size_t dim() const { return node_->dim(); }
  bool contains(const IntVec& n) const;
  std::vector<IntVec> shell(Int h) const { return node_->shell(h); }
  // All members in [-H, H]^d in enumeration order.
  std::vector<IntVec> members(Int horizon) const { return node_->members_between(0, horizon); }
  std::vector<IntVec> members_between(Int lo, Int hi) const { return node_->members_between(lo, hi); }
  std::vector<IntVec> members_where(Int lo, Int hi, const SetNode::Predicate& keep) const {
    return node_->members_where(lo, hi, keep);
  }
  SetStream stream(Int horizon) const;
  Provenance provenance() const { return node_->provenance(); }
  std::optional<std::vector<ExactReal>> direction() const { return node_->direction(); }
  const std::shared_ptr<const SetNode>& node() const { return node_; }

 private:
  std::shared_ptr<const SetNode> node_;
};

// Lazy enumeration in growing max-norm blocks.
class SetStream {
 public:
  SetStream(LatticeSet set, Int horizon);
  std::optional<IntVec> next();
  // Next block of members (at least one shell); empty once the horizon is reached.
  std::vector<IntVec> next_block();
  Int scanned_to() const { return done_to_; }

 private:
  LatticeSet set_;
  Int horizon_;
  Int done_to_ = -1;
  std::vector<IntVec> buf_;
  std::size_t pos_ = 0;
};

enum class IntegerKind { All, Nonzero, Positive };
std::string to_string(IntegerKind k);
IntegerKind parse_integer_kind(const std::string& s);

LatticeSet integers(std::size_t d, IntegerKind kind = IntegerKind::All);
LatticeSet finite_set(std::size_t d, std::vector<IntVec> points);

// {(round_half(n alpha_1), ..., round_half(n alpha_d)) : n in base}
LatticeSet floor_slope_generator(const LatticeSet& base, std::vector<ExactReal> alpha);

// s * n1 + c * |n1|^e
struct StripBound {
  Rational slope = 0;
  Rational coef = 0;
  Rational exponent = 0;
};

struct StripSpec {
  std::string kind = "parabolic";
  StripBound lower{0, 1, 2};
  StripBound upper{0, 2, 2};
  IntegerKind domain = IntegerKind::Positive;
  // Caller asserts that the interval lengths grow without bound.
  bool lengths_unbounded = true;
};

StripSpec parabolic_strip();
LatticeSet strip_generator(const StripSpec& spec = parabolic_strip());

// {n : n_1 in domain, |n_j - c_j n_1| <= w_j |n_1|^{e_j} for j >= 2}
struct BandSpec {
  IntegerKind domain = IntegerKind::Nonzero;
  std::vector<Rational> center;
  std::vector<Rational> width;
  std::vector<Rational> exponent;
};
LatticeSet cone_band(const BandSpec& spec);

// Coordinates are 0-based here; text formats use 1-based indices.
LatticeSet band_remove(const LatticeSet& gen, std::size_t i, Int k);

enum class MatrixDirection { Pullback, Image };
// Pullback: {n : M n in gen}. Image: {M n : n in gen} ∩ Z^d. Both need M invertible.
LatticeSet apply_rational_matrix(const LatticeSet& gen, const RatMatrix& m, MatrixDirection dir);
// {m in Z^{d'} : B m in gen} for an integer d x d' matrix B of full column rank.
LatticeSet linear_pullback(const LatticeSet& gen, const IntMatrix& b);
LatticeSet intersect_sublattice(const LatticeSet& gen, const IntMatrix& basis);
LatticeSet essential(const LatticeSet& gen);
// Members with |n_{perm[0]}| >= |n_{perm[1]}| >= ...
// `selection` is recorded in provenance when the class was picked heuristically.
LatticeSet order_class(const LatticeSet& gen, const std::vector<std::size_t>& perm,
                       const std::string& selection = "");
// Output n' with n'_a = n_{perm[a]}.
LatticeSet permute_coordinates(const LatticeSet& gen, const std::vector<std::size_t>& perm);
// min_i |n_i| > m
LatticeSet ball_complement(const LatticeSet& gen, Int m);
LatticeSet hyperplane(const LatticeSet& gen, const IntVec& v);
// Same members; provenance is `tag` with gen's tree as its only child.
LatticeSet tagged(const LatticeSet& gen, Provenance tag);

bool is_essential(const IntVec& n);
bool is_ordered(const IntVec& n);

class BohrNeighborhood {
 public:
  // freqs[j] has one entry per coordinate of Z^d.
  BohrNeighborhood(std::vector<std::vector<Scalar>> freqs, double eps);

  std::size_t dim() const { return dim_; }
  double eps() const { return eps_; }
  const std::vector<std::vector<Scalar>>& freqs() const { return freqs_; }
  bool contains(const IntVec& n) const;
  // max_j ||n . alpha_j||_T
  double distance(const IntVec& n) const;

 private:
  std::vector<std::vector<Scalar>> freqs_;
  double eps_;
  std::size_t dim_ = 0;
  bool exact_ = true;
};

LatticeSet bohr_filter(const LatticeSet& gen, const BohrNeighborhood& b);
LatticeSet bohr_set(const BohrNeighborhood& b);

// Smallest n >= 1 with ||n freq||_T < eps; SearchExhausted past the cap.
Int bohr_min_element(const ExactReal& freq, double eps, Int cap = 1000000000);
Int bohr_min_element(double freq, double eps, Int cap = 1000000000);

struct NormalizeDiagnostics {
  std::size_t scanned = 0;
  std::size_t dropped_non_essential = 0;
  std::size_t survivors = 0;
  // One entry per permutation in lexicographic order.
  std::vector<std::pair<std::vector<std::size_t>, std::size_t>> class_counts;
  bool empty = false;
};

struct NormalizeResult {
  LatticeSet set;
  std::vector<std::size_t> perm;
  NormalizeDiagnostics diagnostics;
};

NormalizeResult normalize_essential_ordered(const LatticeSet& gen, Int horizon);

struct RedundancyOptions {
  Int coeff_bound = 10;
  // Relation must hold for more than this many members; 0 means 2d.
  std::size_t threshold = 0;
};

std::optional<IntVec> redundancy_detect(const LatticeSet& gen, Int horizon,
                                        const RedundancyOptions& opts = {});

void write_members_csv(std::ostream& os, const LatticeSet& gen, Int horizon);

// Vector and matrix text used inside provenance parameters.
std::string format_int_vector(const IntVec& v);
IntVec parse_int_vector(const std::string& s);
std::string format_rat_vector(const std::vector<Rational>& v);
std::vector<Rational> parse_rat_vector(const std::string& s);
std::string format_int_matrix(const IntMatrix& m);
IntMatrix parse_int_matrix(const std::string& s);
std::string format_rat_matrix(const RatMatrix& m);
RatMatrix parse_rat_matrix(const std::string& s);
std::string format_exact_vector(const std::vector<ExactReal>& v);
std::vector<ExactReal> parse_exact_vector(const std::string& s, const BasisPtr& basis);
std::string format_perm(const std::vector<std::size_t>& p);
std::vector<std::size_t> parse_perm(const std::string& s);
std::string format_double(double x);

}  // namespace nilrec
