#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nilrec/affine.hpp"
#include "nilrec/lattice_sets.hpp"

namespace nilrec {

// Upper-triangular array of slopes P_ij (i <= j), 0-based. P_ii = 1.
class CorrelationVector {
 public:
  CorrelationVector() = default;
  // Identity correlations: P_ii = 1, all others exact 0.
  explicit CorrelationVector(std::size_t d);

  std::size_t dim() const { return d_; }
  const Scalar& at(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, Scalar v);
  double value(std::size_t i, std::size_t j) const;
  bool nonzero(std::size_t i, std::size_t j) const;
  bool is_exact() const;
  // Off-diagonal (i, j) with P_ij != 0.
  std::vector<std::pair<std::size_t, std::size_t>> support() const;

  // "1,2=1/2;1,3=sqrt2/4" with 1-based indices; omitted entries are 0.
  std::string to_string() const;
  static CorrelationVector parse(const std::string& text, std::size_t d, const BasisPtr& basis);

  bool operator==(const CorrelationVector& o) const;

 private:
  std::size_t d_ = 0;
  std::vector<Scalar> p_;
};

// a / b when it is representable over the shared basis.
std::optional<ExactReal> exact_ratio(const ExactReal& a, const ExactReal& b);

// max over i <= j <= l of |P_il - P_ij P_jl|.
double consistency_defect(const CorrelationVector& p);

struct CorrelationEstimate {
  CorrelationVector candidate;
  // Grid index per off-diagonal pair in (i, j) lexicographic order.
  std::vector<Int> cell;
  std::size_t count = 0;
  std::size_t total = 0;
  double cell_size = 0;
  Int horizon = 0;
  int grid_m = 0;
};

// Bins the ratio vectors (n_j / n_i)_{i<j} of members in [-H, H]^d into a
// 2/m grid with centers -1 + 2c/m and returns the k fullest cells, ties broken
// by cell index.
std::vector<CorrelationEstimate> estimate_correlations(const LatticeSet& gen, Int horizon, int grid_m,
                                                       std::size_t top_k = 1, unsigned threads = 1);

struct RefinementLevel {
  int grid_m = 0;
  std::vector<Int> cell;
  std::vector<double> center;
  std::size_t count = 0;
  std::size_t count_half = 0;
};

// Nested grids m, 2m, 4m, ...: each level keeps the fullest sub-cell of the
// previous one whose count grows from horizon H/2 to H. Stops when none grows.
std::vector<RefinementLevel> nested_refinement(const LatticeSet& gen, Int horizon, int grid_m,
                                               std::size_t levels);

// Exact P_ij from the set's asymptotic direction, where every ratio is representable.
std::optional<CorrelationVector> exact_correlations(const LatticeSet& gen);

// Smallest-denominator p/q with q <= max_den within tol of x (0 preferred).
std::optional<Rational> snap_rational(double x, double tol, Int max_den = 12);

// {n in gen : |n_j / n_i - P_ij| <= eps for all i < j}
LatticeSet filter_correlated(const LatticeSet& gen, const CorrelationVector& p, double eps);

struct IndependenceResult {
  bool independent = true;
  std::size_t row = 0;
  // Columns of the row's nonzero entries, and the relation over them.
  std::vector<std::size_t> columns;
  IntVec relation;
};

IndependenceResult complete_independence_check(const CorrelationVector& p);

struct EnforcementPass {
  // 1-based as in the usual statement of the loop.
  std::size_t n = 0;
  std::size_t l = 0;
  IntVec v;
  IntMatrix m;
  ExactReal eps_bound;
  double eps = 0;
  // New coordinate a takes old coordinate perm[a].
  std::vector<std::size_t> perm;
  std::size_t l_size_before = 0;
  std::size_t l_size_after = 0;
  std::size_t members_after = 0;
};

struct TransformLog {
  std::size_t dim = 0;
  std::vector<EnforcementPass> passes;
  // n_original = total * m_final.
  IntMatrix total;

  std::string to_text() const;
  static TransformLog parse(const std::string& text, const BasisPtr& basis);
};

// Original-coordinates element for a final member.
IntVec replay(const TransformLog& log, const IntVec& m);
// Reapplies every pass's reparametrization and permutation.
AffineSystem replay_system(const TransformLog& log, const AffineSystem& original);

struct EnforcementOptions {
  // Multiplier (<= 1) applied to the bound eps of pass k; the last entry repeats.
  std::vector<Rational> eps_schedule{Rational(1)};
  // Horizon for redundancy, order and re-estimation scans.
  Int horizon = 400;
  // Grid for re-estimating the moved coordinate's slopes from members with
  // H/2 < |n| <= H, one mode per pair; snapping tolerance is 2/m.
  int grid_m = 10;
  Int snap_max_den = 12;
  std::size_t max_passes = 64;
  bool check_redundancy = true;
};

struct EnforcementResult {
  LatticeSet set;
  CorrelationVector p;
  AffineSystem system;
  TransformLog log;
};

EnforcementResult enforce_complete_independence(const LatticeSet& gen, const CorrelationVector& p,
                                                const AffineSystem& system,
                                                const EnforcementOptions& opts = {});

}  // namespace nilrec
