#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nilrec/simultaneous_approx.hpp"

namespace nilrec {

struct RecurrenceReport {
  std::string system_id;
  std::string level = "full";
  Provenance set;
  double eps = 0;
  TorusPoint base;
  std::optional<IntVec> found;
  // Distance of `found`; exact evaluation for exact systems.
  double distance = 0;
  // Closest return seen, kept when nothing is found.
  std::optional<IntVec> best;
  double best_distance = 0;
  Int horizon = 0;
  std::size_t scanned = 0;
  double wall_seconds = 0;
};

// || T^n x - x ||, exact for exact systems.
double return_distance(const AffineSystem& system, const IntVec& n, const TorusPoint& x);

// First member n != 0 of gen within [-H, H]^d (enumeration order) with
// ||T^n x0 - x0|| < eps. Shards each block over `threads`; the first hit in
// enumeration order wins.
RecurrenceReport return_time_search(const AffineSystem& system, const LatticeSet& gen, const TorusPoint& x0,
                                    double eps, Int horizon, unsigned threads = 1,
                                    const std::string& system_id = "");

// G_{s-1} as a subtorus; the whole torus when s <= 2.
SubtorusLattice penultimate_subtorus(const AffineSystem& system);

// -sum_i (M_i - I) g_i; each g_i must lie on G_{s-1}.
TorusPoint commutator_map_psi(const AffineSystem& system, const std::vector<TorusPoint>& g);

struct CommutatorApproximation {
  TorusPoint h;
  double h_norm = 0;
  // [h, T_1^{n_1}] ... [h, T_d^{n_d}] evaluated by composing maps.
  TorusPoint word;
  double error = 0;
  std::string method;
};

// The commutator word of the translation h with the powers T_i^{n_i}, by composition.
TorusPoint commutator_word(const AffineSystem& system, const TorusPoint& h, const IntVec& n);

// h on G_{s-1} with ||h|| < eps and ||word(h) - v|| < eps. Solves
// sum n_i (M_i - I) h = -v through the Smith form; when that fails and `p` is
// given, runs the simultaneous approximation on a preimage of v under Psi.
CommutatorApproximation approximate_last_commutator(const AffineSystem& system, const TorusPoint& v,
                                                    const IntVec& n, double eps,
                                                    const CorrelationVector* p = nullptr);

struct PipelineConfig {
  std::string system_id;
  std::vector<double> eps;
  // Return-time search horizon.
  Int horizon = 1000000;
  // R_eps is searched up to this horizon when it has members there; the
  // enforced set is searched otherwise.
  Int r_eps_horizon = 10000;
  // Horizon for normalization, redundancy and correlation scans.
  Int scan_horizon = 400;
  int grid_m = 20;
  unsigned threads = 1;
  Int ergodicity_bound = 50;
  EnforcementOptions enforcement;
};

struct LevelComparison {
  double eps = 0;
  // "r_eps" or "enforced" (R_eps had no members within the horizon).
  std::string searched;
  std::optional<REps> r_eps;
  RecurrenceReport full;
  std::optional<RecurrenceReport> factor;
  std::optional<CommutatorApproximation> lift;
  // ||T^n h|| for the lifted point h.
  double lifted_distance = 0;
  double factor_radius = 0;
};

struct PipelineResult {
  ErgodicityResult ergodicity;
  std::vector<std::size_t> perm;
  std::vector<IntVec> redundancy_relations;
  CorrelationVector p;
  std::string p_source;
  TransformLog log;
  // Original word exponents = to_original * final exponents.
  IntMatrix to_original;
  AffineSystem system;
  LatticeSet set;
  std::vector<LevelComparison> levels;

  std::vector<RecurrenceReport> reports() const;
};

// Ergodicity of the maximal torus factor, normalization, redundancy
// elimination, exact correlations, enforcement, R_eps and the searches.
// NonMinimalSystem when the torus factor is not ergodic.
PipelineResult theorem_a_experiment(const AffineSystem& system, const LatticeSet& gen, const PipelineConfig& config);

}  // namespace nilrec
