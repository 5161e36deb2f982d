#pragma once

#include <string>
#include <vector>

#include "nilrec/correlations.hpp"

namespace nilrec {

struct DensityOptions {
  Int cap = 1000000;
  // Grid audit resolution is eps / audit_div for rows with two or more entries.
  int audit_div = 4;
};

// Largest distance between neighbouring points of {n x mod 1 : |n| <= N}
// (the circle gap, twice the covering radius).
double circle_gap(const std::vector<double>& xs, Int n);

// max over grid points of the sup-norm distance to {(n x_j mod 1)_j : |n| <= N}.
double grid_audit(const std::vector<double>& xs, Int n, double resolution);

// Whether the samples for row l at N count as eps-dense.
bool row_dense(const std::vector<double>& xs, Int n, double eps, const DensityOptions& opts = {});

// Smallest N >= 1 at which row l (0-based) is eps-dense; 1 when the row has
// no off-diagonal support or eps >= 1/2. SearchExhausted past opts.cap.
Int density_horizon_row(const CorrelationVector& p, std::size_t l, double eps, const DensityOptions& opts = {});
// max over rows, at least r.
Int density_horizon(const CorrelationVector& p, double eps, std::size_t r, const DensityOptions& opts = {});

struct ApproximationCertificate {
  IntVec n;
  // w[i] has r coordinates in [0, 1).
  std::vector<std::vector<BigFloat>> w;
  std::vector<BigFloat> y;
  // y = sum_i y_parts[i] / n_i
  std::vector<std::vector<BigFloat>> y_parts;
  std::vector<IntVec> k;
  BigFloat y_norm;
  BigFloat error;
  Int N = 0;
  Int M = 0;
  Int C = 0;
  double eps = 0;

  std::string to_text() const;
  static ApproximationCertificate parse(const std::string& text);
};

struct VerifyResult {
  BigFloat y_norm;
  BigFloat error;
  BigFloat telescoped;
  bool parts_match = false;
  bool telescope_ok = false;
};

// Recomputes everything from (n, w, y, y_parts); does not call the builder.
VerifyResult verify_certificate(const ApproximationCertificate& cert);

// M = ceil(N / eps) + 1
Int theorem_b_M(Int n, double eps);

// Backward induction l = d .. 1 with k_l scanned in the order 0, 1, -1, 2, ...
// N = 0 computes the density horizon at eps. Checks that n is in the correlated
// set at eps / M with min |n_i| > M.
ApproximationCertificate approximate_targets(const CorrelationVector& p, const IntVec& n,
                                             const std::vector<TorusPoint>& w, double eps, Int N = 0);

// Runs at eps / (d+3)^3 so that both norms come out below eps.
ApproximationCertificate approximate_targets_rescaled(const CorrelationVector& p, const IntVec& n,
                                                      const std::vector<TorusPoint>& w, double eps,
                                                      Int N = 0);

struct REps {
  LatticeSet set;
  Int N = 0;
  Int M = 0;
  double eps = 0;
  // eps / (d+3)^3, the value the rescaled construction runs at.
  double inner_eps = 0;
  // inner_eps / M, the correlation filter width.
  double filter_eps = 0;
};

// Correlated at inner_eps / M and min |n_i| > M.
REps build_R_eps(const LatticeSet& gen, const CorrelationVector& p, double eps, std::size_t r = 1,
                 const DensityOptions& opts = {});

// First `count` members within the horizon; PreconditionError when there are none.
std::vector<IntVec> sample_R_eps(const REps& r, Int horizon, std::size_t count);

}  // namespace nilrec
