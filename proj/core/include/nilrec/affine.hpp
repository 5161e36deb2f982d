#pragma once

#include <optional>
#include <vector>

#include "nilrec/int_matrix.hpp"
#include "nilrec/torus.hpp"

namespace nilrec {

using BigMatrix = std::vector<std::vector<mpz_class>>;

TorusPoint apply_matrix(const IntMatrix& m, const TorusPoint& x);
TorusPoint apply_matrix(const BigMatrix& m, const TorusPoint& x);
IntMatrix to_int_matrix(const BigMatrix& m);

// A^n for unipotent A and any integer n, via sum_j C(n,j)(A-I)^j.
BigMatrix unipotent_power(const IntMatrix& a, Int n);
// sum_{k=0}^{n-1} A^k for n >= 0, via sum_j C(n,j+1)(A-I)^j.
BigMatrix unipotent_power_sum(const IntMatrix& a, Int n);
// sum_j (-1)^j (A-I)^j.
IntMatrix unipotent_inverse(const IntMatrix& a);

// x -> A x + alpha on T^r.
class AffineMap {
 public:
  AffineMap(IntMatrix a, TorusPoint alpha);
  // Skips the unipotency check; used for compositions of arbitrary maps.
  static AffineMap unchecked(IntMatrix a, TorusPoint alpha);
  static AffineMap translation(TorusPoint alpha);
  static AffineMap identity(std::size_t r, bool exact = true);

  std::size_t dim() const { return a_.rows(); }
  const IntMatrix& matrix() const { return a_; }
  const TorusPoint& translation() const { return alpha_; }
  bool is_exact() const { return alpha_.is_exact(); }
  bool is_unipotent() const { return unipotent_; }
  bool is_translation() const { return a_ == IntMatrix::identity(dim()); }
  bool is_identity() const;

  TorusPoint apply(const TorusPoint& x) const;
  // this o inner
  AffineMap compose(const AffineMap& inner) const;
  AffineMap inverse() const;
  // Closed form; matrix entries must fit in 64 bits (OverflowError otherwise).
  AffineMap power(Int n) const;
  // T^n(x) without materializing the 64-bit matrix.
  TorusPoint power_apply(Int n, const TorusPoint& x) const;

  bool operator==(const AffineMap& o) const { return a_ == o.a_ && alpha_ == o.alpha_; }

 private:
  AffineMap(IntMatrix a, TorusPoint alpha, bool unipotent);
  IntMatrix a_;
  TorusPoint alpha_;
  bool unipotent_ = false;
};

// Translation by (A_g - I) alpha_h - (A_h - I) alpha_g when the matrices commute,
// g o h o g^-1 o h^-1 otherwise.
AffineMap commutator(const AffineMap& g, const AffineMap& h);
AffineMap commutator_by_composition(const AffineMap& g, const AffineMap& h);
TorusPoint commutator_translation(const AffineMap& g, const AffineMap& h);

// Columns span the direction lattice of a subtorus; kept in column Hermite form.
class SubtorusLattice {
 public:
  SubtorusLattice() = default;
  SubtorusLattice(std::size_t r, const IntMatrix& gens);

  std::size_t ambient_dim() const { return r_; }
  std::size_t rank() const { return gens_.cols(); }
  bool trivial() const { return rank() == 0; }
  const IntMatrix& generators() const { return gens_; }

  bool contains(const SubtorusLattice& o) const;
  bool contains(const IntVec& v) const;
  bool operator==(const SubtorusLattice& o) const { return r_ == o.r_ && gens_ == o.gens_; }

  // Rows of an integer matrix P with ker(x -> Px mod 1) the subtorus; P is
  // surjective onto Z^{r-k} and in row Hermite form. `section` gets Q with P Q = I.
  IntMatrix quotient_projection(IntMatrix* section = nullptr) const;
  // Primitive basis of the saturation (the subtorus itself, as a lattice).
  IntMatrix saturated_generators() const;
  // Whether x lies on the subtorus.
  bool contains_point(const TorusPoint& x) const;

 private:
  std::size_t r_ = 0;
  IntMatrix gens_;
};

struct LowerCentralSeries {
  int step = 1;
  // G_2, ..., G_s, all nontrivial.
  std::vector<SubtorusLattice> chain;
};

class AffineSystem {
 public:
  // Checks dimensions, unipotency and pairwise commutation.
  explicit AffineSystem(std::vector<AffineMap> maps, double float_tol = 1e-9);

  std::size_t group_dim() const { return maps_.size(); }
  std::size_t torus_dim() const { return maps_.empty() ? 0 : maps_[0].dim(); }
  bool is_exact() const { return exact_; }
  const AffineMap& map(std::size_t i) const { return maps_.at(i); }
  const std::vector<AffineMap>& maps() const { return maps_; }
  int step() const { return lcs_.step; }
  const LowerCentralSeries& lcs() const { return lcs_; }

  // T_1^{n_1} o ... o T_d^{n_d}(x)
  TorusPoint power_apply(const IntVec& n, const TorusPoint& x) const;
  AffineMap word(const IntVec& n) const;
  std::vector<TorusPoint> translations() const;

 private:
  std::vector<AffineMap> maps_;
  bool exact_ = true;
  LowerCentralSeries lcs_;
};

LowerCentralSeries lower_central_series(const std::vector<AffineMap>& maps);
inline LowerCentralSeries lower_central_series(const AffineSystem& s) { return s.lcs(); }

struct ErgodicityResult {
  bool ergodic = true;
  std::optional<IntVec> witness;
};

// Exact criterion: no nonzero k in Z^r with k . alpha_i in Z for every i.
ErgodicityResult rotation_is_ergodic(const std::vector<TorusPoint>& alphas, Int bound = 50);
bool is_ergodicity_witness(const std::vector<TorusPoint>& alphas, const IntVec& k);

// S_i = T_1^{K_i1} o ... o T_d^{K_id}. K square and invertible over Q.
AffineSystem reparametrize(const AffineSystem& system, const IntMatrix& k);
// Same construction for a d' x d matrix of full row rank.
AffineSystem reparametrize_rectangular(const AffineSystem& system, const IntMatrix& k);
// T'_a = T_{perm[a]}.
AffineSystem permute(const AffineSystem& system, const std::vector<std::size_t>& perm);

struct FactorResult {
  AffineSystem factor;
  IntMatrix projection;
  IntMatrix section;
  SubtorusLattice kernel;
};

FactorResult factor_by_last_commutator(const AffineSystem& system);

struct TorusFactorTower {
  std::vector<FactorResult> levels;
  // Composite projection from T^r onto the maximal torus factor.
  IntMatrix projection;
  std::vector<TorusPoint> rotation;
};

TorusFactorTower maximal_torus_factor(const AffineSystem& system);

}  // namespace nilrec
