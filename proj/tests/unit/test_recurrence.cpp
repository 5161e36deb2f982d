#include <gtest/gtest.h>

#include "nilrec/recurrence.hpp"
#include "oracles.hpp"

using namespace nilrec;

namespace {

BasisPtr basis() { return IrrationalBasis::standard({"sqrt2", "sqrt3"}); }
ExactReal ex(const std::string& s) { return ExactReal::parse(s, basis()); }

AffineSystem skew() {
  return AffineSystem({AffineMap(IntMatrix{{1, 0}, {2, 1}}, TorusPoint::exact({ex("sqrt2"), ex("sqrt2")}))});
}

AffineSystem skew2() {
  AffineMap t1(IntMatrix{{1, 0}, {2, 1}}, TorusPoint::exact({ex("sqrt2"), ex("sqrt2")}));
  AffineMap t2(IntMatrix::identity(2), TorusPoint::exact({ExactReal(0), ex("sqrt3")}));
  return AffineSystem({t1, t2});
}

// T^n(0) = (n sqrt2, n^2 sqrt2); first n with summed torus norm below eps.
long skew_oracle(double eps) {
  auto r2 = oracle::sqrt_of(2);
  for (long n = 1; n < 100000; ++n)
    if (oracle::tnorm(r2 * n) + oracle::tnorm(r2 * n * n) < oracle::Dec(eps)) return n;
  return -1;
}

TorusPoint zero2() { return TorusPoint::exact({ExactReal(0), ExactReal(0)}); }

}  // namespace

TEST(ReturnSearch, RotationByQuarter) {
  AffineSystem rot({AffineMap::translation(TorusPoint::exact({ExactReal(ratio(1, 4))}))});
  auto rep = return_time_search(rot, integers(1, IntegerKind::Positive), TorusPoint::exact({ExactReal(0)}), 0.1, 100);
  ASSERT_TRUE(rep.found);
  EXPECT_EQ(*rep.found, (IntVec{4}));
  EXPECT_EQ(rep.distance, 0.0);
}

TEST(ReturnSearch, IdentityReturnsFirstNonzeroMember) {
  AffineSystem id({AffineMap::identity(2)});
  auto rep = return_time_search(id, integers(1), zero2(), 0.1, 10);
  ASSERT_TRUE(rep.found);
  EXPECT_EQ(*rep.found, (IntVec{-1}));
}

TEST(ReturnSearch, SkewAgainstDecimalLoop) {
  auto s = skew();
  auto pos = integers(1, IntegerKind::Positive);
  for (double eps : {0.2, 0.1, 0.05}) {
    long want = skew_oracle(eps);
    auto rep = return_time_search(s, pos, zero2(), eps, 1000000);
    ASSERT_TRUE(rep.found);
    EXPECT_EQ((*rep.found)[0], want);
  }
  EXPECT_EQ(skew_oracle(0.2), 39);
  EXPECT_EQ(skew_oracle(0.1), 94);
  EXPECT_EQ(skew_oracle(0.05), 152);
}

TEST(ReturnSearch, ReportedDistanceIsReevaluated) {
  auto s = skew();
  auto rep = return_time_search(s, integers(1, IntegerKind::Positive), zero2(), 0.1, 1000);
  ASSERT_TRUE(rep.found);
  Int n = (*rep.found)[0];
  auto r2 = oracle::sqrt_of(2);
  double want = (oracle::tnorm(r2 * n) + oracle::tnorm(r2 * n * n)).convert_to<double>();
  EXPECT_NEAR(rep.distance, want, 1e-14);
  EXPECT_NEAR(return_distance(s, *rep.found, zero2()), want, 1e-14);
  EXPECT_LT(rep.distance, 0.1);
}

TEST(ReturnSearch, NothingFoundKeepsBest) {
  auto s = skew();
  auto rep = return_time_search(s, integers(1, IntegerKind::Positive), zero2(), 0.001, 20);
  EXPECT_FALSE(rep.found);
  ASSERT_TRUE(rep.best);
  EXPECT_GT(rep.best_distance, 0.001);
  EXPECT_EQ(rep.scanned, 20u);
}

TEST(ReturnSearch, ThreadsDoNotChangeTheAnswer) {
  auto s = skew2();
  auto strip = strip_generator();
  for (double eps : {0.2, 0.1, 0.05}) {
    auto a = return_time_search(s, strip, zero2(), eps, 2000, 1);
    auto b = return_time_search(s, strip, zero2(), eps, 2000, 4);
    EXPECT_EQ(a.found, b.found);
    EXPECT_EQ(a.scanned, b.scanned);
    EXPECT_EQ(a.distance, b.distance);
  }
}

TEST(Psi, Example) {
  auto s = skew();
  auto g = TorusPoint::exact({ExactReal(ratio(1, 3)), ExactReal(ratio(1, 7))});
  EXPECT_EQ(commutator_map_psi(s, {g}), TorusPoint::exact({ExactReal(0), ExactReal(ratio(1, 3))}));
}

// Property: Psi is a homomorphism.
TEST(Psi, Additive) {
  oracle::Gen g(17);
  auto s = skew2();
  for (int i = 0; i < 50; ++i) {
    auto rnd = [&] {
      return TorusPoint::exact({ExactReal(ratio(g.integer(-20, 20), g.integer(1, 9))),
                                ExactReal(ratio(g.integer(-20, 20), g.integer(1, 9)))});
    };
    std::vector<TorusPoint> a{rnd(), rnd()}, b{rnd(), rnd()};
    std::vector<TorusPoint> c{a[0] + b[0], a[1] + b[1]};
    EXPECT_EQ(commutator_map_psi(s, c), commutator_map_psi(s, a) + commutator_map_psi(s, b));
  }
}

TEST(Lift, SolvesCongruence) {
  auto s = skew();
  auto v = TorusPoint::exact({ExactReal(0), ExactReal(ratio(3, 10))});
  auto a = approximate_last_commutator(s, v, {5}, 0.1);
  EXPECT_LT(a.h_norm, 0.1);
  EXPECT_LT(a.error, 0.1);
  // [h, T^5] by hand: translation -(A^5 - I) h = (0, -10 h_1)
  auto h = a.h.to_doubles();
  oracle::Dec second = oracle::frac(oracle::Dec(-10) * oracle::Dec(h[0]));
  EXPECT_LT(oracle::tnorm(second - oracle::Dec(3) / 10), oracle::Dec(0.1));
  EXPECT_EQ(a.word, commutator_word(s, a.h, {5}));
}

TEST(Lift, ZeroTargetGivesZero) {
  auto a = approximate_last_commutator(skew(), zero2(), {7}, 0.1);
  EXPECT_EQ(a.h_norm, 0.0);
  EXPECT_EQ(a.error, 0.0);
}

TEST(Pipeline, StripLiftsWithinThreeEps) {
  PipelineConfig cfg;
  cfg.system_id = "skew2";
  cfg.eps = {0.2, 0.1};
  auto res = theorem_a_experiment(skew2(), strip_generator(), cfg);
  EXPECT_TRUE(res.ergodicity.ergodic);
  ASSERT_EQ(res.levels.size(), 2u);
  for (const auto& lv : res.levels) {
    ASSERT_TRUE(lv.full.found) << lv.eps;
    EXPECT_LT(lv.full.distance, lv.eps);
    ASSERT_TRUE(lv.factor);
    ASSERT_TRUE(lv.lift);
    EXPECT_LT(lv.lifted_distance, 3 * lv.eps);
    // the found exponent maps back into the original set
    IntVec orig = res.to_original * *lv.full.found;
    EXPECT_TRUE(strip_generator().contains(orig)) << to_string(orig);
  }
  auto reports = res.reports();
  EXPECT_GE(reports.size(), 4u);
}

TEST(Pipeline, NonErgodicRotationRejected) {
  AffineSystem rot({AffineMap::translation(TorusPoint::exact({ExactReal(ratio(1, 2)), ex("sqrt2")}))});
  PipelineConfig cfg;
  cfg.eps = {0.1};
  try {
    theorem_a_experiment(rot, integers(1, IntegerKind::Positive), cfg);
    FAIL();
  } catch (const NonMinimalSystem& e) {
    ASSERT_EQ(e.witness().size(), 2u);
    EXPECT_TRUE(is_ergodicity_witness(rot.translations(), e.witness()));
  }
}
