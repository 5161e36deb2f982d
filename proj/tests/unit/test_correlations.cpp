#include <gtest/gtest.h>

#include "nilrec/correlations.hpp"
#include "oracles.hpp"

using namespace nilrec;

namespace {

BasisPtr basis() { return IrrationalBasis::standard({"sqrt2", "sqrt3", "sqrt5"}); }
ExactReal ex(const std::string& s) { return ExactReal::parse(s, basis()); }
CorrelationVector pv(const std::string& s, std::size_t d) { return CorrelationVector::parse(s, d, basis()); }

LatticeSet floor_slope() {
  return floor_slope_generator(integers(1, IntegerKind::Nonzero), {ExactReal(1), ex("sqrt2/2")});
}

LatticeSet half_band() {
  return essential(cone_band(BandSpec{IntegerKind::Nonzero, {ratio(1, 2)}, {ratio(1, 2)}, {ratio(1, 2)}}));
}

AffineSystem skew_pair() {
  auto b = basis();
  AffineMap t1(IntMatrix{{1, 0}, {2, 1}}, TorusPoint::exact({ex("sqrt2"), ex("sqrt2")}));
  AffineMap t2(IntMatrix::identity(2), TorusPoint::exact({ExactReal(0), ex("sqrt3")}));
  return AffineSystem({t1, t2});
}

LatticeSet three_dim_fixture() {
  BandSpec spec{IntegerKind::Positive, {0, 0}, {1, 1}, {0, ratio(1, 2)}};
  auto img = apply_rational_matrix(cone_band(spec), RatMatrix(IntMatrix{{8, 0, 0}, {4, 8, 0}, {2, 0, 8}}),
                                   MatrixDirection::Image);
  return order_class(essential(img), {0, 1, 2});
}

AffineSystem three_rotations() {
  std::vector<AffineMap> maps;
  for (std::string a : {"sqrt2", "sqrt3", "sqrt5"}) maps.push_back(AffineMap::translation(TorusPoint::exact({ex(a)})));
  return AffineSystem(maps);
}

// Word identity on the first members of the enforced set.
void expect_words_agree(const LatticeSet& original, const AffineSystem& sys, const EnforcementResult& r) {
  auto ms = r.set.members(400);
  ASSERT_GE(ms.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    IntVec n = replay(r.log, ms[i]);
    EXPECT_TRUE(original.contains(n)) << to_string(ms[i]) << " -> " << to_string(n);
    EXPECT_EQ(r.system.word(ms[i]), sys.word(n));
    EXPECT_EQ(replay_system(r.log, sys).word(ms[i]), sys.word(n));
  }
}

}  // namespace

TEST(Estimate, FloorSlope) {
  auto e = estimate_correlations(floor_slope(), 10000, 100);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_NEAR(e[0].candidate.value(0, 1), 0.70711, 0.01);
  EXPECT_DOUBLE_EQ(e[0].cell_size, 0.02);
}

TEST(Estimate, OrderedStripAndDiagonal) {
  auto strip = permute_coordinates(strip_generator(), {1, 0});
  auto e = estimate_correlations(strip, 2000, 50);
  // finite horizon: the fullest cell is the first one above 0
  EXPECT_LE(std::fabs(e[0].candidate.value(0, 1)), 2.0 / 50 + 1e-12);
  std::vector<IntVec> diag;
  for (Int n = 1; n <= 100; ++n) diag.push_back({n, n});
  auto f = estimate_correlations(finite_set(2, diag), 100, 20);
  EXPECT_NEAR(f[0].candidate.value(0, 1), 1.0, 0.1);
  EXPECT_EQ(f[0].count, 100u);
}

TEST(Estimate, ThreadCountDoesNotChangeResult) {
  auto a = estimate_correlations(floor_slope(), 5000, 200, 3, 1);
  auto b = estimate_correlations(floor_slope(), 5000, 200, 3, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].cell, b[i].cell);
    EXPECT_EQ(a[i].count, b[i].count);
  }
}

TEST(ExactCorrelations, FromDirection) {
  auto p = exact_correlations(floor_slope());
  ASSERT_TRUE(p);
  EXPECT_EQ(exact_of(p->at(0, 1)), ex("sqrt2/2"));
  auto q = exact_correlations(half_band());
  ASSERT_TRUE(q);
  EXPECT_EQ(exact_of(q->at(0, 1)), ExactReal(ratio(1, 2)));
}

TEST(SnapRational, Examples) {
  EXPECT_EQ(snap_rational(0.70, 0.005), std::optional<Rational>(ratio(7, 10)));
  EXPECT_EQ(snap_rational(0.70, 0.02), std::optional<Rational>(ratio(5, 7)));
  EXPECT_EQ(snap_rational(0.001, 0.01), std::optional<Rational>(Rational(0)));
  EXPECT_EQ(snap_rational(0.5004, 0.01), std::optional<Rational>(ratio(1, 2)));
  EXPECT_FALSE(snap_rational(0.7071067811865476, 1e-4));
}

TEST(ConsistencyDefect, Examples) {
  EXPECT_DOUBLE_EQ(consistency_defect(pv("1,2=1/2;1,3=1/4;2,3=1/2", 3)), 0.0);
  EXPECT_NEAR(consistency_defect(pv("1,2=1/2;1,3=1/3;2,3=1/2", 3)), 1.0 / 12, 1e-15);
  EXPECT_DOUBLE_EQ(consistency_defect(CorrelationVector(1)), 0.0);
}

TEST(CorrelationVector, TextRoundTrip) {
  auto p = pv("1,2=1/2;1,3=sqrt2/4", 3);
  EXPECT_EQ(pv(p.to_string(), 3), p);
  EXPECT_FALSE(p.nonzero(1, 2));
  EXPECT_EQ(p.support().size(), 2u);
}

TEST(FilterCorrelated, Examples) {
  auto p = pv("1,2=sqrt2/2", 2);
  auto s = filter_correlated(integers(2), p, 0.01);
  EXPECT_TRUE(s.contains({100, 71}));
  EXPECT_FALSE(s.contains({100, 75}));
  EXPECT_FALSE(s.contains({0, 1}));
  auto ordered = order_class(essential(integers(2)), {0, 1});
  auto all = filter_correlated(ordered, p, 2.0);
  EXPECT_EQ(all.members(15), ordered.members(15));
}

TEST(Independence, Examples) {
  EXPECT_TRUE(complete_independence_check(pv("1,2=sqrt2/2", 2)).independent);
  EXPECT_TRUE(complete_independence_check(CorrelationVector(3)).independent);
  auto r = complete_independence_check(pv("1,2=1/2", 2));
  EXPECT_FALSE(r.independent);
  EXPECT_EQ(r.row, 0u);
  auto q = pv("1,2=1/2;1,3=1/4;2,3=1/2", 3);
  auto r3 = complete_independence_check(q);
  ASSERT_FALSE(r3.independent);
  ASSERT_EQ(r3.columns.size(), r3.relation.size());
  ExactReal sum(0);
  for (std::size_t k = 0; k < r3.columns.size(); ++k)
    sum = sum + exact_of(q.at(r3.row, r3.columns[k])).scaled(Rational(r3.relation[k]));
  EXPECT_TRUE(sum.is_zero());
}

TEST(Enforcement, TwoDimensionalPass) {
  auto gen = half_band();
  auto sys = skew_pair();
  auto r = enforce_complete_independence(gen, pv("1,2=1/2", 2), sys);
  ASSERT_EQ(r.log.passes.size(), 1u);
  const auto& pass = r.log.passes[0];
  EXPECT_EQ(pass.v, (IntVec{1, -2}));
  EXPECT_EQ(pass.l_size_before, 1u);
  EXPECT_EQ(pass.l_size_after, 0u);
  // min_j |P_lj| / (2 d |v|) = (1/2) / (2 * 2 * 2)
  EXPECT_EQ(pass.eps_bound, ExactReal(ratio(1, 16)));
  EXPECT_DOUBLE_EQ(pass.eps, 1.0 / 16);
  EXPECT_TRUE(complete_independence_check(r.p).independent);
  expect_words_agree(gen, sys, r);
}

TEST(Enforcement, AlreadyIndependentIsNoOp) {
  auto gen = floor_slope();
  auto sys = skew_pair();
  auto r = enforce_complete_independence(gen, pv("1,2=sqrt2/2", 2), sys);
  EXPECT_TRUE(r.log.passes.empty());
  EXPECT_EQ(r.log.total, IntMatrix::identity(2));
  EXPECT_EQ(r.set.members(50), gen.members(50));
}

TEST(Enforcement, ThreeDimensionalTwoPasses) {
  auto gen = three_dim_fixture();
  auto sys = three_rotations();
  EnforcementOptions opts;
  opts.horizon = 3000;
  opts.grid_m = 10;
  auto r = enforce_complete_independence(gen, pv("1,2=1/2;1,3=1/4;2,3=1/2", 3), sys, opts);
  ASSERT_EQ(r.log.passes.size(), 2u);
  EXPECT_EQ(r.log.passes[0].l_size_before, 2u);
  EXPECT_EQ(r.log.passes[0].l_size_after, 1u);
  EXPECT_EQ(r.log.passes[1].l_size_after, 0u);
  for (const auto& pass : r.log.passes) {
    EXPECT_GT(pass.eps, 0.0);
    EXPECT_NEAR(pass.eps, pass.eps_bound.to_double(), 1e-15);
    EXPECT_EQ(pass.v.size(), 3u);
  }
  EXPECT_TRUE(complete_independence_check(r.p).independent);
  std::vector<IntVec> ms;
  auto st = r.set.stream(3000);
  for (auto n = st.next(); n && ms.size() < 20; n = st.next()) ms.push_back(*n);
  ASSERT_EQ(ms.size(), 20u);
  for (std::size_t i = 0; i < std::min<std::size_t>(ms.size(), 20); ++i) {
    IntVec n = replay(r.log, ms[i]);
    EXPECT_TRUE(gen.contains(n));
    EXPECT_EQ(r.system.word(ms[i]), sys.word(n));
  }
}

TEST(TransformLog, TextRoundTripAndReplay) {
  auto r = enforce_complete_independence(half_band(), pv("1,2=1/2", 2), skew_pair());
  auto text = r.log.to_text();
  auto back = TransformLog::parse(text, basis());
  EXPECT_EQ(back.to_text(), text);
  for (const auto& m : r.set.members(30)) EXPECT_EQ(replay(back, m), replay(r.log, m));
  EXPECT_EQ(back.total, r.log.total);
}

// Property: the schedule only shrinks the filter radius.
TEST(Enforcement, ScheduleScalesEps) {
  EnforcementOptions opts;
  opts.eps_schedule = {ratio(1, 2)};
  auto r = enforce_complete_independence(half_band(), pv("1,2=1/2", 2), skew_pair(), opts);
  ASSERT_EQ(r.log.passes.size(), 1u);
  EXPECT_DOUBLE_EQ(r.log.passes[0].eps, 1.0 / 32);
}
