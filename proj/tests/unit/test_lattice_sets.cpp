#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "nilrec/formats.hpp"
#include "nilrec/lattice_sets.hpp"
#include "oracles.hpp"

using namespace nilrec;

namespace {

BasisPtr basis() { return IrrationalBasis::standard({"sqrt2", "sqrt3"}); }
ExactReal ex(const std::string& s) { return ExactReal::parse(s, basis()); }

LatticeSet floor_slope_half_root2(IntegerKind kind = IntegerKind::Nonzero) {
  return floor_slope_generator(integers(1, kind), {ExactReal(1), ex("sqrt2/2")});
}

// All points of [-h, h]^d passing `contains`, sorted by the enumeration order.
std::vector<IntVec> box_scan(const LatticeSet& s, Int h) {
  std::vector<IntVec> out;
  std::size_t d = s.dim();
  IntVec n(d, -h);
  while (true) {
    if (s.contains(n)) out.push_back(n);
    std::size_t i = 0;
    while (i < d && n[i] == h) n[i++] = -h;
    if (i == d) break;
    ++n[i];
  }
  std::sort(out.begin(), out.end(), [](const IntVec& a, const IntVec& b) {
    Int ma = max_norm(a), mb = max_norm(b);
    return ma != mb ? ma < mb : a < b;
  });
  return out;
}

void expect_enumeration_matches_box(const LatticeSet& s, Int h) {
  auto m = s.members(h);
  auto want = box_scan(s, h);
  EXPECT_EQ(m, want) << s.provenance().to_sexpr();
  std::set<IntVec> uniq(m.begin(), m.end());
  EXPECT_EQ(uniq.size(), m.size());
}

}  // namespace

TEST(BohrMin, ScanFixtures) {
  // values from the independent decimal scan, then pinned
  auto root2 = oracle::sqrt_of(2);
  EXPECT_EQ(oracle::bohr_scan(root2, 0.4), 2);
  EXPECT_EQ(oracle::bohr_scan(root2, 0.1), 5);
  EXPECT_EQ(oracle::bohr_scan(root2, 0.05), 12);
  EXPECT_EQ(bohr_min_element(ex("sqrt2"), 0.4), 2);
  EXPECT_EQ(bohr_min_element(ex("sqrt2"), 0.1), 5);
  EXPECT_EQ(bohr_min_element(ex("sqrt2"), 0.05), 12);
  EXPECT_EQ(bohr_min_element(std::sqrt(2.0), 0.05), 12);
}

TEST(BohrMin, AgreesWithScanOnRandomInputs) {
  oracle::Gen g(2);
  for (int i = 0; i < 30; ++i) {
    int k = static_cast<int>(g.integer(2, 30));
    if (static_cast<int>(std::sqrt(k)) * static_cast<int>(std::sqrt(k)) == k) continue;
    double eps = 0.01 + 0.3 * g.unit();
    auto b = IrrationalBasis::standard({"sqrt" + std::to_string(k)});
    auto a = ExactReal::basis_element(b, 1);
    EXPECT_EQ(bohr_min_element(a, eps), oracle::bohr_scan(oracle::sqrt_of(k), eps)) << k << " " << eps;
  }
}

TEST(BohrMin, CapRaisesSearchExhausted) {
  EXPECT_THROW(bohr_min_element(ex("sqrt2"), 0.001, 10), SearchExhausted);
  EXPECT_THROW(bohr_min_element(ex("sqrt2"), 0.5), PreconditionError);
}

TEST(BohrNeighborhood, MembersSatisfyInequalityExactly) {
  BohrNeighborhood b({{ex("sqrt2"), ex("sqrt3")}}, 0.05);
  auto s = bohr_set(b);
  auto r2 = oracle::sqrt_of(2), r3 = oracle::sqrt_of(3);
  auto ms = s.members(60);
  EXPECT_FALSE(ms.empty());
  for (const auto& n : ms) EXPECT_LT(oracle::tnorm(r2 * n[0] + r3 * n[1]), oracle::Dec(0.05)) << to_string(n);
  expect_enumeration_matches_box(s, 25);
}

TEST(FloorSlope, Examples) {
  auto s = floor_slope_half_root2();
  EXPECT_TRUE(s.contains({3, 2}));
  EXPECT_TRUE(s.contains({-3, -2}));
  EXPECT_FALSE(s.contains({3, 3}));
  auto t = floor_slope_generator(integers(1, IntegerKind::Nonzero), {ex("sqrt2"), ExactReal(ratio(1, 3))});
  EXPECT_TRUE(t.contains({1, 0}));
}

TEST(FloorSlope, EnumerationIsExhaustiveAndOrdered) {
  expect_enumeration_matches_box(floor_slope_half_root2(), 40);
  expect_enumeration_matches_box(floor_slope_half_root2(IntegerKind::Positive), 40);
}

TEST(Strip, Examples) {
  auto s = strip_generator();
  EXPECT_TRUE(s.contains({3, 10}));
  EXPECT_FALSE(s.contains({3, 20}));
  EXPECT_TRUE(s.contains({1, 1}));
  expect_enumeration_matches_box(s, 30);
}

TEST(BandRemove, Examples) {
  auto s = band_remove(integers(2), 0, 3);
  EXPECT_FALSE(s.contains({3, 5}));
  EXPECT_TRUE(s.contains({4, 5}));
  EXPECT_THROW(band_remove(integers(2), 0, 0), PreconditionError);
  auto it = integers(2);
  for (Int k = 1; k <= 10; ++k) it = band_remove(it, 0, k);
  auto shell = it.shell(11);
  EXPECT_NE(std::find(shell.begin(), shell.end(), IntVec{11, 0}), shell.end());
}

// Properties: removal only touches the band and commutes across bands.
TEST(BandRemove, LocalAndCommuting) {
  oracle::Gen g(8);
  for (int i = 0; i < 20; ++i) {
    std::size_t c1 = static_cast<std::size_t>(g.integer(0, 1)), c2 = static_cast<std::size_t>(g.integer(0, 1));
    Int k1 = g.coin() ? g.integer(1, 5) : -g.integer(1, 5), k2 = g.coin() ? g.integer(1, 5) : -g.integer(1, 5);
    auto base = strip_generator();
    auto a = band_remove(band_remove(base, c1, k1), c2, k2);
    auto b = band_remove(band_remove(base, c2, k2), c1, k1);
    EXPECT_EQ(a.members(20), b.members(20));
    for (const auto& n : base.members(20)) {
      bool in_band = n[c1] == k1 || n[c2] == k2;
      EXPECT_EQ(a.contains(n), !in_band);
    }
  }
}

TEST(RationalMatrix, Examples) {
  auto five_two = finite_set(2, {{5, 2}});
  auto pb = apply_rational_matrix(five_two, RatMatrix(IntMatrix{{1, 1}, {0, 1}}), MatrixDirection::Pullback);
  EXPECT_TRUE(pb.contains({3, 2}));
  auto dbl = apply_rational_matrix(integers(2), RatMatrix(IntMatrix{{2, 0}, {0, 2}}), MatrixDirection::Pullback);
  EXPECT_EQ(dbl.members(4), integers(2).members(4));
  auto img = apply_rational_matrix(finite_set(2, {{1, 1}}), RatMatrix(IntMatrix{{1, 1}, {0, 1}}), MatrixDirection::Image);
  EXPECT_EQ(img.members(5), (std::vector<IntVec>{{2, 1}}));
  EXPECT_THROW(apply_rational_matrix(integers(2), RatMatrix(IntMatrix{{1, 2}, {2, 4}}), MatrixDirection::Pullback),
               SingularMatrix);
}

// Property: pullback then image under a unimodular M restores membership.
TEST(RationalMatrix, PullbackImageRoundTrip) {
  oracle::Gen g(12);
  auto base = strip_generator();
  for (int i = 0; i < 10; ++i) {
    IntMatrix m = IntMatrix::identity(2);
    m(0, 1) = g.integer(-2, 2);
    IntMatrix e = IntMatrix::identity(2);
    e(1, 0) = g.integer(-2, 2);
    m = m * e;
    auto back = apply_rational_matrix(apply_rational_matrix(base, RatMatrix(m), MatrixDirection::Pullback), RatMatrix(m),
                                      MatrixDirection::Image);
    for (Int a = -12; a <= 12; ++a)
      for (Int b = -12; b <= 12; ++b) EXPECT_EQ(back.contains({a, b}), base.contains({a, b}));
    expect_enumeration_matches_box(back, 15);
  }
}

TEST(Normalize, TieBreaksToIdentity) {
  auto s = finite_set(2, {{0, 3}, {2, 1}, {1, 2}});
  auto r = normalize_essential_ordered(s, 3);
  EXPECT_EQ(r.perm, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.set.members(3), (std::vector<IntVec>{{2, 1}}));
  EXPECT_EQ(r.diagnostics.dropped_non_essential, 1u);
  ASSERT_EQ(r.diagnostics.class_counts.size(), 2u);
  EXPECT_EQ(r.diagnostics.class_counts[0].second, 1u);
  EXPECT_EQ(r.diagnostics.class_counts[1].second, 1u);
}

TEST(Normalize, FloorSlopeKeepsIdentity) {
  auto r = normalize_essential_ordered(floor_slope_half_root2(), 1000);
  EXPECT_EQ(r.perm, (std::vector<std::size_t>{0, 1}));
  // scan oracle: |round(n)| >= |round(n / sqrt2)| for all n
  for (Int n = -1000; n <= 1000; ++n) {
    long second = static_cast<long>(floor(oracle::Dec(n) / oracle::sqrt_of(2) + oracle::Dec(0.5)).convert_to<long>());
    EXPECT_GE(std::abs(n), std::abs(second));
  }
}

TEST(Normalize, StripSwapsCoordinates) {
  auto r = normalize_essential_ordered(strip_generator(), 100);
  EXPECT_EQ(r.perm, (std::vector<std::size_t>{1, 0}));
}

// Property: output members are essential and ordered.
TEST(Normalize, OutputPredicates) {
  std::vector<LatticeSet> sets{strip_generator(), floor_slope_half_root2(), integers(2),
                               integers(3, IntegerKind::Nonzero)};
  for (const auto& s : sets) {
    auto r = normalize_essential_ordered(s, 12);
    for (const auto& n : r.set.members(12)) {
      EXPECT_TRUE(is_essential(n));
      EXPECT_TRUE(is_ordered(n));
    }
  }
}

TEST(Normalize, EmptyIsDiagnostic) {
  auto r = normalize_essential_ordered(finite_set(2, {{0, 1}}), 3);
  EXPECT_TRUE(r.diagnostics.empty);
}

TEST(Redundancy, Examples) {
  std::vector<IntVec> line;
  for (Int n = -10; n <= 10; ++n) line.push_back({n, 2 * n});
  auto v = redundancy_detect(finite_set(2, line), 10, {3, 0});
  ASSERT_TRUE(v);
  EXPECT_EQ(*v, (IntVec{2, -1}));
  EXPECT_FALSE(redundancy_detect(integers(2), 10, {3, 0}));
}

TEST(Redundancy, FloorSlopeHasNone) {
  auto s = floor_slope_half_root2();
  EXPECT_FALSE(redundancy_detect(s, 1000, {20, 0}));
  auto ms = s.members(1000);
  // exhaustive v-scan oracle
  for (Int a = -20; a <= 20; ++a)
    for (Int b = -20; b <= 20; ++b) {
      if (a == 0 && b == 0) continue;
      bool all = std::all_of(ms.begin(), ms.end(), [&](const IntVec& n) { return a * n[0] + b * n[1] == 0; });
      EXPECT_FALSE(all);
    }
}

TEST(Sublattice, Examples) {
  auto s = intersect_sublattice(integers(2), IntMatrix{{2, 0}, {0, 1}});
  EXPECT_TRUE(s.contains({2, 5}));
  EXPECT_FALSE(s.contains({3, 5}));
  EXPECT_EQ(intersect_sublattice(integers(2), IntMatrix::identity(2)).members(4), integers(2).members(4));
  auto t = intersect_sublattice(strip_generator(), IntMatrix{{2, 0}, {0, 3}});
  EXPECT_FALSE(t.contains({4, 20}));
  EXPECT_TRUE(t.contains({4, 18}));
  EXPECT_THROW(intersect_sublattice(integers(2), IntMatrix{{1, 2}, {2, 4}}), SingularMatrix);
  expect_enumeration_matches_box(t, 20);
}

TEST(Enumeration, StreamMatchesMembers) {
  auto s = floor_slope_half_root2();
  auto st = s.stream(300);
  std::vector<IntVec> got;
  while (auto n = st.next()) got.push_back(*n);
  EXPECT_EQ(got, s.members(300));
}

TEST(Enumeration, MembersCsvHeader) {
  std::ostringstream os;
  write_members_csv(os, strip_generator(), 4);
  EXPECT_EQ(os.str(), "n_1,n_2\n1,1\n1,2\n2,4\n");
}

TEST(SetFile, RoundTripRebuildsSameSet) {
  auto b = basis();
  std::vector<LatticeSet> sets{
      floor_slope_half_root2(),
      order_class(essential(strip_generator()), {1, 0}, "majority"),
      band_remove(intersect_sublattice(integers(2), IntMatrix{{2, 0}, {0, 3}}), 1, 3),
      bohr_filter(integers(2), BohrNeighborhood({{ex("sqrt2"), ex("sqrt3")}}, 0.1)),
      bohr_filter(integers(1), BohrNeighborhood({{Scalar(0.4142135623730951)}}, 0.1)),
      ball_complement(permute_coordinates(strip_generator(), {1, 0}), 2),
      apply_rational_matrix(strip_generator(), RatMatrix(IntMatrix{{1, 1}, {0, 1}}), MatrixDirection::Image),
      linear_pullback(integers(2), IntMatrix{{1}, {2}}),
      hyperplane(integers(2), {1, -2}),
      finite_set(2, {{1, 2}, {-3, 4}}),
      strip_generator(StripSpec{"custom", {0, 1, 2}, {0, 3, 2}, IntegerKind::Nonzero, true}),
  };
  for (const auto& s : sets) {
    auto text = write_set_file(s, b);
    auto back = parse_set_file(text, "roundtrip");
    EXPECT_EQ(back.set.provenance(), s.provenance()) << text;
    EXPECT_EQ(back.set.members(12), s.members(12)) << text;
    EXPECT_EQ(write_set_file(back.set, back.basis), text);
  }
}

TEST(SetFile, UnknownNodeReportsLine) {
  try {
    parse_set_file("nilrec-set 1\n\n(essential\n  (mystery :dim 2))\n", "bad.set");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("mystery"), std::string::npos);
  }
}
