#include <gtest/gtest.h>

#include "nilrec/affine.hpp"
#include "nilrec/formats.hpp"
#include "oracles.hpp"

using namespace nilrec;

namespace {

BasisPtr basis() { return IrrationalBasis::standard({"sqrt2", "sqrt3"}); }
ExactReal ex(const std::string& s) { return ExactReal::parse(s, basis()); }

ExactReal random_exact(oracle::Gen& g) {
  return ExactReal(basis(), RatVec{ratio(g.integer(-5, 5), g.integer(1, 4)), ratio(g.integer(-3, 3), g.integer(1, 3)),
                                   ratio(g.integer(-3, 3), g.integer(1, 3))});
}

TorusPoint random_point(oracle::Gen& g, std::size_t r) {
  std::vector<ExactReal> xs;
  for (std::size_t i = 0; i < r; ++i) xs.push_back(random_exact(g));
  return TorusPoint::exact(xs);
}

IntMatrix random_unipotent(oracle::Gen& g, std::size_t r) {
  IntMatrix a = IntMatrix::identity(r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i + 1; j < r; ++j) a(i, j) = g.integer(-3, 3);
  if (g.coin()) {
    // conjugate by an elementary matrix and its inverse
    std::size_t i = static_cast<std::size_t>(g.integer(0, static_cast<long>(r) - 1));
    std::size_t j = (i + 1) % r;
    IntMatrix e = IntMatrix::identity(r), einv = IntMatrix::identity(r);
    e(i, j) = 1;
    einv(i, j) = -1;
    a = e * a * einv;
  }
  return a;
}

IntMatrix random_unimodular(oracle::Gen& g) {
  IntMatrix k = IntMatrix::identity(2);
  for (int s = 0; s < 3; ++s) {
    IntMatrix e = IntMatrix::identity(2);
    if (g.coin())
      e(0, 1) = g.integer(-2, 2);
    else
      e(1, 0) = g.integer(-2, 2);
    k = k * e;
  }
  return k;
}

oracle::ZMat to_z(const IntMatrix& a) {
  oracle::ZMat z(a.rows(), std::vector<mpz_class>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) z[i][j] = static_cast<long>(a(i, j));
  return z;
}

AffineSystem skew2() {
  return AffineSystem({AffineMap(IntMatrix{{1, 0}, {2, 1}}, TorusPoint::exact({ex("sqrt2"), ex("sqrt2")})),
                       AffineMap(IntMatrix::identity(2), TorusPoint::exact({ExactReal(0), ex("sqrt3")}))});
}

IntMatrix triangular3() { return IntMatrix{{1, 1, 0}, {0, 1, 1}, {0, 0, 1}}; }

}  // namespace

TEST(Commutator, ShearAgainstTranslation) {
  auto beta = ex("sqrt2");
  AffineMap g(IntMatrix{{1, 0}, {1, 1}}, TorusPoint::zero(2));
  AffineMap h(IntMatrix::identity(2), TorusPoint::exact({beta, ExactReal(0)}));
  auto c = commutator(g, h);
  EXPECT_TRUE(c.is_translation());
  EXPECT_EQ(c.translation(), TorusPoint::exact({ExactReal(0), beta}));
  // composition oracle: g h g^-1 h^-1 evaluated point by point
  oracle::Gen gen(1);
  for (int i = 0; i < 10; ++i) {
    auto x = random_point(gen, 2);
    auto y = g.apply(h.apply(g.inverse().apply(h.inverse().apply(x))));
    EXPECT_EQ(c.apply(x), y);
  }
}

TEST(Commutator, TrivialCases) {
  AffineMap a = AffineMap::translation(TorusPoint::exact({ex("sqrt2"), ex("1/3")}));
  AffineMap b = AffineMap::translation(TorusPoint::exact({ex("sqrt3"), ex("2/5")}));
  EXPECT_TRUE(commutator(a, b).is_identity());
  AffineMap s(IntMatrix{{1, 0}, {2, 1}}, TorusPoint::exact({ex("sqrt2"), ex("sqrt2")}));
  EXPECT_TRUE(commutator(s, s).is_identity());
}

TEST(Commutator, DimensionMismatch) {
  EXPECT_THROW(commutator(AffineMap::identity(1), AffineMap::identity(2)), DimensionMismatch);
}

// Property: formula equals composition, and g h = [g, h] h g.
TEST(Commutator, FormulaMatchesCompositionOnRandomPairs) {
  oracle::Gen g(21);
  for (int i = 0; i < 100; ++i) {
    IntMatrix n(3, 3);
    n(0, 1) = g.integer(-3, 3);
    n(0, 2) = g.integer(-3, 3);
    n(1, 2) = g.integer(-3, 3);
    IntMatrix n2 = n * n;
    auto poly = [&](Int a, Int b) { return IntMatrix::identity(3) + n.scaled(a) + n2.scaled(b); };
    AffineMap f(poly(g.integer(-2, 2), g.integer(-2, 2)), random_point(g, 3));
    AffineMap h(poly(g.integer(-2, 2), g.integer(-2, 2)), random_point(g, 3));
    auto c = commutator(f, h);
    EXPECT_EQ(c, commutator_by_composition(f, h));
    EXPECT_EQ(f.compose(h), c.compose(h.compose(f)));
  }
}

TEST(Power, ShearClosedForm) {
  AffineMap a(IntMatrix{{1, 1}, {0, 1}}, TorusPoint::zero(2));
  EXPECT_EQ(a.power(5).matrix(), (IntMatrix{{1, 5}, {0, 1}}));
}

TEST(Power, SkewOrbit) {
  AffineSystem s({AffineMap(IntMatrix{{1, 0}, {1, 1}}, TorusPoint::exact({ex("sqrt2"), ExactReal(0)}))});
  auto x = s.power_apply({3}, TorusPoint::zero(2));
  // iterate three times by hand
  auto y = TorusPoint::zero(2);
  for (int i = 0; i < 3; ++i) y = s.map(0).apply(y);
  EXPECT_EQ(x, y);
  EXPECT_EQ(x, TorusPoint::exact({ex("3*sqrt2"), ex("3*sqrt2")}));
  EXPECT_NEAR(x.coord(0), 0.24264068711928477, 1e-15);
  EXPECT_EQ(s.power_apply({0}, x), x);
}

// Criterion-3 property, also run by the acceptance binary.
TEST(Power, ClosedFormEqualsIteratedMultiplication) {
  oracle::Gen g(31);
  for (int i = 0; i < 100; ++i) {
    IntMatrix a = random_unipotent(g, 4);
    long n = g.integer(0, 64);
    EXPECT_EQ(unipotent_power(a, n), oracle::zpow(to_z(a), n)) << a.to_string() << " n=" << n;
  }
}

TEST(Power, AffineWordEqualsRepeatedComposition) {
  oracle::Gen g(32);
  for (int i = 0; i < 30; ++i) {
    AffineMap t(random_unipotent(g, 4), random_point(g, 4));
    long n = g.integer(0, 40);
    AffineMap it = AffineMap::identity(4);
    for (long k = 0; k < n; ++k) it = t.compose(it);
    EXPECT_EQ(t.power(n), it);
    EXPECT_EQ(t.power(-n).compose(t.power(n)), AffineMap::identity(4));
    auto x = random_point(g, 4);
    EXPECT_EQ(t.power_apply(n, x), it.apply(x));
  }
}

TEST(Power, OverflowReported) {
  AffineMap a(IntMatrix{{1, 1000, 0}, {0, 1, 1000}, {0, 0, 1}}, TorusPoint::zero(3));
  EXPECT_THROW(a.power(Int(1) << 40), OverflowError);
}

TEST(LowerCentralSeries, RotationIsStepOne) {
  AffineSystem s({AffineMap::translation(TorusPoint::exact({ex("sqrt2")}))});
  EXPECT_EQ(s.step(), 1);
  EXPECT_TRUE(s.lcs().chain.empty());
}

TEST(LowerCentralSeries, SkewIsStepTwo) {
  auto s = skew2();
  EXPECT_EQ(s.step(), 2);
  ASSERT_EQ(s.lcs().chain.size(), 1u);
  EXPECT_EQ(s.lcs().chain[0].generators(), (IntMatrix{{0}, {2}}));
  // cross-check: the commutator of T1 with a translation lands on G_2
  AffineMap probe = AffineMap::translation(TorusPoint::exact({ex("sqrt3"), ExactReal(0)}));
  auto c = commutator_translation(s.map(0), probe);
  EXPECT_EQ(c.exact_coords()[0], ExactReal(0));
}

TEST(LowerCentralSeries, TriangularIsStepThree) {
  AffineSystem s({AffineMap(triangular3(), TorusPoint::exact({ex("sqrt2"), ex("sqrt3"), ExactReal(0)}))});
  EXPECT_EQ(s.step(), 3);
  const auto& ch = s.lcs().chain;
  ASSERT_EQ(ch.size(), 2u);
  EXPECT_TRUE(ch[0].contains(ch[1]));
  EXPECT_FALSE(ch[1].contains(ch[0]));
}

TEST(LowerCentralSeries, ChainContainmentOnRandomSystems) {
  oracle::Gen g(41);
  for (int i = 0; i < 30; ++i) {
    AffineSystem s({AffineMap(random_unipotent(g, 4), random_point(g, 4))});
    const auto& ch = s.lcs().chain;
    for (std::size_t j = 1; j < ch.size(); ++j) {
      EXPECT_TRUE(ch[j - 1].contains(ch[j]));
      EXPECT_FALSE(ch[j] == ch[j - 1]);
    }
    for (const auto& l : ch) EXPECT_FALSE(l.trivial());
  }
}

TEST(Ergodicity, Examples) {
  auto r1 = rotation_is_ergodic({TorusPoint::exact({ex("sqrt2"), ex("sqrt3")})});
  EXPECT_TRUE(r1.ergodic);
  std::vector<TorusPoint> a2{TorusPoint::exact({ExactReal(ratio(1, 2)), ExactReal(0)}),
                             TorusPoint::exact({ExactReal(0), ExactReal(ratio(1, 3))})};
  auto r2 = rotation_is_ergodic(a2);
  EXPECT_FALSE(r2.ergodic);
  ASSERT_TRUE(r2.witness);
  EXPECT_TRUE(is_ergodicity_witness(a2, *r2.witness));
  EXPECT_TRUE(is_ergodicity_witness(a2, {2, 3}));
  // smallest max-norm witness in enumeration order
  EXPECT_EQ(*r2.witness, (IntVec{2, 0}));
  auto r3 = rotation_is_ergodic({TorusPoint::exact({ExactReal(ratio(1, 2))})});
  EXPECT_FALSE(r3.ergodic);
  EXPECT_EQ(*r3.witness, (IntVec{2}));
}

TEST(Ergodicity, FloatingRejected) {
  EXPECT_THROW(rotation_is_ergodic({TorusPoint::floating({0.5})}), MixedModeError);
}

TEST(Ergodicity, InvariantUnderUnimodularReparametrization) {
  oracle::Gen g(51);
  for (int i = 0; i < 40; ++i) {
    auto pick = [&]() -> ExactReal {
      switch (g.integer(0, 3)) {
        case 0: return ExactReal(ratio(g.integer(0, 5), g.integer(1, 6)));
        case 1: return ex("sqrt2").scaled(g.integer(1, 3));
        case 2: return ex("sqrt3") + ExactReal(ratio(1, g.integer(1, 4)));
        default: return ExactReal(0);
      }
    };
    AffineSystem s({AffineMap::translation(TorusPoint::exact({pick(), pick()})),
                    AffineMap::translation(TorusPoint::exact({pick(), pick()}))});
    auto k = random_unimodular(g);
    auto before = rotation_is_ergodic(s.translations());
    auto after = rotation_is_ergodic(reparametrize(s, k).translations());
    EXPECT_EQ(before.ergodic, after.ergodic);
  }
}

TEST(Reparametrize, IdentityAndElementary) {
  auto s = skew2();
  auto same = reparametrize(s, IntMatrix::identity(2));
  EXPECT_EQ(same.map(0), s.map(0));
  EXPECT_EQ(same.map(1), s.map(1));
  Int v1 = 3;
  auto e = reparametrize(s, IntMatrix{{1, 0}, {-v1, 1}});
  EXPECT_EQ(e.map(0), s.map(0));
  EXPECT_EQ(e.map(1), s.map(0).power(-v1).compose(s.map(1)));
}

TEST(Reparametrize, WordIdentityOnRandomUnimodular) {
  oracle::Gen g(61);
  auto s = skew2();
  for (int t = 0; t < 5; ++t) {
    auto k = random_unimodular(g);
    auto rep = reparametrize(s, k);
    for (int i = 0; i < 20; ++i) {
      IntVec n{g.integer(-50, 50), g.integer(-50, 50)};
      auto x = random_point(g, 2);
      EXPECT_EQ(s.power_apply(k.transpose() * n, x), rep.power_apply(n, x));
    }
  }
}

TEST(Reparametrize, SingularRejected) {
  EXPECT_THROW(reparametrize(skew2(), IntMatrix{{1, 2}, {2, 4}}), SingularMatrix);
}

TEST(Factor, SkewFactorsToRotation) {
  auto s = skew2();
  auto f = factor_by_last_commutator(s);
  EXPECT_EQ(f.factor.torus_dim(), 1u);
  EXPECT_EQ(f.factor.step(), 1);
  EXPECT_EQ(f.projection, (IntMatrix{{1, 0}}));
  EXPECT_EQ(f.factor.map(0).translation(), TorusPoint::exact({ex("sqrt2")}));
}

TEST(Factor, ProjectionIntertwinesExactly) {
  oracle::Gen g(71);
  std::vector<AffineSystem> systems{
      skew2(), AffineSystem({AffineMap(triangular3(), TorusPoint::exact({ex("sqrt2"), ex("sqrt3"), ExactReal(0)}))})};
  for (const auto& s : systems) {
    auto f = factor_by_last_commutator(s);
    EXPECT_EQ(f.factor.step(), s.step() - 1);
    for (int i = 0; i < 20; ++i) {
      auto x = random_point(g, s.torus_dim());
      for (std::size_t m = 0; m < s.group_dim(); ++m)
        EXPECT_EQ(apply_matrix(f.projection, s.map(m).apply(x)), f.factor.map(m).apply(apply_matrix(f.projection, x)));
    }
  }
  auto f3 = factor_by_last_commutator(systems[1]);
  EXPECT_EQ(f3.factor.torus_dim(), 2u);
  EXPECT_EQ(f3.factor.step(), 2);
}

TEST(Factor, StepOneRejected) {
  AffineSystem s({AffineMap::translation(TorusPoint::exact({ex("sqrt2")}))});
  EXPECT_THROW(factor_by_last_commutator(s), PreconditionError);
}

TEST(Factor, MaximalTorusFactorOfTriangular) {
  AffineSystem s({AffineMap(triangular3(), TorusPoint::exact({ex("sqrt2"), ex("sqrt3"), ex("1/3")}))});
  auto tower = maximal_torus_factor(s);
  EXPECT_EQ(tower.levels.size(), 2u);
  ASSERT_EQ(tower.rotation.size(), 1u);
  EXPECT_EQ(tower.rotation[0].dim(), 1u);
}

TEST(SystemFile, RoundTripIsExact) {
  auto s = skew2();
  auto text = write_system_file(s, basis());
  auto back = parse_system_file(text, "skew2");
  EXPECT_EQ(back.system.map(0), s.map(0));
  EXPECT_EQ(back.system.map(1), s.map(1));
  EXPECT_EQ(write_system_file(back.system, back.basis), text);
}

TEST(SystemFile, NonCommutingRejectedWithLine) {
  std::string text =
      "nilrec-system 1\ntorus 2\nmap\n matrix 1,1;0,1\n translation 0,0\nend\nmap\n matrix 1,0;1,1\n translation 0,0\nend\n";
  try {
    parse_system_file(text, "bad");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}
