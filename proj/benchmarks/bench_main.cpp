#include <benchmark/benchmark.h>

#include "nilrec/recurrence.hpp"

using namespace nilrec;

namespace {

BasisPtr basis() { return IrrationalBasis::standard({"sqrt2", "sqrt3"}); }
ExactReal ex(const std::string& s) { return ExactReal::parse(s, basis()); }

AffineSystem skew2() {
  AffineMap t1(IntMatrix{{1, 0}, {2, 1}}, TorusPoint::exact({ex("sqrt2"), ex("sqrt2")}));
  AffineMap t2(IntMatrix::identity(2), TorusPoint::exact({ExactReal(0), ex("sqrt3")}));
  return AffineSystem({t1, t2});
}

void BM_PowerApplyExact(benchmark::State& state) {
  auto s = skew2();
  auto x = TorusPoint::exact({ExactReal(0), ExactReal(0)});
  Int n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(s.power_apply({n, n / 3}, x));
}
BENCHMARK(BM_PowerApplyExact)->Arg(10)->Arg(1000)->Arg(1000000);

void BM_ReturnSearchStrip(benchmark::State& state) {
  auto s = skew2();
  auto strip = strip_generator();
  auto x = TorusPoint::exact({ExactReal(0), ExactReal(0)});
  unsigned threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(return_time_search(s, strip, x, 0.05, 100000, threads));
}
BENCHMARK(BM_ReturnSearchStrip)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Certificate(benchmark::State& state) {
  auto p = CorrelationVector::parse("1,2=sqrt2/2", 2, basis());
  auto gen = floor_slope_generator(integers(1, IntegerKind::Positive), {ExactReal(1), ex("sqrt2/2")});
  auto rs = build_R_eps(gen, p, 0.05, 2);
  auto n = sample_R_eps(rs, 100000000, 1).front();
  std::vector<TorusPoint> w{TorusPoint::floating({0.3, 0.7}), TorusPoint::floating({0.9, 0.1})};
  for (auto _ : state) benchmark::DoNotOptimize(approximate_targets_rescaled(p, n, w, 0.05, rs.N));
}
BENCHMARK(BM_Certificate)->Unit(benchmark::kMicrosecond);

void BM_BohrMin(benchmark::State& state) {
  auto a = ex("sqrt2");
  for (auto _ : state) benchmark::DoNotOptimize(bohr_min_element(a, 1e-6));
}
BENCHMARK(BM_BohrMin);

}  // namespace
BENCHMARK_MAIN();
