#include <benchmark/benchmark.h>

#include <random>

#include "eq/checker.hpp"
#include "eq/effects.hpp"
#include "eq/instances.hpp"
#include "eq/interp.hpp"
#include "eq/iteration.hpp"
#include "eq/locking.hpp"

using namespace eq;

namespace {

const char* kSample =
    "(let (l (app (prim new_lock) ()))"
    "  (let (rf (app (tyapp (app (prim alloc) l) bool) true))"
    "    (app (app"
    "      (lam (x lock)"
    "        (lam (r ((ref (singleton x)) bool))"
    "          (seq (app (prim acquire) x)"
    "               (let (y (app (tyapp (app (prim read_sync) x) bool) r))"
    "                    (seq (app (prim release) x) y)))))"
    "      l) rf)))";

void BM_LocksetSeq(benchmark::State& state) {
  auto q = lockset_quantale({"a", "b", "c"});
  Elem x = lock_eff(q, Multiset::of({"a"}), Multiset::of({"a", "b"}));
  Elem y = lock_eff(q, Multiset::of({"b", "b"}), Multiset::of({"c"}));
  for (auto _ : state) benchmark::DoNotOptimize(q->seq(x, y));
}
BENCHMARK(BM_LocksetSeq);

void BM_LocksetJoin(benchmark::State& state) {
  auto q = lockset_quantale({"a", "b", "c"});
  Elem x = lock_eff(q, Multiset::of({"a"}), Multiset::of({"a"}));
  Elem y = lock_eff(q, Multiset::of({"a", "b"}), Multiset::of({"a", "b"}));
  for (auto _ : state) benchmark::DoNotOptimize(q->join(x, y));
}
BENCHMARK(BM_LocksetJoin);

void BM_ProductSeq(benchmark::State& state) {
  auto l = lockset_quantale({"a", "b"});
  auto q = product(l, atomicity_quantale());
  Elem x = make_product_elem(q, lock_eff(l, {}, Multiset::of({"a"})), atom(Mover::R));
  Elem y = make_product_elem(q, lock_eff(l, Multiset::of({"a"}), {}), atom(Mover::L));
  for (auto _ : state) benchmark::DoNotOptimize(q->seq(x, y));
}
BENCHMARK(BM_ProductSeq);

void BM_LawSuiteAtomicity(benchmark::State& state) {
  auto q = atomicity_quantale();
  auto elems = *q->enumerate();
  for (auto _ : state) benchmark::DoNotOptimize(check_laws(q, elems));
}
BENCHMARK(BM_LawSuiteAtomicity);

void BM_NormalizeGround(benchmark::State& state) {
  auto q = atomicity_quantale();
  auto elems = *q->enumerate();
  std::mt19937_64 rng(7);
  std::vector<EffExpr> exprs;
  std::function<EffExpr(int)> gen = [&](int depth) -> EffExpr {
    std::uniform_int_distribution<int> shape(0, depth <= 0 ? 0 : 3);
    switch (shape(rng)) {
      case 1: return EffExpr::join(gen(depth - 1), gen(depth - 1));
      case 2: return EffExpr::seq(gen(depth - 1), gen(depth - 1));
      case 3: return EffExpr::star(gen(depth - 1));
      default: {
        std::uniform_int_distribution<std::size_t> pick(0, elems.size() - 1);
        return EffExpr::lit(elems[pick(rng)]);
      }
    }
  };
  for (int i = 0; i < 64; ++i) exprs.push_back(gen(5));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalize(exprs[i++ % exprs.size()]));
  }
}
BENCHMARK(BM_NormalizeGround);

void BM_ClosureStar(benchmark::State& state) {
  auto q = lockset_quantale({"a", "b"});
  auto star = closure(q);
  Elem balanced = lock_eff(q, Multiset::of({"a"}), Multiset::of({"a"}));
  for (auto _ : state) benchmark::DoNotOptimize(star(balanced));
}
BENCHMARK(BM_ClosureStar);

void BM_TypecheckSample(benchmark::State& state) {
  LanguageParams params = fq_params();
  auto term = parse_program(kSample, params);
  for (auto _ : state) benchmark::DoNotOptimize(type_of(params, TypeEnv{}, term));
}
BENCHMARK(BM_TypecheckSample);

void BM_RunSample(benchmark::State& state) {
  LanguageParams params = fq_params();
  auto term = parse_program(kSample, params);
  for (auto _ : state) benchmark::DoNotOptimize(run(params, term, 10000));
}
BENCHMARK(BM_RunSample);

}  // namespace

BENCHMARK_MAIN();
