// Acceptance suite: one test case per criterion, one printed verdict line each.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "eq/bridges.hpp"
#include "eq/cat.hpp"
#include "eq/effects.hpp"
#include "eq/instances.hpp"
#include "eq/interp.hpp"
#include "eq/iteration.hpp"
#include "eq/locking.hpp"

using namespace eq;

namespace {

struct Criterion {
  int id;
  std::string desc;
  bool ok = true;
  std::string note;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!note.empty()) note += "; ";
      note += what;
    }
  }

  void finish() {
    std::printf("ACCEPT %02d %s  %s%s%s\n", id, ok ? "PASS" : "FAIL", desc.c_str(),
                note.empty() ? "" : " — ", note.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(ok, desc, ": ", note);
  }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

LanguageParams& fq() {
  static LanguageParams params = fq_params();
  return params;
}

Elem le(const QuantalePtr& q, std::initializer_list<std::string> pre,
        std::initializer_list<std::string> post) {
  return lock_eff(q, Multiset::of(pre), Multiset::of(post));
}

EffExpr elit(Elem e) { return EffExpr::lit(std::move(e)); }

EffExpr random_expr(std::mt19937_64& rng, const std::vector<Elem>& elems, int depth) {
  std::uniform_int_distribution<int> shape(0, depth <= 0 ? 0 : 3);
  switch (shape(rng)) {
    case 1:
      return EffExpr::join(random_expr(rng, elems, depth - 1), random_expr(rng, elems, depth - 1));
    case 2:
      return EffExpr::seq(random_expr(rng, elems, depth - 1), random_expr(rng, elems, depth - 1));
    case 3: return EffExpr::star(random_expr(rng, elems, depth - 1));
    default: {
      std::uniform_int_distribution<std::size_t> pick(0, elems.size() - 1);
      return elit(elems[pick(rng)]);
    }
  }
}

std::vector<Elem> product_sample(const QuantalePtr& q, const QuantalePtr& l, int mult) {
  std::vector<Elem> elems;
  for (const auto& x : enumerate_lock_effects(l, *l->index_names(), mult)) {
    if (l->is_top(x)) continue;
    for (Mover m : {Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ})
      elems.push_back(make_product_elem(q, x, atom(m)));
  }
  elems.push_back(q->top());
  return elems;
}

}  // namespace

TEST_CASE("criterion 1: published atomicity tables") {
  Criterion c{1, "atomicity join and seq match the published lattice and table"};
  const Mover movers[5] = {Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ};
  const Mover join_table[5][5] = {
      {Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ},
      {Mover::L, Mover::L, Mover::A, Mover::A, Mover::TopFQ},
      {Mover::R, Mover::A, Mover::R, Mover::A, Mover::TopFQ},
      {Mover::A, Mover::A, Mover::A, Mover::A, Mover::TopFQ},
      {Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ},
  };
  const Mover seq_table[5][5] = {
      {Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ},
      {Mover::L, Mover::L, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ},
      {Mover::R, Mover::A, Mover::R, Mover::A, Mover::TopFQ},
      {Mover::A, Mover::A, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ},
      {Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ},
  };
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      c.require(std::get<Mover>(atomicity_join(atom(movers[i]), atom(movers[j])).payload) ==
                    join_table[i][j],
                "join entry " + std::to_string(i) + "," + std::to_string(j));
      c.require(std::get<Mover>(atomicity_seq(atom(movers[i]), atom(movers[j])).payload) ==
                    seq_table[i][j],
                "seq entry " + std::to_string(i) + "," + std::to_string(j));
    }
  c.finish();
}

TEST_CASE("criterion 2: worked lockset compositions") {
  Criterion c{2, "the three worked lockset sequencings reproduce exactly"};
  auto q = lockset_quantale({"l", "l1", "l2"});
  c.require(q->eq(q->seq(le(q, {}, {"l"}), le(q, {"l"}, {})), le(q, {}, {})),
            "acquire;release");
  c.require(q->eq(q->seq(le(q, {}, {"l"}), le(q, {}, {"l"})), le(q, {}, {"l", "l"})),
            "recursive acquisition");
  c.require(q->eq(q->seq(le(q, {}, {"l2"}), le(q, {"l1"}, {})), le(q, {"l1"}, {"l2"})),
            "hand-over-hand");
  c.finish();
}

TEST_CASE("criterion 3: law suite across the shipped instances") {
  Criterion c{3, "quantale laws and isotonicity on atomicity, bounded locksets, product, powerset"};
  auto check_all = [&](const std::string& label, const QuantalePtr& q,
                       const std::vector<Elem>& elems, const LawCheckConfig& cfg) {
    auto report = check_laws(q, elems, cfg);
    for (const auto& r : report.laws) c.require(r.pass, label + "/" + r.law);
  };
  check_all("atomicity", atomicity_quantale(), *atomicity_quantale()->enumerate(), {});
  check_all("powerset", powerset_quantale({"IOExc", "ArgExc"}),
            *powerset_quantale({"IOExc", "ArgExc"})->enumerate(), {});
  {
    // up to three locks at multiplicity up to three: exhaustive where the
    // tuple space allows, dense deterministic sampling beyond
    const NameSet locks{"a", "b", "c"};
    auto q = lockset_quantale(locks);
    LawCheckConfig cfg;
    cfg.exhaustive_cap = 20000000;
    cfg.budget = 200000;
    check_all("lockset-3x3", q, enumerate_lock_effects(q, locks, 3), cfg);
    // and fully exhaustive through the ternary laws on the smaller bound
    const NameSet two{"a", "b"};
    auto q2 = lockset_quantale(two);
    LawCheckConfig cfg2;
    cfg2.exhaustive_cap = 1000000;
    check_all("lockset-2x2", q2, enumerate_lock_effects(q2, two, 2), cfg2);
  }
  {
    auto l = lockset_quantale({"a"});
    auto q = product(l, atomicity_quantale());
    LawCheckConfig cfg;
    cfg.exhaustive_cap = 5000000;
    cfg.budget = 100000;
    check_all("product", q, product_sample(q, l, 2), cfg);
  }
  c.finish();
}

TEST_CASE("criterion 4: derived iteration equals the manual operators") {
  Criterion c{4, "derived star matches the hand-built operators exactly"};
  auto a = atomicity_quantale();
  auto star_a = closure(a);
  for (Mover m : {Mover::B, Mover::L, Mover::R, Mover::TopFQ, Mover::Err})
    c.require(a->eq(star_a(atom(m)), atom(m)), "atomicity star fixes " + std::string(mover_name(m)));
  c.require(a->eq(star_a(atom(Mover::A)), atom(Mover::TopFQ)), "star(A) = TOP");

  const NameSet locks{"x", "y"};
  auto l = lockset_quantale(locks);
  auto star_l = closure(l);
  for (const auto& e : enumerate_lock_effects(l, locks, 2)) {
    const auto& eff = std::get<LockEffect>(e.payload);
    Elem s = star_l(e);
    if (eff.err || eff.pre == eff.post)
      c.require(l->eq(s, e), "lockset star fixes balanced " + l->render(e));
    else
      c.require(l->is_top(s), "lockset star errs on " + l->render(e));
  }

  auto p = powerset_quantale({"IOExc", "ArgExc"});
  auto star_p = closure(p);
  auto all = *p->enumerate();
  for (const auto& e : all)
    c.require(p->eq(star_p(e), e), "commutative star is the identity at " + p->render(e));
  c.finish();
}

TEST_CASE("criterion 5: the reduction identity") {
  Criterion c{5, "R*;A;L* = A and the full starred expression normalizes to A"};
  auto q = atomicity_quantale();
  auto star = closure(q);
  Elem direct = q->seq(star(atom(Mover::R)), q->seq(atom(Mover::A), star(atom(Mover::L))));
  c.require(q->eq(direct, atom(Mover::A)), "R*;A;L*");

  auto S = [](Mover m) { return EffExpr::star(elit(atom(m))); };
  EffExpr full = EffExpr::seq(
      EffExpr::star(EffExpr::seq(S(Mover::R), S(Mover::B))),
      EffExpr::seq(elit(atom(Mover::A)), EffExpr::star(EffExpr::seq(S(Mover::B), S(Mover::L)))));
  auto g = nf_ground(normalize(full), q);
  c.require(g && q->eq(*g, atom(Mover::A)), "(R*;B*)*;A;(B*;L*)*");
  c.finish();
}

TEST_CASE("criterion 6: the P-suite across instances") {
  Criterion c{6, "P1/P2/P3/P5 everywhere; P4 on locksets and powerset, (L,R) witness on atomicity"};
  auto expect = [&](const std::string& label,
                    const std::vector<std::pair<std::string, PropertyResult>>& results,
                    bool p4_expected) {
    for (const auto& [name, r] : results) {
      if (name == "P4")
        c.require(r.pass == p4_expected, label + "/P4");
      else
        c.require(r.pass, label + "/" + name);
    }
  };
  auto a = atomicity_quantale();
  auto results_a = check_star_properties(closure(a), *a->enumerate());
  expect("atomicity", results_a, false);
  for (const auto& [name, r] : results_a)
    if (name == "P4") {
      c.require(r.witness.size() == 2 && a->eq(a->join(r.witness[0], r.witness[1]), atom(Mover::A)),
                "atomicity P4 witness joins to A");
    }

  const NameSet locks{"x", "y"};
  auto l = lockset_quantale(locks);
  auto bounded = enumerate_lock_effects(l, locks, 2);
  expect("lockset", check_star_properties(closure(l), bounded), true);

  auto p = powerset_quantale({"IOExc", "ArgExc"});
  expect("powerset", check_star_properties(closure(p), *p->enumerate()), true);

  auto lp = lockset_quantale({"x"});
  auto prod = product(lp, a);
  expect("product", check_star_properties(closure(prod), product_sample(prod, lp, 2)), false);
  c.finish();
}

TEST_CASE("criterion 7: collapsibility differential") {
  Criterion c{7, "multiset family collapsible; set variant fails with the double-acquire witness"};
  auto run_family = [&](const FamilyPtr& fam, int mult) {
    auto col = fam->collapse({"y"}, "x", "y");
    auto src = fam->instantiate({"x", "y"});
    auto tgt = fam->instantiate({"y"});
    int violations = 0;
    for (const auto& a : enumerate_lock_effects(src, {"x", "y"}, mult))
      for (const auto& b : enumerate_lock_effects(src, {"x", "y"}, mult)) {
        Elem fa = apply_hom(col, a);
        Elem fb = apply_hom(col, b);
        if (tgt->is_top(tgt->seq(fa, fb)) && !src->is_top(src->seq(a, b))) ++violations;
        if (tgt->is_top(tgt->join(fa, fb)) && !src->is_top(src->join(a, b))) ++violations;
      }
    return violations;
  };
  c.require(run_family(lockset_family(), 2) == 0, "multiset collapsibility (bounded exhaustive)");
  c.require(run_family(lockset_set_variant(), 1) > 0, "set variant breaks collapsibility");

  // the published witness shape
  auto fam = lockset_set_variant();
  auto src = fam->instantiate({"x", "y"});
  auto tgt = fam->instantiate({"y"});
  auto col = fam->collapse({"y"}, "x", "y");
  Elem ax = le(src, {}, {"x"});
  Elem ay = le(src, {}, {"y"});
  c.require(tgt->is_top(tgt->seq(apply_hom(col, ax), apply_hom(col, ay))),
            "images compose to Err");
  c.require(src->eq(src->seq(ax, ay), le(src, {}, {"x", "y"})), "originals compose cleanly");

  // end-to-end: the same curried double acquire, checked under both bundles
  const char* f =
      "(lam (x lock)"
      "  (app (app (lam (l1 lock) (lam (l2 lock)"
      "    (seq (app (prim acquire) l1) (app (prim acquire) l2)))) x) x))";
  auto multi = check_program(fq(), f);
  c.require(multi.ok(), "multiset bundle accepts f x x");
  if (multi.ok()) {
    const auto* pi = std::get_if<TPi>(&multi.result->type->node);
    auto inst = fq().family->instantiate({"x"});
    auto latent = pi ? nf_ground(normalize(pi->latent), inst) : std::nullopt;
    c.require(latent && inst->render(*latent) == "{}=>{x^2}⊗R",
              "multiset latent keeps both claims");
  }
  auto setv = check_program(fq_params_set_variant(), f);
  c.require(!setv.ok(), "set-variant bundle rejects f x x");
  c.finish();
}

TEST_CASE("criterion 8: the displayed sample judgment") {
  Criterion c{8, "the lock-protected read lambda types at the displayed type and effect"};
  const char* src =
      "(lam (x lock)"
      "  (lam (r ((ref (singleton x)) bool))"
      "    (seq (app (prim acquire) x)"
      "         (let (y (app (tyapp (app (prim read_sync) x) bool) r))"
      "              (seq (app (prim release) x) y)))))";
  auto out = check_program(fq(), src);
  c.require(out.ok(), "sample types");
  if (out.ok()) {
    auto expected = parse_type_text(
        "(pi (x lock) \"eff{{}=>{}⊗B}\" (pi (r ((ref (singleton x)) bool)) \"eff{{}=>{}⊗A}\" "
        "bool))",
        fq());
    c.require(type_equal(fq(), out.result->type, expected), "type matches the displayed one");
    auto inst = fq().family->instantiate({});
    auto ground = nf_ground(out.result->effect_nf, inst);
    c.require(ground && inst->render(*ground) == "{}=>{}⊗B", "effect is (∅,∅)⊗B");
  }
  c.finish();
}

namespace {

struct CorpusEntry {
  const char* file;
  RunResult::Kind expected;
};

const CorpusEntry kCorpus[] = {
    {"01_true.eqc", RunResult::Kind::Value},
    {"02_lambda_value.eqc", RunResult::Kind::Value},
    {"03_identity_app.eqc", RunResult::Kind::Value},
    {"04_new_lock.eqc", RunResult::Kind::Value},
    {"05_acquire_release.eqc", RunResult::Kind::Value},
    {"06_double_acquire.eqc", RunResult::Kind::Stuck},
    {"07_hand_over_hand.eqc", RunResult::Kind::Value},
    {"08_protected_read.eqc", RunResult::Kind::Value},
    {"09_protected_write.eqc", RunResult::Kind::Value},
    {"10_racy_read.eqc", RunResult::Kind::Value},
    {"11_racy_write.eqc", RunResult::Kind::Value},
    {"12_if_balanced_branches.eqc", RunResult::Kind::Value},
    {"13_if_two_locks.eqc", RunResult::Kind::Value},
    {"14_while_true.eqc", RunResult::Kind::Diverged},
    {"15_while_balanced_body.eqc", RunResult::Kind::Diverged},
    {"16_while_false.eqc", RunResult::Kind::Value},
    {"17_poly_identity.eqc", RunResult::Kind::Value},
    {"18_poly_on_lock.eqc", RunResult::Kind::Value},
    {"19_effect_poly.eqc", RunResult::Kind::Value},
    {"20_dependent_app.eqc", RunResult::Kind::Value},
    {"21_singleton_ref_arg.eqc", RunResult::Kind::Value},
    {"22_req_atomic.eqc", RunResult::Kind::Value},
    {"23_wraplock.eqc", RunResult::Kind::Value},
    {"24_nested_if.eqc", RunResult::Kind::Value},
    {"25_bool_not.eqc", RunResult::Kind::Value},
    {"26_while_racy_cond.eqc", RunResult::Kind::Diverged},
    {"27_shadowing.eqc", RunResult::Kind::Value},
    {"28_unit_chain.eqc", RunResult::Kind::Value},
    {"29_partial_app_value.eqc", RunResult::Kind::Value},
    {"30_partial_tyapp.eqc", RunResult::Kind::Value},
    {"31_write_then_read.eqc", RunResult::Kind::Value},
    {"32_two_locks_interleaved.eqc", RunResult::Kind::Value},
    {"33_if_mixed_atomicity.eqc", RunResult::Kind::Value},
    {"34_curried_locks.eqc", RunResult::Kind::Stuck},
    {"35_alloc_lambda_payload.eqc", RunResult::Kind::Value},
    {"36_seq_discard_value.eqc", RunResult::Kind::Value},
};

}  // namespace

TEST_CASE("criterion 9: preservation harness over the typed corpus") {
  Criterion c{9, "every step of every corpus program satisfies the preservation inequality"};
  const std::filesystem::path dir = EQ_CORPUS_DIR;
  c.require(std::size(kCorpus) >= 30, "corpus has at least 30 programs");
  for (const auto& entry : kCorpus) {
    std::string src = slurp(dir / entry.file);
    HarnessReport report = preservation_harness(fq(), std::string_view(src), 100000);
    c.require(report.program_typed, std::string(entry.file) + " types");
    c.require(report.ok, std::string(entry.file) + ": " +
                             (report.violation ? report.violation->what : "harness"));
  }
  c.finish();
}

TEST_CASE("criterion 10: progress audit over the typed corpus") {
  Criterion c{10, "no runtime type errors; stuck states only at undefined primitives"};
  const std::filesystem::path dir = EQ_CORPUS_DIR;
  for (const auto& entry : kCorpus) {
    std::string src = slurp(dir / entry.file);
    auto out = check_program(fq(), src);
    c.require(out.ok(), std::string(entry.file) + " types");
    if (!out.ok()) continue;
    RunResult r = run(fq(), out.term, 100000);
    c.require(r.kind != RunResult::Kind::TypeError,
              std::string(entry.file) + " reached a runtime type error");
    c.require(r.kind == entry.expected,
              std::string(entry.file) + " outcome differs from the recorded expectation");
  }
  c.finish();
}

namespace {

enum class CatExpect { Agree, RejectBoth, ExpectedDivergence };

struct CatEntry {
  const char* file;
  CatExpect expected;
};

const CatEntry kCatCorpus[] = {
    {"c01_const.cat", CatExpect::Agree},
    {"c02_sync_read.cat", CatExpect::Agree},
    {"c03_racy_read.cat", CatExpect::Agree},
    {"c04_sync_assign.cat", CatExpect::Agree},
    {"c05_racy_assign.cat", CatExpect::Agree},
    {"c06_let_chain.cat", CatExpect::Agree},
    {"c07_if.cat", CatExpect::Agree},
    {"c08_while_sync.cat", CatExpect::Agree},
    {"c09_while_racy.cat", CatExpect::Agree},
    {"c10_acquire_release.cat", CatExpect::Agree},
    {"c11_locked_read.cat", CatExpect::Agree},
    {"c12_invoke.cat", CatExpect::Agree},
    {"c13_fork.cat", CatExpect::Agree},
    {"c14_atomic_ok.cat", CatExpect::Agree},
    {"c15_atomic_two_racy.cat", CatExpect::RejectBoth},
    {"c16_prim_chain.cat", CatExpect::Agree},
    {"c17_invoke_join.cat", CatExpect::Agree},
    {"c18_atomic_locked_section.cat", CatExpect::Agree},
    {"c19_acquire_loop.cat", CatExpect::ExpectedDivergence},
    {"c20_hand_over_hand.cat", CatExpect::Agree},
    {"c21_fork_racy.cat", CatExpect::Agree},
    {"c22_while_atomic_section.cat", CatExpect::Agree},
    {"c23_alloc.cat", CatExpect::Agree},
};

}  // namespace

TEST_CASE("criterion 11: CAT differential corpus") {
  Criterion c{11, "oracle and core typing agree; divergences confined to the expected list"};
  const std::filesystem::path dir = std::filesystem::path(EQ_CORPUS_DIR) / "cat";
  c.require(std::size(kCatCorpus) >= 20, "corpus has at least 20 programs");
  for (const auto& entry : kCatCorpus) {
    std::string src = slurp(dir / entry.file);
    DifferentialReport report = unembed_check(fq(), std::string_view(src));
    switch (entry.expected) {
      case CatExpect::Agree:
        c.require(report.core_accepts && report.cat_accepts && report.agree,
                  std::string(entry.file) + ": " + report.detail + report.core_error +
                      report.cat_error);
        break;
      case CatExpect::RejectBoth:
        c.require(!report.core_accepts && !report.cat_accepts && report.agree,
                  std::string(entry.file) + " should be rejected by both sides");
        break;
      case CatExpect::ExpectedDivergence:
        c.require(!report.core_accepts && report.cat_accepts && report.expected_divergence,
                  std::string(entry.file) + " should be the expected lock-discipline divergence");
        break;
    }
  }
  c.finish();
}

TEST_CASE("criterion 12: effectoid bridge") {
  Criterion c{12, "effectoid laws hold exhaustively; round trips reconstruct isomorphically"};
  auto a = atomicity_quantale();
  auto laws_a = check_effectoid_laws(quantale_to_effectoid(a));
  c.require(laws_a.all_pass(), "atomicity effectoid laws");
  auto rt_a = effectoid_round_trip(a);
  c.require(rt_a.isomorphic, "atomicity round trip: " + rt_a.detail);

  auto p = powerset_quantale({"IOExc", "ArgExc"});
  auto laws_p = check_effectoid_laws(quantale_to_effectoid(p));
  c.require(laws_p.all_pass(), "powerset effectoid laws");
  // the lift's top is a meaningful effect, so the reconstruction runs on the
  // synthetic-Err extension
  auto rt_p = effectoid_round_trip(with_synthetic_err(p));
  c.require(rt_p.isomorphic, "powerset round trip (synthetic Err): " + rt_p.detail);
  c.finish();
}

TEST_CASE("criterion 13: normalization soundness fuzz") {
  Criterion c{13, "10000 random ground effect expressions per instance: eval = normalize"};
  auto fuzz = [&](const std::string& label, const QuantalePtr& q, const std::vector<Elem>& elems,
                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 10000; ++i) {
      EffExpr e = random_expr(rng, elems, 5);
      Elem direct = eval_ground(e);
      auto g = nf_ground(normalize(e), q);
      if (!g || !q->eq(direct, *g)) {
        c.require(false, label + " diverged at case " + std::to_string(i));
        return;
      }
    }
  };
  fuzz("atomicity", atomicity_quantale(), *atomicity_quantale()->enumerate(), 0xacce97);
  auto p = powerset_quantale({"u", "v"});
  fuzz("powerset", p, *p->enumerate(), 0xacce97 + 1);
  const NameSet locks{"x", "y"};
  auto l = lockset_quantale(locks);
  fuzz("lockset", l, enumerate_lock_effects(l, locks, 2), 0xacce97 + 2);
  auto prod = product(lockset_quantale({"x"}), atomicity_quantale());
  fuzz("product", prod, product_sample(prod, lockset_quantale({"x"}), 1), 0xacce97 + 3);
  c.finish();
}
