#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eq/interp.hpp"
#include "eq/instances.hpp"
#include "eq/locking.hpp"

using namespace eq;

namespace {

LanguageParams& fq() {
  static LanguageParams params = fq_params();
  return params;
}

RunResult run_src(const LanguageParams& params, const char* src, std::uint64_t fuel = 100000) {
  auto out = check_program(params, src);
  for (const auto& d : out.diagnostics) {
    INFO(d.rule, ": ", d.message);
  }
  REQUIRE(out.ok());
  return run(params, out.term, fuel);
}

std::string lock_component(const Elem& e) {
  const PairElem& p = pair_of(e);
  REQUIRE(p.first != nullptr);
  return p.first->owner->render(*p.first);
}

}  // namespace

TEST_CASE("beta reduction carries the unit effect") {
  auto& params = fq();
  auto term = parse_program("(app (lam (b bool) b) true)", params);
  MachineState st = initial_machine(params, term);
  StepOutcome out = step(params, st);
  auto* s = std::get_if<Stepped>(&out);
  REQUIRE(s != nullptr);
  CHECK(s->rule == "E-App");
  CHECK(s->step_effect.owner->is_unit(s->step_effect));
  CHECK(std::holds_alternative<TmTrue>(s->next.term->node));
}

TEST_CASE("while expands to its conditional unrolling") {
  auto& params = fq();
  auto term = parse_program("(while true ())", params);
  MachineState st = initial_machine(params, term);
  StepOutcome out = step(params, st);
  auto* s = std::get_if<Stepped>(&out);
  REQUIRE(s != nullptr);
  CHECK(s->rule == "E-While");
  CHECK(std::holds_alternative<TmIf>(s->next.term->node));
}

TEST_CASE("acquire/release on a fresh lock runs to a value with balanced claims") {
  auto r = run_src(fq(),
                   "(let (l (app (prim new_lock) ()))"
                   "  (seq (app (prim acquire) l) (app (prim release) l)))");
  CHECK(r.kind == RunResult::Kind::Value);
  CHECK(lock_component(r.final_state.accumulated) == "{}=>{}");
  // the new lock is recorded in the state type environment
  CHECK(r.final_state.sigma.contains("lk0"));
}

TEST_CASE("acquire effect is the substituted delta effect") {
  auto& params = fq();
  auto out = check_program(params, "(let (l (app (prim new_lock) ())) (app (prim acquire) l))");
  // unbalanced on a let-bound lock: latent would mention l, so this is the
  // dependent-application rejection, not an interpreter case
  CHECK_FALSE(out.ok());

  // drive the spine manually instead: new_lock first, then acquire lk0
  auto prog = parse_program("(app (prim new_lock) ())", params);
  RunResult r = run(params, prog);
  REQUIRE(r.kind == RunResult::Kind::Value);
  MachineState st = r.final_state;
  st.term = parse_program("(app (prim acquire) lk0)", params);
  StepOutcome so = step(params, st);
  auto* s = std::get_if<Stepped>(&so);
  REQUIRE(s != nullptr);
  CHECK(s->rule == "E-Prim");
  CHECK(s->step_effect.owner->render(s->step_effect) == "{}=>{lk0^1}⊗R");
}

TEST_CASE("nonterminating loop diverges with the unit effect accumulated") {
  auto r = run_src(fq(), "(while true ())", 1000);
  CHECK(r.kind == RunResult::Kind::Diverged);
  CHECK(r.final_state.accumulated.owner->is_unit(r.final_state.accumulated));
}

TEST_CASE("double acquire: typed, but stuck under the boolean lock model") {
  // transient recursive claim, balanced overall, so the program types
  const char* src =
      "(let (l (app (prim new_lock) ()))"
      "  (seq (app (prim acquire) l)"
      "       (seq (app (prim acquire) l)"
      "            (seq (app (prim release) l) (app (prim release) l)))))";
  auto r = run_src(fq(), src);
  CHECK(r.kind == RunResult::Kind::Stuck);
  CHECK(r.detail.find("acquire") != std::string::npos);

  // under the counting model the same program runs to completion
  LanguageParams counting = fq_params(LockModel::Counting);
  auto r2 = run_src(counting, src);
  CHECK(r2.kind == RunResult::Kind::Value);
  CHECK(lock_component(r2.final_state.accumulated) == "{}=>{}");
}

TEST_CASE("conditional selects a branch with the unit step effect") {
  auto r = run_src(fq(), "(if false (app (prim new_lock) ()) (app (prim new_lock) ()))");
  CHECK(r.kind == RunResult::Kind::Value);
  CHECK(std::holds_alternative<TmPrim>(r.final_state.term->node));
}

TEST_CASE("heap allocation, read and write round trip") {
  const char* src =
      "(let (l (app (prim new_lock) ()))"
      "  (let (rf (app (tyapp (app (prim alloc) l) bool) true))"
      "    (seq (app (tyapp (app (prim write_racy) l) bool) rf false)"
      "         (app (tyapp (app (prim read_racy) l) bool) rf))))";
  auto r = run_src(fq(), src);
  CHECK(r.kind == RunResult::Kind::Value);
  CHECK(std::holds_alternative<TmFalse>(r.final_state.term->node));
  // both racy accesses contribute atomic steps: accumulated atomicity is TOP
  CHECK(atomicity_of(r.final_state.accumulated) == Mover::TopFQ);
}

TEST_CASE("lock-protected read accumulates an atomic effect") {
  const char* src =
      "(let (l (app (prim new_lock) ()))"
      "  (let (rf (app (tyapp (app (prim alloc) l) bool) true))"
      "    (app (app"
      "      (lam (x lock)"
      "        (lam (r ((ref (singleton x)) bool))"
      "          (seq (app (prim acquire) x)"
      "               (let (y (app (tyapp (app (prim read_sync) x) bool) r))"
      "                    (seq (app (prim release) x) y)))))"
      "      l) rf)))";
  auto r = run_src(fq(), src);
  CHECK(r.kind == RunResult::Kind::Value);
  CHECK(std::holds_alternative<TmTrue>(r.final_state.term->node));
  CHECK(lock_component(r.final_state.accumulated) == "{}=>{}");
  CHECK(atomicity_of(r.final_state.accumulated) == Mover::A);
}

TEST_CASE("preservation harness passes on the protected-read pipeline") {
  const char* src =
      "(let (l (app (prim new_lock) ()))"
      "  (let (rf (app (tyapp (app (prim alloc) l) bool) true))"
      "    (app (app"
      "      (lam (x lock)"
      "        (lam (r ((ref (singleton x)) bool))"
      "          (seq (app (prim acquire) x)"
      "               (let (y (app (tyapp (app (prim read_sync) x) bool) r))"
      "                    (seq (app (prim release) x) y)))))"
      "      l) rf)))";
  HarnessReport report = preservation_harness(fq(), std::string_view(src));
  std::string violation_msg = report.violation ? report.violation->what : "";
  INFO(violation_msg);
  CHECK(report.program_typed);
  CHECK(report.ok);
  CHECK(report.outcome == "value");
  CHECK(report.steps > 5);
}

TEST_CASE("harness: values pass trivially") {
  HarnessReport report = preservation_harness(fq(), std::string_view("(lam (b bool) b)"));
  CHECK(report.ok);
  CHECK(report.steps == 0);
  CHECK(report.outcome == "value");
}

TEST_CASE("harness flags fault-injected dynamic effects") {
  // statics unchanged, but the dynamic effect of release is replaced by a
  // second acquire claim, so accumulated ; residual overshoots the static
  // effect and the harness must notice
  LanguageParams broken = fq();
  PrimSemantics honest = broken.prim_semantics;
  FamilyPtr family = broken.family;
  broken.prim_semantics = [honest, family](const LanguageParams& p, const PrimSpine& spine,
                                           const StatePtr& st) -> std::optional<PrimResult> {
    auto r = honest(p, spine, st);
    if (r && spine.prim == "release") {
      const auto* nm = std::get_if<TmPrim>(&spine.args[0].term()->node);
      auto inst = family->instantiate({nm->name});
      Elem lock_part = lock_eff(product_lhs(inst), {}, Multiset::of({nm->name}));
      r->effect = make_product_elem(inst, lock_part, atom(Mover::L));
    }
    return r;
  };
  const char* src =
      "(let (l (app (prim new_lock) ()))"
      "  (seq (app (prim acquire) l) (app (prim release) l)))";
  HarnessReport report = preservation_harness(broken, std::string_view(src));
  CHECK(report.program_typed);
  CHECK_FALSE(report.ok);
  REQUIRE(report.violation.has_value());
  CHECK(report.violation->what.find("not below the static effect") != std::string::npos);
}

TEST_CASE("progress: typed programs only stop at values or undefined primitives") {
  const char* programs[] = {
      "(if true () ())",
      "(let (l (app (prim new_lock) ())) (seq (app (prim acquire) l) (app (prim release) l)))",
      "(app (lam (b bool) (if b () ())) false)",
      "(app (prim acquire))",
  };
  for (const char* src : programs) {
    INFO(src);
    auto r = run_src(fq(), src, 10000);
    CHECK(r.kind != RunResult::Kind::TypeError);
  }
}

TEST_CASE("trace callback sees every step") {
  auto& params = fq();
  auto out = check_program(params, "(seq () (seq () ()))");
  REQUIRE(out.ok());
  std::vector<std::string> rules;
  run(params, out.term, 100,
      [&](std::uint64_t, const std::string& rule, const Elem&, const MachineState&) {
        rules.push_back(rule);
      });
  CHECK(rules.size() == 2);
  CHECK(rules[0] == "E-App");
}

TEST_CASE("stepping is deterministic") {
  auto& params = fq();
  auto out = check_program(params,
                           "(let (l (app (prim new_lock) ()))"
                           "  (seq (app (prim acquire) l) (app (prim release) l)))");
  REQUIRE(out.ok());
  auto collect = [&]() {
    std::vector<std::string> lines;
    run(params, out.term, 1000,
        [&](std::uint64_t i, const std::string& rule, const Elem& eff, const MachineState& st) {
          lines.push_back(std::to_string(i) + rule + eff.owner->render(eff) +
                          render_term(*st.term));
        });
    return lines;
  };
  CHECK(collect() == collect());
}

TEST_CASE("primitive preservation audit across all nine clauses") {
  auto& params = fq();
  MachineState st = initial_machine(params, tm_unit());

  // drive one spine at a time, checking after each that the produced value
  // re-types at the substituted result type with the unit effect and that
  // the state type environment only grew
  auto fire = [&](const char* src, const char* expect_type) {
    INFO(src);
    StateTypeEnv before = st.sigma;
    st.term = parse_program(src, params);
    StepOutcome out = step(params, st);
    auto* s = std::get_if<Stepped>(&out);
    REQUIRE(s != nullptr);
    REQUIRE(s->rule == "E-Prim");
    st = s->next;
    CHECK(StateTypeEnv::leq(before, st.sigma));
    std::string why;
    CHECK(params.state_typing(params, st.state, st.sigma, &why));
    INFO(why);
    TypingResult vr = type_of(params, TypeEnv{}, st.term, &st.sigma);
    CHECK(nf_is_unit(vr.effect_nf));
    CHECK(type_equal(params, vr.type, parse_type_text(expect_type, params)));
    return st.term;
  };

  fire("(app (prim new_lock) ())", "lock");                       // lk0
  fire("(app (prim acquire) (prim lk0))", "unit");
  fire("(app (prim release) (prim lk0))", "unit");  // held after acquire
  fire("(app (tyapp (app (prim alloc) (prim lk0)) bool) true)",   // r0
       "((ref (singleton (prim lk0))) bool)");
  auto rd = fire("(app (tyapp (app (prim read_sync) (prim lk0)) bool) (prim r0))", "bool");
  CHECK(std::holds_alternative<TmTrue>(rd->node));
  fire("(app (tyapp (app (prim read_racy) (prim lk0)) bool) (prim r0))", "bool");
  fire("(app (app (tyapp (app (prim write_sync) (prim lk0)) bool) (prim r0)) false)", "bool");
  fire("(app (app (tyapp (app (prim write_racy) (prim lk0)) bool) (prim r0)) true)", "bool");
  fire("(app (prim req_atomic) (lam (b bool) :eff \"eff{A}\" ()))", "unit");
}

TEST_CASE("release on an unheld lock is an undefined primitive application") {
  auto& params = fq();
  RunResult setup = run(params, parse_program("(app (prim new_lock) ())", params));
  REQUIRE(setup.kind == RunResult::Kind::Value);
  MachineState st = setup.final_state;
  st.term = parse_program("(app (prim release) lk0)", params);
  StepOutcome out = step(params, st);
  CHECK(std::holds_alternative<StuckPrimitive>(out));
}
