#include "eq/interp.hpp"

namespace eq {

namespace {

std::string identity_name(const std::string& n) { return n; }

QuantalePtr instance_for(const LanguageParams& params, const StateTypeEnv& sigma) {
  return params.family->instantiate(index_scope(params, TypeEnv{}, &sigma));
}

Elem transport_to(const LanguageParams& params, const Elem& e, const QuantalePtr& target) {
  if (e.owner->key() == target->key()) return e;
  return params.family->transport(e, target, identity_name);
}

/// Result of attempting to reduce one subterm.
struct Reduced {
  TermPtr term;
  Elem effect;
  StatePtr state;
  std::vector<SigmaEntry> sigma_ext;
  std::string rule;
};

using TryStep = std::variant<Reduced, IsValue, StuckPrimitive, RuntimeTypeError>;

struct Stepper {
  const LanguageParams& params;
  const StateTypeEnv& sigma;

  Elem unit_eff(const StatePtr&) const {
    return instance_for(params, sigma)->unit();
  }

  TryStep descend(const TermPtr& t, const StatePtr& st) const {
    const TermAst& term = *t;
    if (const auto* app = std::get_if<TmApp>(&term.node)) {
      TryStep f = try_reduce(app->fn, st);
      if (auto* r = std::get_if<Reduced>(&f)) {
        r->term = tm_app(r->term, app->arg);
        return f;
      }
      if (!std::holds_alternative<IsValue>(f)) return f;
      TryStep a = try_reduce(app->arg, st);
      if (auto* r = std::get_if<Reduced>(&a)) {
        r->term = tm_app(app->fn, r->term);
        return a;
      }
      if (!std::holds_alternative<IsValue>(a)) return a;
      // redex
      if (const auto* lam = std::get_if<TmLam>(&app->fn->node)) {
        return Reduced{subst_term(lam->body, app->arg, lam->var, params.family),
                       unit_eff(st), st, {}, "E-App"};
      }
      return reduce_spine(t, st);
    }
    if (const auto* tapp = std::get_if<TmTyApp>(&term.node)) {
      TryStep f = try_reduce(tapp->fn, st);
      if (auto* r = std::get_if<Reduced>(&f)) {
        r->term = tm_tyapp(r->term, tapp->arg);
        return f;
      }
      if (!std::holds_alternative<IsValue>(f)) return f;
      if (const auto* tylam = std::get_if<TmTyLam>(&tapp->fn->node)) {
        return Reduced{subst_type_in_term(tylam->body, tapp->arg, tylam->var, params.family),
                       unit_eff(st), st, {}, "E-TApp"};
      }
      return reduce_spine(t, st);
    }
    if (const auto* ite = std::get_if<TmIf>(&term.node)) {
      TryStep c = try_reduce(ite->cond, st);
      if (auto* r = std::get_if<Reduced>(&c)) {
        r->term = tm_if(r->term, ite->then_branch, ite->else_branch);
        return c;
      }
      if (!std::holds_alternative<IsValue>(c)) return c;
      if (std::holds_alternative<TmTrue>(ite->cond->node))
        return Reduced{ite->then_branch, unit_eff(st), st, {}, "E-IfTrue"};
      if (std::holds_alternative<TmFalse>(ite->cond->node))
        return Reduced{ite->else_branch, unit_eff(st), st, {}, "E-IfFalse"};
      return RuntimeTypeError{"if-condition evaluated to a non-boolean value: " +
                              render_term(*ite->cond)};
    }
    if (const auto* wh = std::get_if<TmWhile>(&term.node)) {
      // while c b -> if c (b; while c b) ()
      TermPtr again = tm_while(wh->cond, wh->body);
      TermPtr expanded = tm_if(wh->cond, tm_seq(wh->body, again), tm_unit());
      return Reduced{expanded, unit_eff(st), st, {}, "E-While"};
    }
    if (std::holds_alternative<TmVar>(term.node))
      return RuntimeTypeError{"free variable '" + render_term(term) + "' reached at runtime"};
    return RuntimeTypeError{"stuck non-value term: " + render_term(term)};
  }

  TryStep try_reduce(const TermPtr& t, const StatePtr& st) const {
    if (is_value(*t, params)) return IsValue{};
    return descend(t, st);
  }

  TryStep reduce_spine(const TermPtr& t, const StatePtr& st) const {
    auto spine = as_prim_spine(t);
    if (!spine)
      return RuntimeTypeError{"application of a non-function value: " + render_term(*t)};
    int arity = delta_arity(params, spine->prim);
    if (arity == 0 && !params.delta.count(spine->prim))
      return RuntimeTypeError{"application of the non-applicative runtime value '" + spine->prim +
                              "'"};
    if (int(spine->args.size()) < arity) return IsValue{};
    if (int(spine->args.size()) > arity)
      return RuntimeTypeError{"over-applied primitive '" + spine->prim + "'"};
    auto result = params.prim_semantics(params, *spine, st);
    if (!result)
      return StuckPrimitive{spine->prim,
                            "primitive semantics undefined for " + render_term(*t)};
    return Reduced{result->value, result->effect, result->state, result->sigma_ext, "E-Prim"};
  }
};

}  // namespace

MachineState initial_machine(const LanguageParams& params, TermPtr program) {
  StateTypeEnv sigma = params.delta_sigma();
  Elem unit = instance_for(params, sigma)->unit();
  return MachineState{params.initial_state, std::move(program), std::move(sigma), std::move(unit)};
}

StepOutcome step(const LanguageParams& params, const MachineState& st) {
  Stepper stepper{params, st.sigma};
  TryStep out = stepper.try_reduce(st.term, st.state);
  if (std::holds_alternative<IsValue>(out)) return IsValue{};
  if (auto* stuck = std::get_if<StuckPrimitive>(&out)) return *stuck;
  if (auto* err = std::get_if<RuntimeTypeError>(&out)) return *err;
  Reduced& r = std::get<Reduced>(out);
  MachineState next;
  next.state = r.state;
  next.term = r.term;
  next.sigma = st.sigma;
  for (auto& e : r.sigma_ext) next.sigma = next.sigma.extended(e.name, e.type);
  QuantalePtr inst = instance_for(params, next.sigma);
  Elem eff = transport_to(params, r.effect, inst);
  next.accumulated = inst->seq(transport_to(params, st.accumulated, inst), eff);
  return Stepped{std::move(next), std::move(eff), std::move(r.rule)};
}

RunResult run(const LanguageParams& params, TermPtr program, std::uint64_t fuel,
              const TraceFn& trace) {
  MachineState st = initial_machine(params, std::move(program));
  for (std::uint64_t i = 0; i < fuel; ++i) {
    StepOutcome out = step(params, st);
    if (std::holds_alternative<IsValue>(out))
      return RunResult{RunResult::Kind::Value, std::move(st), i, ""};
    if (auto* stuck = std::get_if<StuckPrimitive>(&out))
      return RunResult{RunResult::Kind::Stuck, std::move(st), i, stuck->detail};
    if (auto* err = std::get_if<RuntimeTypeError>(&out))
      return RunResult{RunResult::Kind::TypeError, std::move(st), i, err->detail};
    Stepped& s = std::get<Stepped>(out);
    if (trace) trace(i, s.rule, s.step_effect, s.next);
    st = std::move(s.next);
  }
  return RunResult{RunResult::Kind::Diverged, std::move(st), fuel, "fuel exhausted"};
}

namespace {

std::optional<std::string> check_invariants(const LanguageParams& params, const MachineState& st,
                                            const Elem& static_effect) {
  QuantalePtr inst = instance_for(params, st.sigma);
  std::optional<TypingResult> residual;
  try {
    residual = type_of(params, TypeEnv{}, st.term, &st.sigma);
  } catch (const CheckError& e) {
    return "term no longer types under the runtime judgment: " + e.diagnostic.message;
  }
  auto res = nf_ground(residual->effect_nf, inst);
  if (!res) return "residual effect is not ground: " + render_effect(residual->effect);
  Elem acc = transport_to(params, st.accumulated, inst);
  Elem stat = transport_to(params, static_effect, inst);
  Elem combined = inst->seq(acc, transport_to(params, *res, inst));
  if (!inst->leq(combined, stat))
    return "accumulated ; residual = " + inst->render(combined) +
           " is not below the static effect " + inst->render(stat);
  if (params.state_typing) {
    std::string why;
    if (!params.state_typing(params, st.state, st.sigma, &why))
      return "state no longer well-typed: " + why;
  }
  return std::nullopt;
}

}  // namespace

HarnessReport preservation_harness(const LanguageParams& params, TermPtr program,
                                   std::uint64_t fuel) {
  HarnessReport report;
  std::optional<TypingResult> static_r;
  try {
    static_r = type_of(params, TypeEnv{}, program, nullptr);
  } catch (const CheckError& e) {
    report.diagnostics.push_back(e.diagnostic);
    return report;
  }
  report.program_typed = true;
  report.static_effect = render_effect(static_r->effect);

  MachineState st = initial_machine(params, program);
  QuantalePtr source_inst = instance_for(params, st.sigma);
  auto static_ground = nf_ground(static_r->effect_nf, source_inst);
  if (!static_ground) {
    report.violation = {0, "static effect of a closed program is not ground"};
    return report;
  }
  Elem static_eff = transport_to(params, *static_ground, source_inst);

  if (auto why = check_invariants(params, st, static_eff)) {
    report.violation = {0, *why};
    return report;
  }
  for (std::uint64_t i = 0; i < fuel; ++i) {
    StepOutcome out = step(params, st);
    if (std::holds_alternative<IsValue>(out)) {
      report.outcome = "value";
      break;
    }
    if (auto* stuck = std::get_if<StuckPrimitive>(&out)) {
      report.outcome = "stuck(" + stuck->prim + ")";
      break;
    }
    if (auto* err = std::get_if<RuntimeTypeError>(&out)) {
      report.outcome = "type-error";
      report.violation = {i, "progress violated: " + err->detail};
      report.steps = i;
      report.final_accumulated = st.accumulated.owner->render(st.accumulated);
      return report;
    }
    Stepped& s = std::get<Stepped>(out);
    StateTypeEnv prev_sigma = st.sigma;
    st = std::move(s.next);
    ++report.steps;
    if (!StateTypeEnv::leq(prev_sigma, st.sigma)) {
      report.violation = {i, "state type environment did not grow monotonically"};
      return report;
    }
    if (auto why = check_invariants(params, st, static_eff)) {
      report.violation = {i + 1, *why};
      return report;
    }
  }
  if (report.outcome.empty()) report.outcome = "diverged";
  report.final_accumulated = st.accumulated.owner->render(st.accumulated);
  report.ok = !report.violation.has_value();
  return report;
}

HarnessReport preservation_harness(const LanguageParams& params, std::string_view text,
                                   std::uint64_t fuel) {
  CheckOutcome checked = check_program(params, text);
  if (!checked.ok()) {
    HarnessReport report;
    report.diagnostics = checked.diagnostics;
    return report;
  }
  return preservation_harness(params, checked.term, fuel);
}

}  // namespace eq
