#include "eq/locking.hpp"

#include <sstream>

namespace eq {

std::string LockHeapState::describe() const {
  std::ostringstream out;
  out << "locks{";
  bool first = true;
  for (const auto& [name, held] : locks) {
    if (!first) out << ",";
    out << name << "=" << held;
    first = false;
  }
  out << "} heap{";
  first = true;
  for (const auto& [name, _] : heap) {
    if (!first) out << ",";
    out << name;
    first = false;
  }
  out << "}";
  return out.str();
}

namespace {

struct UnitState final : AbstractState {
  std::string describe() const override { return "()"; }
};

const LockHeapState& lock_state(const StatePtr& s) {
  return dynamic_cast<const LockHeapState&>(*s);
}

const std::string* arg_name(const SpineArg& a) {
  if (!a.is_term()) return nullptr;
  if (const auto* p = std::get_if<TmPrim>(&a.term()->node)) return &p->name;
  if (const auto* v = std::get_if<TmVar>(&a.term()->node)) return &v->name;
  return nullptr;
}

/// Final latent effect of δ(p) under the spine's argument substitutions,
/// evaluated to a ground element. This is both the dynamic effect of E-Prim
/// and, by construction, the effect the type system ascribes to the call.
Elem final_delta_effect(const LanguageParams& params, const PrimSpine& spine) {
  auto it = params.delta.find(spine.prim);
  if (it == params.delta.end())
    throw UsageError("no delta entry for primitive '" + spine.prim + "'");
  const TypeAst* t = it->second.get();
  const EffExpr* last_latent = nullptr;
  std::vector<std::pair<std::string, SpineArg>> binds;
  for (const auto& arg : spine.args) {
    if (const auto* pi = std::get_if<TPi>(&t->node)) {
      last_latent = &pi->latent;
      binds.push_back({pi->var, arg});
      t = pi->result.get();
    } else if (const auto* fa = std::get_if<TForall>(&t->node)) {
      last_latent = &fa->latent;
      binds.push_back({fa->var, arg});
      t = fa->body.get();
    } else {
      throw UsageError("over-applied primitive '" + spine.prim + "'");
    }
  }
  if (!last_latent) throw UsageError("primitive '" + spine.prim + "' applied to no arguments");
  EffExpr latent = *last_latent;
  for (const auto& [var, arg] : binds) {
    if (arg.is_term())
      latent = subst_term_in_effect(latent, arg.term(), var, params.family);
    else
      latent = subst_type_in_effect(latent, arg.type(), var);
  }
  latent = rescope_effect(latent, *params.family, effect_names(latent));
  return eval_ground(latent);
}

TypePtr ref_type(const std::string& lock, const TypePtr& payload) {
  return ty_app(ty_app(ty_name("ref"), ty_singleton(tm_prim(lock))), payload);
}

std::optional<PrimResult> fq_semantics(const LanguageParams& params, const PrimSpine& spine,
                                       const StatePtr& state, LockModel model) {
  const auto& st = lock_state(state);
  auto next = std::make_shared<LockHeapState>(st);
  auto done = [&](TermPtr value, std::vector<SigmaEntry> ext = {}) -> std::optional<PrimResult> {
    return PrimResult{std::move(value), final_delta_effect(params, spine), next, std::move(ext)};
  };

  if (spine.prim == "new_lock") {
    std::string l = "lk" + std::to_string(next->next_lock++);
    next->locks[l] = 0;
    return done(tm_prim(l), {{l, ty_name("lock")}});
  }
  if (spine.prim == "acquire" || spine.prim == "release") {
    const std::string* l = arg_name(spine.args.at(0));
    if (!l) return std::nullopt;
    auto it = next->locks.find(*l);
    if (it == next->locks.end()) return std::nullopt;
    if (spine.prim == "acquire") {
      if (model == LockModel::Boolean && it->second != 0) return std::nullopt;
      ++it->second;
    } else {
      if (model == LockModel::Boolean ? it->second != 1 : it->second < 1) return std::nullopt;
      --it->second;
    }
    return done(tm_unit());
  }
  if (spine.prim == "alloc") {
    const std::string* l = arg_name(spine.args.at(0));
    if (!l || !next->locks.count(*l)) return std::nullopt;
    const TypePtr& payload_type = spine.args.at(1).type();
    std::string r = "r" + std::to_string(next->next_ref++);
    next->heap[r] = spine.args.at(2).term();
    return done(tm_prim(r), {{r, ref_type(*l, payload_type)}});
  }
  if (spine.prim == "read_sync" || spine.prim == "read_racy") {
    const std::string* r = arg_name(spine.args.at(2));
    if (!r) return std::nullopt;
    auto it = next->heap.find(*r);
    if (it == next->heap.end()) return std::nullopt;
    return done(it->second);
  }
  if (spine.prim == "write_sync" || spine.prim == "write_racy") {
    const std::string* r = arg_name(spine.args.at(2));
    if (!r || !next->heap.count(*r)) return std::nullopt;
    TermPtr v = spine.args.at(3).term();
    next->heap[*r] = v;
    return done(v);
  }
  if (spine.prim == "req_atomic") {
    return done(tm_unit());
  }
  return std::nullopt;
}

bool fq_state_typing(const LanguageParams& params, const StatePtr& state,
                     const StateTypeEnv& sigma, std::string* why) {
  const auto& st = lock_state(state);
  for (const auto& [l, _] : st.locks) {
    const TypePtr* t = sigma.lookup(l);
    if (!t || !std::holds_alternative<TName>((*t)->node) ||
        std::get<TName>((*t)->node).name != "lock") {
      if (why) *why = "lock '" + l + "' is not typed as lock in the state environment";
      return false;
    }
  }
  for (const auto& [r, v] : st.heap) {
    const TypePtr* declared = sigma.lookup(r);
    if (!declared) {
      if (why) *why = "location '" + r + "' missing from the state environment";
      return false;
    }
    // the declared type is (ref (singleton l) tau); the stored value must type
    // at tau with the unit effect
    const auto* outer = std::get_if<TApp>(&(*declared)->node);
    if (!outer) {
      if (why) *why = "location '" + r + "' has a non-ref state type";
      return false;
    }
    const TypePtr& payload = outer->arg;
    try {
      TypingResult vr = type_of(params, TypeEnv{}, v, &sigma);
      if (!type_equal(params, vr.type, payload)) {
        if (why)
          *why = "heap cell '" + r + "' stores " + render_type(*vr.type) +
                 " but is declared " + render_type(*payload);
        return false;
      }
      if (!nf_is_unit(vr.effect_nf)) {
        if (why) *why = "heap cell '" + r + "' stores a value with a non-unit effect";
        return false;
      }
    } catch (const CheckError& e) {
      if (why) *why = "heap cell '" + r + "' does not type: " + e.diagnostic.message;
      return false;
    }
  }
  return true;
}

LanguageParams make_fq(FamilyPtr lock_family, LockModel model) {
  LanguageParams params;
  params.family = product_family(std::move(lock_family), constant_family(atomicity_quantale()));
  params.type_families = {
      {"lock", Kind::star()},
      {"ref", Kind::arrow(Kind::star(), Kind::arrow(Kind::star(), Kind::star()))},
  };
  params.is_index_type = [](const TypeAst& t) {
    const auto* n = std::get_if<TName>(&t.node);
    return n && n->name == "lock";
  };
  auto d = [&](const char* text) { return parse_type_text(text, params); };
  params.delta["new_lock"] = d("(pi (u unit) \"eff{B}\" lock)");
  params.delta["acquire"] = d("(pi (x lock) \"eff{{}=>{x^1}⊗R}\" unit)");
  params.delta["release"] = d("(pi (x lock) \"eff{{x^1}=>{}⊗L}\" unit)");
  params.delta["alloc"] =
      d("(pi (x lock) \"eff{B}\" (forall a :: * \"eff{B}\" (pi (v a) \"eff{B}\" ((ref (singleton "
        "x)) a))))");
  params.delta["read_racy"] =
      d("(pi (x lock) \"eff{B}\" (forall a :: * \"eff{B}\" (pi (r ((ref (singleton x)) a)) "
        "\"eff{{}=>{}⊗A}\" a)))");
  params.delta["read_sync"] =
      d("(pi (x lock) \"eff{B}\" (forall a :: * \"eff{B}\" (pi (r ((ref (singleton x)) a)) "
        "\"eff{{x^1}=>{x^1}⊗B}\" a)))");
  params.delta["write_racy"] =
      d("(pi (x lock) \"eff{B}\" (forall a :: * \"eff{B}\" (pi (r ((ref (singleton x)) a)) "
        "\"eff{B}\" (pi (v a) \"eff{{}=>{}⊗A}\" a))))");
  params.delta["write_sync"] =
      d("(pi (x lock) \"eff{B}\" (forall a :: * \"eff{B}\" (pi (r ((ref (singleton x)) a)) "
        "\"eff{B}\" (pi (v a) \"eff{{x^1}=>{x^1}⊗B}\" a))))");
  params.delta["req_atomic"] = d("(pi (f (pi (b bool) \"eff{A}\" unit)) \"eff{B}\" unit)");
  params.prim_semantics = [model](const LanguageParams& p, const PrimSpine& spine,
                                  const StatePtr& state) {
    return fq_semantics(p, spine, state, model);
  };
  params.initial_state = std::make_shared<LockHeapState>();
  params.state_typing = fq_state_typing;
  return params;
}

}  // namespace

LanguageParams fq_params(LockModel model) { return make_fq(lockset_family(), model); }

LanguageParams fq_params_set_variant(LockModel model) {
  return make_fq(lockset_set_variant(), model);
}

LanguageParams pure_params(FamilyPtr family) {
  LanguageParams params;
  params.family = std::move(family);
  // lock-typed binders index the family's name set even without primitives,
  // so latent annotations can mention them
  params.type_families = {{"lock", Kind::star()}};
  params.is_index_type = [](const TypeAst& t) {
    const auto* n = std::get_if<TName>(&t.node);
    return n && n->name == "lock";
  };
  params.prim_semantics = [](const LanguageParams&, const PrimSpine&,
                             const StatePtr&) -> std::optional<PrimResult> {
    return std::nullopt;
  };
  params.initial_state = std::make_shared<UnitState>();
  params.state_typing = [](const LanguageParams&, const StatePtr&, const StateTypeEnv&,
                           std::string*) { return true; };
  return params;
}

Mover atomicity_of(const Elem& product_elem) {
  const PairElem& p = pair_of(product_elem);
  if (!p.first) return Mover::Err;
  return std::get<Mover>(p.second->payload);
}

}  // namespace eq
