#include "eq/checker.hpp"

#include <algorithm>
#include <sstream>

namespace eq {

namespace {

[[noreturn]] void fail(const std::string& rule, const std::string& msg, SourceSpan span = {}) {
  throw CheckError(Diagnostic{rule, msg, span});
}

const std::string* name_of_value(const TermAst& v) {
  if (const auto* var = std::get_if<TmVar>(&v.node)) return &var->name;
  if (const auto* prim = std::get_if<TmPrim>(&v.node)) return &prim->name;
  return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Environments

TypeEnv TypeEnv::pushed_term(std::string name, TypePtr type) const {
  TypeEnv out = *this;
  out.entries_.push_back({std::move(name), true, std::move(type), std::nullopt});
  return out;
}

TypeEnv TypeEnv::pushed_type(std::string name, Kind kind) const {
  TypeEnv out = *this;
  out.entries_.push_back({std::move(name), false, nullptr, kind});
  return out;
}

const TypePtr* TypeEnv::lookup_term(const std::string& name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->is_term && it->name == name) return &it->type;
  return nullptr;
}

const Kind* TypeEnv::lookup_type(const std::string& name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (!it->is_term && it->name == name) return &*it->kind;
  return nullptr;
}

bool TypeEnv::bound(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.name == name; });
}

NameSet index_scope(const LanguageParams& params, const TypeEnv& env, const StateTypeEnv* sigma) {
  NameSet out;
  for (const auto& e : env.entries())
    if (e.is_term && params.is_index_type && params.is_index_type(*e.type)) out.insert(e.name);
  if (sigma)
    for (const auto& e : sigma->entries)
      if (params.is_index_type && params.is_index_type(*e.type)) out.insert(e.name);
  return out;
}

// ---------------------------------------------------------------------------
// Substitution

EffExpr subst_term_in_effect(const EffExpr& g, const TermPtr& v, const std::string& x,
                             const FamilyPtr& family) {
  if (!effect_names(g).count(x)) return g;
  const std::string* nm = name_of_value(*v);
  if (!nm)
    fail("substitution",
         "cannot substitute a non-name value into an effect mentioning '" + x + "'");
  return subst_effect_name(g, x, *nm, *family);
}

EffExpr subst_type_in_effect(const EffExpr& g, const TypePtr& t, const std::string& alpha) {
  if (!effect_vars(g).count(alpha)) return g;
  if (const auto* eff = std::get_if<TEffect>(&t->node))
    return subst_effect_var(g, alpha, eff->effect);
  if (const auto* name = std::get_if<TName>(&t->node))
    return subst_effect_var(g, alpha, EffExpr::var(name->name));
  fail("substitution", "ill-kinded substitution of a non-effect type for effect variable '" +
                           alpha + "'");
}

namespace {

TermPtr subst_term_rec(const TermPtr& e, const TermPtr& v, const std::string& x,
                       const FamilyPtr& family);
TypePtr subst_term_in_type_rec(const TypePtr& t, const TermPtr& v, const std::string& x,
                               const FamilyPtr& family);

TermPtr rename_term_var(const TermPtr& e, const std::string& from, const std::string& to,
                        const FamilyPtr& family) {
  return subst_term_rec(e, tm_var(to), from, family);
}

TypePtr subst_term_in_type_rec(const TypePtr& t, const TermPtr& v, const std::string& x,
                               const FamilyPtr& family) {
  return std::visit(
      [&](const auto& n) -> TypePtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TName> || std::is_same_v<T, TBool> ||
                      std::is_same_v<T, TUnit>) {
          return t;
        } else if constexpr (std::is_same_v<T, TEffect>) {
          return ty_effect(subst_term_in_effect(n.effect, v, x, family));
        } else if constexpr (std::is_same_v<T, TApp>) {
          return ty_app(subst_term_in_type_rec(n.fn, v, x, family),
                        subst_term_in_type_rec(n.arg, v, x, family));
        } else if constexpr (std::is_same_v<T, TPi>) {
          TypePtr arg = subst_term_in_type_rec(n.arg, v, x, family);
          if (n.var == x) return ty_pi(n.var, arg, n.latent, n.result);
          std::string var = n.var;
          EffExpr latent = n.latent;
          TypePtr result = n.result;
          if (free_term_vars(*v).count(var)) {
            std::string renamed = fresh_name(var);
            latent = subst_effect_name(latent, var, renamed, *family);
            result = subst_term_in_type_rec(result, tm_var(renamed), var, family);
            var = renamed;
          }
          return ty_pi(var, arg, subst_term_in_effect(latent, v, x, family),
                       subst_term_in_type_rec(result, v, x, family));
        } else if constexpr (std::is_same_v<T, TForall>) {
          return ty_forall(n.var, n.kind, subst_term_in_effect(n.latent, v, x, family),
                           subst_term_in_type_rec(n.body, v, x, family));
        } else {
          return ty_singleton(subst_term_rec(n.value, v, x, family));
        }
      },
      t->node);
}

TermPtr subst_term_rec(const TermPtr& e, const TermPtr& v, const std::string& x,
                       const FamilyPtr& family) {
  return std::visit(
      [&](const auto& n) -> TermPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TmVar>) {
          return n.name == x ? v : e;
        } else if constexpr (std::is_same_v<T, TmPrim> || std::is_same_v<T, TmTrue> ||
                             std::is_same_v<T, TmFalse> || std::is_same_v<T, TmUnitVal>) {
          return e;
        } else if constexpr (std::is_same_v<T, TmLam>) {
          std::optional<TypePtr> arg_type;
          if (n.arg_type) arg_type = subst_term_in_type_rec(*n.arg_type, v, x, family);
          if (n.var == x) return tm_lam(n.var, arg_type, n.latent_ann, n.body);
          std::string var = n.var;
          TermPtr body = n.body;
          std::optional<EffExpr> ann = n.latent_ann;
          if (free_term_vars(*v).count(var)) {
            std::string renamed = fresh_name(var);
            body = rename_term_var(body, var, renamed, family);
            if (ann) ann = subst_effect_name(*ann, var, renamed, *family);
            var = renamed;
          }
          if (ann) ann = subst_term_in_effect(*ann, v, x, family);
          return tm_lam(var, arg_type, ann, subst_term_rec(body, v, x, family));
        } else if constexpr (std::is_same_v<T, TmApp>) {
          return tm_app(subst_term_rec(n.fn, v, x, family), subst_term_rec(n.arg, v, x, family));
        } else if constexpr (std::is_same_v<T, TmIf>) {
          return tm_if(subst_term_rec(n.cond, v, x, family),
                       subst_term_rec(n.then_branch, v, x, family),
                       subst_term_rec(n.else_branch, v, x, family));
        } else if constexpr (std::is_same_v<T, TmWhile>) {
          return tm_while(subst_term_rec(n.cond, v, x, family),
                          subst_term_rec(n.body, v, x, family));
        } else if constexpr (std::is_same_v<T, TmTyLam>) {
          return tm_tylam(n.var, n.kind, subst_term_rec(n.body, v, x, family));
        } else {
          return tm_tyapp(subst_term_rec(n.fn, v, x, family),
                          subst_term_in_type_rec(n.arg, v, x, family));
        }
      },
      e->node);
}

}  // namespace

TermPtr subst_term(const TermPtr& e, const TermPtr& v, const std::string& x,
                   const FamilyPtr& family) {
  return subst_term_rec(e, v, x, family);
}

TypePtr subst_term_in_type(const TypePtr& t, const TermPtr& v, const std::string& x,
                           const FamilyPtr& family) {
  return subst_term_in_type_rec(t, v, x, family);
}

namespace {

TypePtr subst_type_in_type_rec(const TypePtr& body, const TypePtr& t, const std::string& alpha,
                               const FamilyPtr& family);

TermPtr subst_type_in_term_rec(const TermPtr& e, const TypePtr& t, const std::string& alpha,
                               const FamilyPtr& family) {
  return std::visit(
      [&](const auto& n) -> TermPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TmVar> || std::is_same_v<T, TmPrim> ||
                      std::is_same_v<T, TmTrue> || std::is_same_v<T, TmFalse> ||
                      std::is_same_v<T, TmUnitVal>) {
          return e;
        } else if constexpr (std::is_same_v<T, TmLam>) {
          std::optional<TypePtr> arg_type;
          if (n.arg_type) arg_type = subst_type_in_type_rec(*n.arg_type, t, alpha, family);
          std::optional<EffExpr> ann = n.latent_ann;
          if (ann) ann = subst_type_in_effect(*ann, t, alpha);
          return tm_lam(n.var, arg_type, ann, subst_type_in_term_rec(n.body, t, alpha, family));
        } else if constexpr (std::is_same_v<T, TmApp>) {
          return tm_app(subst_type_in_term_rec(n.fn, t, alpha, family),
                        subst_type_in_term_rec(n.arg, t, alpha, family));
        } else if constexpr (std::is_same_v<T, TmIf>) {
          return tm_if(subst_type_in_term_rec(n.cond, t, alpha, family),
                       subst_type_in_term_rec(n.then_branch, t, alpha, family),
                       subst_type_in_term_rec(n.else_branch, t, alpha, family));
        } else if constexpr (std::is_same_v<T, TmWhile>) {
          return tm_while(subst_type_in_term_rec(n.cond, t, alpha, family),
                          subst_type_in_term_rec(n.body, t, alpha, family));
        } else if constexpr (std::is_same_v<T, TmTyLam>) {
          if (n.var == alpha) return e;
          std::string var = n.var;
          TermPtr body = n.body;
          if (free_type_vars(*t).count(var)) {
            std::string renamed = fresh_name(var);
            body = subst_type_in_term_rec(body, ty_name(renamed), var, family);
            var = renamed;
          }
          return tm_tylam(var, n.kind, subst_type_in_term_rec(body, t, alpha, family));
        } else {
          return tm_tyapp(subst_type_in_term_rec(n.fn, t, alpha, family),
                          subst_type_in_type_rec(n.arg, t, alpha, family));
        }
      },
      e->node);
}

TypePtr subst_type_in_type_rec(const TypePtr& body, const TypePtr& t, const std::string& alpha,
                               const FamilyPtr& family) {
  return std::visit(
      [&](const auto& n) -> TypePtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TName>) {
          return n.name == alpha ? t : body;
        } else if constexpr (std::is_same_v<T, TBool> || std::is_same_v<T, TUnit>) {
          return body;
        } else if constexpr (std::is_same_v<T, TEffect>) {
          return ty_effect(subst_type_in_effect(n.effect, t, alpha));
        } else if constexpr (std::is_same_v<T, TApp>) {
          return ty_app(subst_type_in_type_rec(n.fn, t, alpha, family),
                        subst_type_in_type_rec(n.arg, t, alpha, family));
        } else if constexpr (std::is_same_v<T, TPi>) {
          TypePtr arg = subst_type_in_type_rec(n.arg, t, alpha, family);
          std::string var = n.var;
          EffExpr latent = n.latent;
          TypePtr result = n.result;
          if (free_term_vars(*t).count(var)) {
            std::string renamed = fresh_name(var);
            latent = subst_effect_name(latent, var, renamed, *family);
            result = subst_term_in_type_rec(result, tm_var(renamed), var, family);
            var = renamed;
          }
          return ty_pi(var, arg, subst_type_in_effect(latent, t, alpha),
                       subst_type_in_type_rec(result, t, alpha, family));
        } else if constexpr (std::is_same_v<T, TForall>) {
          if (n.var == alpha) return body;
          std::string var = n.var;
          EffExpr latent = n.latent;
          TypePtr inner = n.body;
          if (free_type_vars(*t).count(var)) {
            std::string renamed = fresh_name(var);
            latent = subst_effect_var(latent, var, EffExpr::var(renamed));
            inner = subst_type_in_type_rec(inner, ty_name(renamed), var, family);
            var = renamed;
          }
          return ty_forall(var, n.kind, subst_type_in_effect(latent, t, alpha),
                           subst_type_in_type_rec(inner, t, alpha, family));
        } else {
          return ty_singleton(subst_type_in_term_rec(n.value, t, alpha, family));
        }
      },
      body->node);
}

}  // namespace

TermPtr subst_type_in_term(const TermPtr& e, const TypePtr& t, const std::string& alpha,
                           const FamilyPtr& family) {
  return subst_type_in_term_rec(e, t, alpha, family);
}

TypePtr subst_type_in_type(const TypePtr& body, const TypePtr& t, const std::string& alpha,
                           const FamilyPtr& family) {
  return subst_type_in_type_rec(body, t, alpha, family);
}

// ---------------------------------------------------------------------------
// Alpha equivalence

namespace {

struct AlphaCtx {
  const LanguageParams& params;
  std::vector<std::pair<std::string, std::string>> term_map_a, term_map_b;
  std::vector<std::pair<std::string, std::string>> type_map_a, type_map_b;
  int counter = 0;

  static const std::string* find(const std::vector<std::pair<std::string, std::string>>& m,
                                 const std::string& k) {
    for (auto it = m.rbegin(); it != m.rend(); ++it)
      if (it->first == k) return &it->second;
    return nullptr;
  }

  EffExpr canon_effect(const EffExpr& e, bool left) const {
    EffExpr out = e;
    const auto& tm = left ? term_map_a : term_map_b;
    const auto& ty = left ? type_map_a : type_map_b;
    NameSet names = effect_names(out);
    for (const auto& [old_name, canon] : tm)
      if (names.count(old_name)) out = subst_effect_name(out, old_name, canon, *params.family);
    for (const auto& [old_name, canon] : ty) out = subst_effect_var(out, old_name, EffExpr::var(canon));
    return out;
  }

  bool effects_equal(const EffExpr& a, const EffExpr& b) const {
    return nf_equal(normalize(canon_effect(a, true)), normalize(canon_effect(b, false)));
  }
};

bool term_alpha_equal(AlphaCtx& ctx, const TermAst& a, const TermAst& b);

bool type_alpha_equal(AlphaCtx& ctx, const TypeAst& a, const TypeAst& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const auto& nb = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, TName>) {
          const std::string* ca = AlphaCtx::find(ctx.type_map_a, na.name);
          const std::string* cb = AlphaCtx::find(ctx.type_map_b, nb.name);
          if (ca || cb) return ca && cb && *ca == *cb;
          return na.name == nb.name;
        } else if constexpr (std::is_same_v<T, TBool> || std::is_same_v<T, TUnit>) {
          return true;
        } else if constexpr (std::is_same_v<T, TEffect>) {
          return ctx.effects_equal(na.effect, nb.effect);
        } else if constexpr (std::is_same_v<T, TApp>) {
          return type_alpha_equal(ctx, *na.fn, *nb.fn) && type_alpha_equal(ctx, *na.arg, *nb.arg);
        } else if constexpr (std::is_same_v<T, TPi>) {
          if (!type_alpha_equal(ctx, *na.arg, *nb.arg)) return false;
          std::string canon = "%c" + std::to_string(ctx.counter++);
          ctx.term_map_a.push_back({na.var, canon});
          ctx.term_map_b.push_back({nb.var, canon});
          bool ok = ctx.effects_equal(na.latent, nb.latent) &&
                    type_alpha_equal(ctx, *na.result, *nb.result);
          ctx.term_map_a.pop_back();
          ctx.term_map_b.pop_back();
          return ok;
        } else if constexpr (std::is_same_v<T, TForall>) {
          if (!(na.kind == nb.kind)) return false;
          std::string canon = "%c" + std::to_string(ctx.counter++);
          ctx.type_map_a.push_back({na.var, canon});
          ctx.type_map_b.push_back({nb.var, canon});
          bool ok = ctx.effects_equal(na.latent, nb.latent) &&
                    type_alpha_equal(ctx, *na.body, *nb.body);
          ctx.type_map_a.pop_back();
          ctx.type_map_b.pop_back();
          return ok;
        } else {
          return term_alpha_equal(ctx, *na.value, *nb.value);
        }
      },
      a.node);
}

bool term_alpha_equal(AlphaCtx& ctx, const TermAst& a, const TermAst& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const auto& nb = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, TmVar>) {
          const std::string* ca = AlphaCtx::find(ctx.term_map_a, na.name);
          const std::string* cb = AlphaCtx::find(ctx.term_map_b, nb.name);
          if (ca || cb) return ca && cb && *ca == *cb;
          return na.name == nb.name;
        } else if constexpr (std::is_same_v<T, TmPrim>) {
          return na.name == nb.name;
        } else if constexpr (std::is_same_v<T, TmTrue> || std::is_same_v<T, TmFalse> ||
                             std::is_same_v<T, TmUnitVal>) {
          return true;
        } else if constexpr (std::is_same_v<T, TmLam>) {
          if (na.arg_type.has_value() != nb.arg_type.has_value()) return false;
          if (na.arg_type && !type_alpha_equal(ctx, **na.arg_type, **nb.arg_type)) return false;
          std::string canon = "%c" + std::to_string(ctx.counter++);
          ctx.term_map_a.push_back({na.var, canon});
          ctx.term_map_b.push_back({nb.var, canon});
          bool ok = term_alpha_equal(ctx, *na.body, *nb.body);
          if (ok && na.latent_ann.has_value() && nb.latent_ann.has_value())
            ok = ctx.effects_equal(*na.latent_ann, *nb.latent_ann);
          else if (ok && (na.latent_ann.has_value() != nb.latent_ann.has_value()))
            ok = false;
          ctx.term_map_a.pop_back();
          ctx.term_map_b.pop_back();
          return ok;
        } else if constexpr (std::is_same_v<T, TmApp>) {
          return term_alpha_equal(ctx, *na.fn, *nb.fn) && term_alpha_equal(ctx, *na.arg, *nb.arg);
        } else if constexpr (std::is_same_v<T, TmIf>) {
          return term_alpha_equal(ctx, *na.cond, *nb.cond) &&
                 term_alpha_equal(ctx, *na.then_branch, *nb.then_branch) &&
                 term_alpha_equal(ctx, *na.else_branch, *nb.else_branch);
        } else if constexpr (std::is_same_v<T, TmWhile>) {
          return term_alpha_equal(ctx, *na.cond, *nb.cond) &&
                 term_alpha_equal(ctx, *na.body, *nb.body);
        } else if constexpr (std::is_same_v<T, TmTyLam>) {
          if (!(na.kind == nb.kind)) return false;
          std::string canon = "%c" + std::to_string(ctx.counter++);
          ctx.type_map_a.push_back({na.var, canon});
          ctx.type_map_b.push_back({nb.var, canon});
          bool ok = term_alpha_equal(ctx, *na.body, *nb.body);
          ctx.type_map_a.pop_back();
          ctx.type_map_b.pop_back();
          return ok;
        } else {
          return term_alpha_equal(ctx, *na.fn, *nb.fn) && type_alpha_equal(ctx, *na.arg, *nb.arg);
        }
      },
      a.node);
}

}  // namespace

bool type_equal(const LanguageParams& params, const TypePtr& a, const TypePtr& b) {
  AlphaCtx ctx{params};
  return type_alpha_equal(ctx, *a, *b);
}

// ---------------------------------------------------------------------------
// Kinding

namespace {

TypePtr scope_type_rec(const LanguageParams& params, const TypeEnv& env, const StateTypeEnv* sigma,
                       const TypePtr& t) {
  return std::visit(
      [&](const auto& n) -> TypePtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TEffect>) {
          return ty_effect(rescope_effect(n.effect, *params.family, index_scope(params, env, sigma)));
        } else if constexpr (std::is_same_v<T, TApp>) {
          return ty_app(scope_type_rec(params, env, sigma, n.fn),
                        scope_type_rec(params, env, sigma, n.arg));
        } else if constexpr (std::is_same_v<T, TPi>) {
          TypePtr arg = scope_type_rec(params, env, sigma, n.arg);
          TypeEnv inner = env.pushed_term(n.var, arg);
          EffExpr latent =
              rescope_effect(n.latent, *params.family, index_scope(params, inner, sigma));
          return ty_pi(n.var, arg, latent, scope_type_rec(params, inner, sigma, n.result));
        } else if constexpr (std::is_same_v<T, TForall>) {
          TypeEnv inner = env.pushed_type(n.var, n.kind);
          EffExpr latent =
              rescope_effect(n.latent, *params.family, index_scope(params, inner, sigma));
          return ty_forall(n.var, n.kind, latent, scope_type_rec(params, inner, sigma, n.body));
        } else {
          return t;
        }
      },
      t->node);
}

}  // namespace

Kind kind_of(const LanguageParams& params, const TypeEnv& env, const TypePtr& type,
             const StateTypeEnv* sigma) {
  return std::visit(
      [&](const auto& n) -> Kind {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TName>) {
          if (const Kind* k = env.lookup_type(n.name)) return *k;
          auto it = params.type_families.find(n.name);
          if (it != params.type_families.end()) return it->second;
          fail("kinding", "unbound type name '" + n.name + "'", type->span);
        } else if constexpr (std::is_same_v<T, TBool> || std::is_same_v<T, TUnit>) {
          return Kind::star();
        } else if constexpr (std::is_same_v<T, TEffect>) {
          NameSet scope = index_scope(params, env, sigma);
          for (const auto& nm : effect_names(n.effect))
            if (!scope.count(nm))
              fail("kinding", "effect mentions '" + nm + "', which is not an index name in scope",
                   type->span);
          for (const auto& v : effect_vars(n.effect)) {
            const Kind* k = env.lookup_type(v);
            if (!k || !(*k == Kind::eff()))
              fail("kinding", "effect variable '" + v + "' is not bound at kind E", type->span);
          }
          return Kind::eff();
        } else if constexpr (std::is_same_v<T, TApp>) {
          Kind kf = kind_of(params, env, n.fn, sigma);
          if (kf.tag() != Kind::Tag::Arrow)
            fail("kinding", "type application of a non-arrow kind", type->span);
          Kind ka = kind_of(params, env, n.arg, sigma);
          if (!(ka == kf.from()))
            fail("kinding", "kind mismatch in type application", type->span);
          return kf.to();
        } else if constexpr (std::is_same_v<T, TPi>) {
          if (!(kind_of(params, env, n.arg, sigma) == Kind::star()))
            fail("kinding", "function argument type must have kind *", type->span);
          TypeEnv inner = env.pushed_term(n.var, n.arg);
          Kind kl = kind_of(params, inner, ty_effect(n.latent), sigma);
          (void)kl;
          if (!(kind_of(params, inner, n.result, sigma) == Kind::star()))
            fail("kinding", "function result type must have kind *", type->span);
          return Kind::star();
        } else if constexpr (std::is_same_v<T, TForall>) {
          TypeEnv inner = env.pushed_type(n.var, n.kind);
          kind_of(params, inner, ty_effect(n.latent), sigma);
          if (!(kind_of(params, inner, n.body, sigma) == Kind::star()))
            fail("kinding", "quantified body must have kind *", type->span);
          return Kind::star();
        } else {
          if (!is_value(*n.value, params))
            fail("kinding", "singleton index must be a syntactic value", type->span);
          TypingResult r = type_of(params, env, n.value, sigma);
          if (!nf_is_unit(r.effect_nf))
            fail("kinding", "singleton value must type with the unit effect", type->span);
          return Kind::star();
        }
      },
      type->node);
}

// ---------------------------------------------------------------------------
// Typing

namespace {

struct Typer {
  const LanguageParams& params;
  const StateTypeEnv* sigma;

  QuantalePtr instance_at(const TypeEnv& env) const {
    return params.family->instantiate(index_scope(params, env, sigma));
  }

  EffExpr unit_effect(const TypeEnv& env) const {
    return EffExpr::lit(instance_at(env)->unit());
  }

  TypingResult finish(const TypeEnv& env, std::string rule, const TermAst& term, TypePtr type,
                      EffExpr effect, std::vector<TraceNode> children) const {
    QuantalePtr inst = instance_at(env);
    EffExpr scoped = rescope_effect(effect, *params.family, index_scope(params, env, sigma));
    NormalForm nf;
    try {
      nf = normalize(scoped);
    } catch (const EffectError& e) {
      fail(rule, e.what(), term.span);
    }
    if (auto g = nf_ground(nf, inst); g && inst->is_top(*g))
      fail(rule, "effect of this expression is the error element " + inst->render(*g), term.span);
    EffExpr norm_expr = nf_to_expr(nf, inst);
    TraceNode trace{rule, render_term(term) + " : " + render_type(*type) + " | " +
                              render_effect(norm_expr),
                    std::move(children)};
    return TypingResult{std::move(type), std::move(norm_expr), std::move(nf), std::move(trace)};
  }

  TypingResult type_prim(const TypeEnv& env, const TermAst& term, const TmPrim& n) const {
    TypePtr ty;
    if (sigma) {
      const TypePtr* t = sigma->lookup(n.name);
      if (!t) fail("T-Prim", "unknown primitive '" + n.name + "'", term.span);
      ty = *t;
    } else {
      auto it = params.delta.find(n.name);
      if (it == params.delta.end())
        fail("T-Prim", "unknown primitive '" + n.name + "'", term.span);
      ty = it->second;
    }
    return finish(env, "T-Prim", term, scope_type_rec(params, env, sigma, ty), unit_effect(env),
                  {});
  }

  TypingResult type_lam(const TypeEnv& env, const TermAst& term, const TmLam& n) const {
    if (!n.arg_type)
      fail("T-Lambda",
           "lambda argument type annotation required (only immediately applied lambdas may omit "
           "it)",
           term.span);
    if (!(kind_of(params, env, *n.arg_type, sigma) == Kind::star()))
      fail("T-Lambda", "lambda argument type must have kind *", term.span);
    TypePtr arg = scope_type_rec(params, env, sigma, *n.arg_type);
    TypeEnv inner = env.pushed_term(n.var, arg);
    TypingResult body = type_of(params, inner, n.body, sigma);
    EffExpr latent = body.effect;
    if (n.latent_ann) {
      kind_of(params, inner, ty_effect(*n.latent_ann), sigma);
      EffExpr ann = rescope_effect(*n.latent_ann, *params.family,
                                   index_scope(params, inner, sigma));
      if (subeffect(body.effect, ann) != Subsumption::Yes)
        fail("T-Lambda",
             "body effect " + render_effect(body.effect) +
                 " is not a subeffect of the declared latent effect " + render_effect(ann),
             term.span);
      latent = ann;
    }
    TypePtr ty = ty_pi(n.var, arg, latent, body.type);
    return finish(env, "T-Lambda", term, ty, unit_effect(env), {std::move(body.trace)});
  }

  TypingResult type_app(const TypeEnv& env, const TermAst& term, const TmApp& n) const {
    std::vector<TraceNode> children;
    TypingResult arg_r = type_of(params, env, n.arg, sigma);
    std::optional<TypingResult> fn_opt;
    if (const auto* lam = std::get_if<TmLam>(&n.fn->node); lam && !lam->arg_type) {
      // immediately applied unannotated lambda (let/seq sugar): the argument
      // type is synthesized from the operand
      TermPtr annotated = tm_lam(lam->var, arg_r.type, lam->latent_ann, lam->body);
      fn_opt = type_of(params, env, annotated, sigma);
    } else {
      fn_opt = type_of(params, env, n.fn, sigma);
    }
    TypingResult& fn_r = *fn_opt;
    children.push_back(fn_r.trace);
    children.push_back(arg_r.trace);
    const auto* pi = std::get_if<TPi>(&fn_r.type->node);
    if (!pi)
      fail("T-App", "application of a non-function type " + render_type(*fn_r.type), term.span);
    if (!type_equal(params, arg_r.type, pi->arg))
      fail("T-App",
           "argument type " + render_type(*arg_r.type) + " does not match the expected " +
               render_type(*pi->arg),
           term.span);
    NameSet dependent = effect_names(pi->latent);
    dependent.merge(effect_vars(pi->latent));
    dependent.merge(free_term_vars(*pi->result));
    bool mentions = dependent.count(pi->var) > 0;
    bool arg_is_value = is_value(*n.arg, params);
    if (mentions && !arg_is_value)
      fail("T-App",
           "dependent application: '" + pi->var +
               "' occurs in the latent effect or result type, so the argument must be a value",
           term.span);
    TypePtr result = pi->result;
    EffExpr latent = pi->latent;
    if (mentions) {
      result = subst_term_in_type(result, n.arg, pi->var, params.family);
      latent = subst_term_in_effect(latent, n.arg, pi->var, params.family);
    }
    EffExpr eff = EffExpr::seq(fn_r.effect, EffExpr::seq(arg_r.effect, latent));
    return finish(env, "T-App", term, result, eff, std::move(children));
  }

  TypingResult type_tyapp(const TypeEnv& env, const TermAst& term, const TmTyApp& n) const {
    TypingResult fn_r = type_of(params, env, n.fn, sigma);
    const auto* fa = std::get_if<TForall>(&fn_r.type->node);
    if (!fa)
      fail("T-TyApp", "type application of a non-quantified type " + render_type(*fn_r.type),
           term.span);
    Kind ka = kind_of(params, env, n.arg, sigma);
    if (!(ka == fa->kind))
      fail("T-TyApp", "type argument kind " + ka.render() + " does not match " + fa->kind.render(),
           term.span);
    TypePtr arg = scope_type_rec(params, env, sigma, n.arg);
    TypePtr result = subst_type_in_type(fa->body, arg, fa->var, params.family);
    EffExpr latent = subst_type_in_effect(fa->latent, arg, fa->var);
    EffExpr eff = EffExpr::seq(fn_r.effect, latent);
    return finish(env, "T-TyApp", term, result, eff, {std::move(fn_r.trace)});
  }

  TypingResult type_term(const TypeEnv& env, const TermPtr& tp) const {
    const TermAst& term = *tp;
    return std::visit(
        [&](const auto& n) -> TypingResult {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, TmVar>) {
            const TypePtr* t = env.lookup_term(n.name);
            if (!t) fail("T-Var", "unbound variable '" + n.name + "'", term.span);
            return finish(env, "T-Var", term, *t, unit_effect(env), {});
          } else if constexpr (std::is_same_v<T, TmPrim>) {
            return type_prim(env, term, n);
          } else if constexpr (std::is_same_v<T, TmTrue> || std::is_same_v<T, TmFalse>) {
            return finish(env, "T-Bool", term, ty_bool(), unit_effect(env), {});
          } else if constexpr (std::is_same_v<T, TmUnitVal>) {
            return finish(env, "T-Unit", term, ty_unit(), unit_effect(env), {});
          } else if constexpr (std::is_same_v<T, TmLam>) {
            return type_lam(env, term, n);
          } else if constexpr (std::is_same_v<T, TmApp>) {
            return type_app(env, term, n);
          } else if constexpr (std::is_same_v<T, TmIf>) {
            TypingResult c = type_of(params, env, n.cond, sigma);
            if (!std::holds_alternative<TBool>(c.type->node))
              fail("T-If", "condition must be bool, got " + render_type(*c.type), term.span);
            TypingResult t1 = type_of(params, env, n.then_branch, sigma);
            TypingResult t2 = type_of(params, env, n.else_branch, sigma);
            if (!type_equal(params, t1.type, t2.type))
              fail("T-If",
                   "branch types differ: " + render_type(*t1.type) + " vs " +
                       render_type(*t2.type),
                   term.span);
            EffExpr eff = EffExpr::seq(c.effect, EffExpr::join(t1.effect, t2.effect));
            return finish(env, "T-If", term, t1.type, eff,
                          {std::move(c.trace), std::move(t1.trace), std::move(t2.trace)});
          } else if constexpr (std::is_same_v<T, TmWhile>) {
            TypingResult c = type_of(params, env, n.cond, sigma);
            if (!std::holds_alternative<TBool>(c.type->node))
              fail("T-While", "condition must be bool, got " + render_type(*c.type), term.span);
            TypingResult b = type_of(params, env, n.body, sigma);
            EffExpr eff =
                EffExpr::seq(c.effect, EffExpr::star(EffExpr::seq(b.effect, c.effect)));
            return finish(env, "T-While", term, ty_unit(), eff,
                          {std::move(c.trace), std::move(b.trace)});
          } else if constexpr (std::is_same_v<T, TmTyLam>) {
            if (env.bound(n.var))
              fail("T-TyLambda", "shadowed type variable '" + n.var + "'", term.span);
            TypeEnv inner = env.pushed_type(n.var, n.kind);
            TypingResult body = type_of(params, inner, n.body, sigma);
            TypePtr ty = ty_forall(n.var, n.kind, body.effect, body.type);
            return finish(env, "T-TyLambda", term, ty, unit_effect(env), {std::move(body.trace)});
          } else {
            return type_tyapp(env, term, n);
          }
        },
        term.node);
  }
};

}  // namespace

TypingResult type_of(const LanguageParams& params, const TypeEnv& env, const TermPtr& term,
                     const StateTypeEnv* sigma) {
  return Typer{params, sigma}.type_term(env, term);
}

CheckOutcome check_program(const LanguageParams& params, std::string_view text) {
  CheckOutcome out;
  try {
    out.term = parse_program(text, params);
  } catch (const ParseError& e) {
    out.diagnostics.push_back({"parse", e.what(), {e.line, e.col}});
    return out;
  } catch (const Error& e) {
    out.diagnostics.push_back({"parse", e.what(), {}});
    return out;
  }
  try {
    out.result = type_of(params, TypeEnv{}, out.term, nullptr);
  } catch (const CheckError& e) {
    out.diagnostics.push_back(e.diagnostic);
  } catch (const Error& e) {
    out.diagnostics.push_back({"check", e.what(), {}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter validation

std::vector<std::string> validate_params(const LanguageParams& params) {
  std::vector<std::string> problems;
  for (const auto& [name, type] : params.delta) {
    if (!free_term_vars(*type).empty())
      problems.push_back("delta(" + name + ") has free term variables");
    if (std::holds_alternative<TBool>(type->node) || std::holds_alternative<TUnit>(type->node)) {
      problems.push_back("delta(" + name + ") is a closed base type");
      continue;
    }
    try {
      if (!(kind_of(params, TypeEnv{}, type, nullptr) == Kind::star()))
        problems.push_back("delta(" + name + ") is not of kind *");
    } catch (const Error& e) {
      problems.push_back("delta(" + name + ") is ill-formed: " + e.what());
      continue;
    }
    // only the last arrow of the curried spine may carry a non-unit effect
    const TypeAst* t = type.get();
    std::vector<const EffExpr*> latents;
    for (;;) {
      if (const auto* pi = std::get_if<TPi>(&t->node)) {
        latents.push_back(&pi->latent);
        t = pi->result.get();
      } else if (const auto* fa = std::get_if<TForall>(&t->node)) {
        latents.push_back(&fa->latent);
        t = fa->body.get();
      } else {
        break;
      }
    }
    for (std::size_t i = 0; i + 1 < latents.size(); ++i) {
      NormalForm nf = normalize(*latents[i]);
      if (!nf_is_unit(nf))
        problems.push_back("delta(" + name + ") carries a non-unit effect before the last arrow");
    }
  }
  return problems;
}

}  // namespace eq
