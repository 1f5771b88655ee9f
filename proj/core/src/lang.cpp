#include "eq/lang.hpp"

#include "sexp.hpp"

#include <atomic>
#include <cctype>
#include <sstream>

namespace eq {

// ---------------------------------------------------------------------------
// Kinds

Kind Kind::star() {
  static const Kind k(std::make_shared<Node>(Node{Tag::Star, nullptr, nullptr}));
  return k;
}

Kind Kind::eff() {
  static const Kind k(std::make_shared<Node>(Node{Tag::Eff, nullptr, nullptr}));
  return k;
}

Kind Kind::arrow(Kind from, Kind to) {
  return Kind(std::make_shared<Node>(Node{Tag::Arrow, from.node_, to.node_}));
}

Kind Kind::from() const { return Kind(node_->a); }
Kind Kind::to() const { return Kind(node_->b); }

bool Kind::operator==(const Kind& other) const {
  if (tag() != other.tag()) return false;
  if (tag() != Tag::Arrow) return true;
  return from() == other.from() && to() == other.to();
}

std::string Kind::render() const {
  switch (tag()) {
    case Tag::Star: return "*";
    case Tag::Eff: return "E";
    case Tag::Arrow: return "(=> " + from().render() + " " + to().render() + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Constructors

namespace {

TypePtr mk_type(TypeAst t) { return std::make_shared<TypeAst>(std::move(t)); }
TermPtr mk_term(TermAst t) { return std::make_shared<TermAst>(std::move(t)); }

}  // namespace

TypePtr ty_name(std::string name) { return mk_type({TName{std::move(name)}, {}}); }
TypePtr ty_bool() { return mk_type({TBool{}, {}}); }
TypePtr ty_unit() { return mk_type({TUnit{}, {}}); }
TypePtr ty_effect(EffExpr e) { return mk_type({TEffect{std::move(e)}, {}}); }
TypePtr ty_app(TypePtr fn, TypePtr arg) { return mk_type({TApp{std::move(fn), std::move(arg)}, {}}); }
TypePtr ty_pi(std::string var, TypePtr arg, EffExpr latent, TypePtr result) {
  return mk_type({TPi{std::move(var), std::move(arg), std::move(latent), std::move(result)}, {}});
}
TypePtr ty_arrow(TypePtr arg, EffExpr latent, TypePtr result) {
  return ty_pi(fresh_name("_"), std::move(arg), std::move(latent), std::move(result));
}
TypePtr ty_forall(std::string var, Kind kind, EffExpr latent, TypePtr body) {
  return mk_type({TForall{std::move(var), kind, std::move(latent), std::move(body)}, {}});
}
TypePtr ty_singleton(TermPtr value) { return mk_type({TSingleton{std::move(value)}, {}}); }

TermPtr tm_var(std::string name) { return mk_term({TmVar{std::move(name)}, {}}); }
TermPtr tm_prim(std::string name) { return mk_term({TmPrim{std::move(name)}, {}}); }
TermPtr tm_true() { return mk_term({TmTrue{}, {}}); }
TermPtr tm_false() { return mk_term({TmFalse{}, {}}); }
TermPtr tm_unit() { return mk_term({TmUnitVal{}, {}}); }
TermPtr tm_lam(std::string var, std::optional<TypePtr> arg_type, std::optional<EffExpr> latent,
               TermPtr body) {
  return mk_term({TmLam{std::move(var), std::move(arg_type), std::move(latent), std::move(body)},
                  {}});
}
TermPtr tm_app(TermPtr fn, TermPtr arg) { return mk_term({TmApp{std::move(fn), std::move(arg)}, {}}); }
TermPtr tm_if(TermPtr c, TermPtr t, TermPtr e) {
  return mk_term({TmIf{std::move(c), std::move(t), std::move(e)}, {}});
}
TermPtr tm_while(TermPtr c, TermPtr b) { return mk_term({TmWhile{std::move(c), std::move(b)}, {}}); }
TermPtr tm_tylam(std::string var, Kind kind, TermPtr body) {
  return mk_term({TmTyLam{std::move(var), kind, std::move(body)}, {}});
}
TermPtr tm_tyapp(TermPtr fn, TypePtr arg) {
  return mk_term({TmTyApp{std::move(fn), std::move(arg)}, {}});
}
TermPtr tm_seq(TermPtr first, TermPtr rest) {
  return tm_app(tm_lam(fresh_name("_"), std::nullopt, std::nullopt, std::move(rest)),
                std::move(first));
}
TermPtr tm_let(std::string var, TermPtr bound, TermPtr body) {
  return tm_app(tm_lam(std::move(var), std::nullopt, std::nullopt, std::move(body)),
                std::move(bound));
}

std::string fresh_name(const std::string& hint) {
  static std::atomic<std::uint64_t> counter{0};
  std::string base = hint.substr(0, hint.find('%'));
  return base + "%" + std::to_string(counter.fetch_add(1));
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string quote_effect(const EffExpr& e) { return "\"" + render_effect(e) + "\""; }

}  // namespace

std::string render_type(const TypeAst& t) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TName>) {
          return n.name;
        } else if constexpr (std::is_same_v<T, TBool>) {
          return "bool";
        } else if constexpr (std::is_same_v<T, TUnit>) {
          return "unit";
        } else if constexpr (std::is_same_v<T, TEffect>) {
          return "(eff " + quote_effect(n.effect) + ")";
        } else if constexpr (std::is_same_v<T, TApp>) {
          return "(" + render_type(*n.fn) + " " + render_type(*n.arg) + ")";
        } else if constexpr (std::is_same_v<T, TPi>) {
          return "(pi (" + n.var + " " + render_type(*n.arg) + ") " + quote_effect(n.latent) +
                 " " + render_type(*n.result) + ")";
        } else if constexpr (std::is_same_v<T, TForall>) {
          return "(forall " + n.var + " :: " + n.kind.render() + " " + quote_effect(n.latent) +
                 " " + render_type(*n.body) + ")";
        } else {
          return "(singleton " + render_term(*n.value) + ")";
        }
      },
      t.node);
}

std::string render_term(const TermAst& t) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TmVar>) {
          return n.name;
        } else if constexpr (std::is_same_v<T, TmPrim>) {
          return "(prim " + n.name + ")";
        } else if constexpr (std::is_same_v<T, TmTrue>) {
          return "true";
        } else if constexpr (std::is_same_v<T, TmFalse>) {
          return "false";
        } else if constexpr (std::is_same_v<T, TmUnitVal>) {
          return "()";
        } else if constexpr (std::is_same_v<T, TmLam>) {
          std::string head = n.arg_type ? "(" + n.var + " " + render_type(**n.arg_type) + ")"
                                        : n.var;
          std::string eff = n.latent_ann ? " :eff " + quote_effect(*n.latent_ann) : "";
          return "(lam " + head + eff + " " + render_term(*n.body) + ")";
        } else if constexpr (std::is_same_v<T, TmApp>) {
          return "(app " + render_term(*n.fn) + " " + render_term(*n.arg) + ")";
        } else if constexpr (std::is_same_v<T, TmIf>) {
          return "(if " + render_term(*n.cond) + " " + render_term(*n.then_branch) + " " +
                 render_term(*n.else_branch) + ")";
        } else if constexpr (std::is_same_v<T, TmWhile>) {
          return "(while " + render_term(*n.cond) + " " + render_term(*n.body) + ")";
        } else if constexpr (std::is_same_v<T, TmTyLam>) {
          return "(tylam " + n.var + " :: " + n.kind.render() + " " + render_term(*n.body) + ")";
        } else {
          return "(tyapp " + render_term(*n.fn) + " " + render_type(*n.arg) + ")";
        }
      },
      t.node);
}

// ---------------------------------------------------------------------------
// Free variables

namespace {

void collect_term_vars(const TypeAst& t, NameSet& out);

void collect_term_vars(const TermAst& t, NameSet& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TmVar>) {
          out.insert(n.name);
        } else if constexpr (std::is_same_v<T, TmLam>) {
          if (n.arg_type) collect_term_vars(**n.arg_type, out);
          NameSet inner;
          collect_term_vars(*n.body, inner);
          if (n.latent_ann) inner.merge(effect_names(*n.latent_ann));
          inner.erase(n.var);
          out.merge(inner);
        } else if constexpr (std::is_same_v<T, TmApp>) {
          collect_term_vars(*n.fn, out);
          collect_term_vars(*n.arg, out);
        } else if constexpr (std::is_same_v<T, TmIf>) {
          collect_term_vars(*n.cond, out);
          collect_term_vars(*n.then_branch, out);
          collect_term_vars(*n.else_branch, out);
        } else if constexpr (std::is_same_v<T, TmWhile>) {
          collect_term_vars(*n.cond, out);
          collect_term_vars(*n.body, out);
        } else if constexpr (std::is_same_v<T, TmTyLam>) {
          collect_term_vars(*n.body, out);
        } else if constexpr (std::is_same_v<T, TmTyApp>) {
          collect_term_vars(*n.fn, out);
          collect_term_vars(*n.arg, out);
        }
      },
      t.node);
}

void collect_term_vars(const TypeAst& t, NameSet& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TEffect>) {
          out.merge(effect_names(n.effect));
        } else if constexpr (std::is_same_v<T, TApp>) {
          collect_term_vars(*n.fn, out);
          collect_term_vars(*n.arg, out);
        } else if constexpr (std::is_same_v<T, TPi>) {
          collect_term_vars(*n.arg, out);
          NameSet inner = effect_names(n.latent);
          collect_term_vars(*n.result, inner);
          inner.erase(n.var);
          out.merge(inner);
        } else if constexpr (std::is_same_v<T, TForall>) {
          out.merge(effect_names(n.latent));
          collect_term_vars(*n.body, out);
        } else if constexpr (std::is_same_v<T, TSingleton>) {
          collect_term_vars(*n.value, out);
        }
      },
      t.node);
}

void collect_type_vars(const TypeAst& t, NameSet& out);

void collect_type_vars(const TermAst& t, NameSet& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TmLam>) {
          if (n.arg_type) collect_type_vars(**n.arg_type, out);
          if (n.latent_ann) out.merge(effect_vars(*n.latent_ann));
          collect_type_vars(*n.body, out);
        } else if constexpr (std::is_same_v<T, TmApp>) {
          collect_type_vars(*n.fn, out);
          collect_type_vars(*n.arg, out);
        } else if constexpr (std::is_same_v<T, TmIf>) {
          collect_type_vars(*n.cond, out);
          collect_type_vars(*n.then_branch, out);
          collect_type_vars(*n.else_branch, out);
        } else if constexpr (std::is_same_v<T, TmWhile>) {
          collect_type_vars(*n.cond, out);
          collect_type_vars(*n.body, out);
        } else if constexpr (std::is_same_v<T, TmTyLam>) {
          NameSet inner;
          collect_type_vars(*n.body, inner);
          inner.erase(n.var);
          out.merge(inner);
        } else if constexpr (std::is_same_v<T, TmTyApp>) {
          collect_type_vars(*n.fn, out);
          collect_type_vars(*n.arg, out);
        }
      },
      t.node);
}

void collect_type_vars(const TypeAst& t, NameSet& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TName>) {
          out.insert(n.name);
        } else if constexpr (std::is_same_v<T, TEffect>) {
          out.merge(effect_vars(n.effect));
        } else if constexpr (std::is_same_v<T, TApp>) {
          collect_type_vars(*n.fn, out);
          collect_type_vars(*n.arg, out);
        } else if constexpr (std::is_same_v<T, TPi>) {
          collect_type_vars(*n.arg, out);
          out.merge(effect_vars(n.latent));
          collect_type_vars(*n.result, out);
        } else if constexpr (std::is_same_v<T, TForall>) {
          NameSet inner = effect_vars(n.latent);
          collect_type_vars(*n.body, inner);
          inner.erase(n.var);
          out.merge(inner);
        } else if constexpr (std::is_same_v<T, TSingleton>) {
          collect_type_vars(*n.value, out);
        }
      },
      t.node);
}

}  // namespace

NameSet free_term_vars(const TermAst& t) {
  NameSet out;
  collect_term_vars(t, out);
  return out;
}
NameSet free_term_vars(const TypeAst& t) {
  NameSet out;
  collect_term_vars(t, out);
  return out;
}
NameSet free_type_vars(const TermAst& t) {
  NameSet out;
  collect_type_vars(t, out);
  return out;
}
NameSet free_type_vars(const TypeAst& t) {
  NameSet out;
  collect_type_vars(t, out);
  return out;
}
NameSet free_vars(const TermAst& t) {
  NameSet out = free_term_vars(t);
  out.merge(free_type_vars(t));
  return out;
}
NameSet free_vars(const TypeAst& t) {
  NameSet out = free_term_vars(t);
  out.merge(free_type_vars(t));
  return out;
}
NameSet free_vars(const EffExpr& e) {
  NameSet out = effect_names(e);
  out.merge(effect_vars(e));
  return out;
}

// ---------------------------------------------------------------------------
// State type environments

const TypePtr* StateTypeEnv::lookup(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e.type;
  return nullptr;
}

StateTypeEnv StateTypeEnv::extended(std::string name, TypePtr type) const {
  StateTypeEnv out = *this;
  out.entries.push_back({std::move(name), std::move(type)});
  return out;
}

NameSet StateTypeEnv::names() const {
  NameSet out;
  for (const auto& e : entries) out.insert(e.name);
  return out;
}

bool StateTypeEnv::leq(const StateTypeEnv& a, const StateTypeEnv& b) {
  for (const auto& e : a.entries) {
    const TypePtr* t = b.lookup(e.name);
    if (!t) return false;
    if (render_type(**t) != render_type(*e.type)) return false;
  }
  return true;
}

StateTypeEnv LanguageParams::delta_sigma() const {
  StateTypeEnv sigma;
  for (const auto& [name, type] : delta) sigma.entries.push_back({name, type});
  return sigma;
}

// ---------------------------------------------------------------------------
// Primitive spines and values

int delta_arity(const LanguageParams& params, const std::string& prim) {
  auto it = params.delta.find(prim);
  if (it == params.delta.end()) return 0;
  int arity = 0;
  const TypeAst* t = it->second.get();
  for (;;) {
    if (const auto* pi = std::get_if<TPi>(&t->node)) {
      ++arity;
      t = pi->result.get();
    } else if (const auto* fa = std::get_if<TForall>(&t->node)) {
      ++arity;
      t = fa->body.get();
    } else {
      break;
    }
  }
  return arity;
}

std::optional<PrimSpine> as_prim_spine(const TermPtr& t) {
  std::vector<SpineArg> rev;
  const TermAst* cur = t.get();
  for (;;) {
    if (const auto* app = std::get_if<TmApp>(&cur->node)) {
      rev.push_back(SpineArg{app->arg});
      cur = app->fn.get();
    } else if (const auto* tapp = std::get_if<TmTyApp>(&cur->node)) {
      rev.push_back(SpineArg{tapp->arg});
      cur = tapp->fn.get();
    } else {
      break;
    }
  }
  const auto* prim = std::get_if<TmPrim>(&cur->node);
  if (!prim) return std::nullopt;
  PrimSpine spine;
  spine.prim = prim->name;
  spine.args.assign(rev.rbegin(), rev.rend());
  return spine;
}

bool is_value(const TermAst& t, const LanguageParams& params) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TmVar> || std::is_same_v<T, TmPrim> ||
                      std::is_same_v<T, TmTrue> || std::is_same_v<T, TmFalse> ||
                      std::is_same_v<T, TmUnitVal> || std::is_same_v<T, TmLam> ||
                      std::is_same_v<T, TmTyLam>) {
          return true;
        } else if constexpr (std::is_same_v<T, TmApp> || std::is_same_v<T, TmTyApp>) {
          // partial application of a primitive
          auto spine = as_prim_spine(std::make_shared<TermAst>(t));
          if (!spine) return false;
          if (int(spine->args.size()) >= delta_arity(params, spine->prim)) return false;
          for (const auto& a : spine->args)
            if (a.is_term() && !is_value(*a.term(), params)) return false;
          return true;
        } else {
          return false;
        }
      },
      t.node);
}

// ---------------------------------------------------------------------------
// S-expression parser

namespace {

using sexp::Sexp;
using sexp::Lexer;

struct AstBuilder {
  const LanguageParams& params;

  [[noreturn]] void fail(const Sexp& s, const std::string& what) const {
    throw ParseError(what, s.line, s.col);
  }

  bool is_atom(const Sexp& s, const char* word) const { return s.is_atom && s.atom == word; }

  EffExpr effect(const Sexp& s) const {
    if (!s.is_atom) fail(s, "expected an effect expression (atom or quoted string)");
    try {
      return parse_effect(s.atom, *params.family);
    } catch (const EffectError& e) {
      fail(s, e.what());
    }
  }

  Kind kind(const Sexp& s) const {
    if (s.is_atom) {
      if (s.atom == "*") return Kind::star();
      if (s.atom == "E") return Kind::eff();
      fail(s, "unknown kind '" + s.atom + "'");
    }
    if (s.items.size() == 3 && is_atom(s.items[0], "=>"))
      return Kind::arrow(kind(s.items[1]), kind(s.items[2]));
    fail(s, "malformed kind");
  }

  TypePtr type(const Sexp& s) const {
    if (s.is_atom) {
      if (s.atom == "bool") return with_span(ty_bool(), s);
      if (s.atom == "unit") return with_span(ty_unit(), s);
      return with_span(ty_name(s.atom), s);
    }
    if (s.items.empty()) fail(s, "empty type");
    const Sexp& head = s.items[0];
    if (is_atom(head, "pi")) {
      if (s.items.size() != 4) fail(s, "expected (pi (x TYPE) EFFECT TYPE)");
      const Sexp& binder = s.items[1];
      if (binder.is_atom || binder.items.size() != 2 || !binder.items[0].is_atom)
        fail(binder, "expected a (name TYPE) binder");
      return with_span(ty_pi(binder.items[0].atom, type(binder.items[1]), effect(s.items[2]),
                             type(s.items[3])),
                       s);
    }
    if (is_atom(head, "->")) {
      if (s.items.size() != 4) fail(s, "expected (-> TYPE EFFECT TYPE)");
      return with_span(ty_arrow(type(s.items[1]), effect(s.items[2]), type(s.items[3])), s);
    }
    if (is_atom(head, "forall")) {
      if (s.items.size() != 6 || !s.items[1].is_atom || !is_atom(s.items[2], "::"))
        fail(s, "expected (forall a :: KIND EFFECT TYPE)");
      return with_span(
          ty_forall(s.items[1].atom, kind(s.items[3]), effect(s.items[4]), type(s.items[5])), s);
    }
    if (is_atom(head, "singleton")) {
      if (s.items.size() != 2) fail(s, "expected (singleton VALUE)");
      return with_span(ty_singleton(term(s.items[1])), s);
    }
    if (is_atom(head, "eff")) {
      if (s.items.size() != 2) fail(s, "expected (eff EFFECT)");
      return with_span(ty_effect(effect(s.items[1])), s);
    }
    // type application, folded left
    TypePtr t = type(head);
    for (std::size_t i = 1; i < s.items.size(); ++i) t = ty_app(t, type(s.items[i]));
    return with_span(t, s);
  }

  TermPtr term(const Sexp& s) const {
    if (s.is_atom) {
      if (s.atom == "true") return with_span(tm_true(), s);
      if (s.atom == "false") return with_span(tm_false(), s);
      if (s.atom == "_") return with_span(tm_var(fresh_name("_")), s);
      return with_span(tm_var(s.atom), s);
    }
    if (s.items.empty()) return with_span(tm_unit(), s);
    const Sexp& head = s.items[0];
    if (is_atom(head, "prim")) {
      if (s.items.size() != 2 || !s.items[1].is_atom) fail(s, "expected (prim NAME)");
      return with_span(tm_prim(s.items[1].atom), s);
    }
    if (is_atom(head, "lam")) {
      if (s.items.size() < 3) fail(s, "expected (lam BINDER [:eff EFFECT] BODY)");
      const Sexp& binder = s.items[1];
      std::string var;
      std::optional<TypePtr> arg_type;
      if (binder.is_atom) {
        var = binder.atom == "_" ? fresh_name("_") : binder.atom;
      } else {
        if (binder.items.size() != 2 || !binder.items[0].is_atom)
          fail(binder, "expected a (name TYPE) binder");
        var = binder.items[0].atom == "_" ? fresh_name("_") : binder.items[0].atom;
        arg_type = type(binder.items[1]);
      }
      std::size_t next = 2;
      std::optional<EffExpr> latent;
      if (next + 1 < s.items.size() && is_atom(s.items[next], ":eff")) {
        latent = effect(s.items[next + 1]);
        next += 2;
      }
      if (next + 1 != s.items.size()) fail(s, "expected (lam BINDER [:eff EFFECT] BODY)");
      return with_span(tm_lam(var, arg_type, latent, term(s.items[next])), s);
    }
    if (is_atom(head, "app")) {
      if (s.items.size() < 2) fail(s, "expected (app FN ARG...)");
      TermPtr t = term(s.items[1]);
      for (std::size_t i = 2; i < s.items.size(); ++i) t = tm_app(t, term(s.items[i]));
      return with_span(t, s);
    }
    if (is_atom(head, "tylam")) {
      if (s.items.size() != 5 || !s.items[1].is_atom || !is_atom(s.items[2], "::"))
        fail(s, "expected (tylam a :: KIND BODY)");
      return with_span(tm_tylam(s.items[1].atom, kind(s.items[3]), term(s.items[4])), s);
    }
    if (is_atom(head, "tyapp")) {
      if (s.items.size() < 3) fail(s, "expected (tyapp FN TYPE...)");
      TermPtr t = term(s.items[1]);
      for (std::size_t i = 2; i < s.items.size(); ++i) t = tm_tyapp(t, type(s.items[i]));
      return with_span(t, s);
    }
    if (is_atom(head, "if")) {
      if (s.items.size() != 4) fail(s, "expected (if COND THEN ELSE)");
      return with_span(tm_if(term(s.items[1]), term(s.items[2]), term(s.items[3])), s);
    }
    if (is_atom(head, "while")) {
      if (s.items.size() != 3) fail(s, "expected (while COND BODY)");
      return with_span(tm_while(term(s.items[1]), term(s.items[2])), s);
    }
    if (is_atom(head, "seq")) {
      if (s.items.size() < 3) fail(s, "expected (seq E1 E2...)");
      TermPtr t = term(s.items[s.items.size() - 1]);
      for (std::size_t i = s.items.size() - 1; i-- > 1;) t = tm_seq(term(s.items[i]), t);
      return with_span(t, s);
    }
    if (is_atom(head, "let")) {
      if (s.items.size() != 3 || s.items[1].is_atom || s.items[1].items.size() != 2 ||
          !s.items[1].items[0].is_atom)
        fail(s, "expected (let (x EXPR) BODY)");
      const std::string& var = s.items[1].items[0].atom;
      return with_span(tm_let(var == "_" ? fresh_name("_") : var, term(s.items[1].items[1]),
                              term(s.items[2])),
                       s);
    }
    fail(head, head.is_atom ? "unknown form '" + head.atom + "'" : "expected a keyword form");
  }

 private:
  template <class P>
  P with_span(P p, const Sexp& s) const {
    using E = std::remove_const_t<typename P::element_type>;
    auto copy = std::make_shared<E>(*p);
    copy->span = {s.line, s.col};
    return copy;
  }
};

}  // namespace

TermPtr parse_program(std::string_view text, const LanguageParams& params) {
  Lexer lex{text};
  Sexp s = lex.next();
  if (!lex.done()) throw ParseError("trailing input after the program", lex.line, lex.col);
  return AstBuilder{params}.term(s);
}

TypePtr parse_type_text(std::string_view text, const LanguageParams& params) {
  Lexer lex{text};
  Sexp s = lex.next();
  if (!lex.done()) throw ParseError("trailing input after the type", lex.line, lex.col);
  return AstBuilder{params}.type(s);
}

}  // namespace eq
