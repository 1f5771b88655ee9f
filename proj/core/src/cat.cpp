#include "eq/cat.hpp"

#include "eq/iteration.hpp"
#include "sexp.hpp"

namespace eq {

namespace {

[[noreturn]] void reject(const std::string& rule, const std::string& msg, SourceSpan span = {}) {
  throw CheckError(Diagnostic{rule, msg, span});
}

CatPtr mk(CatTerm t) { return std::make_shared<CatTerm>(std::move(t)); }

}  // namespace

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct CatBuilder {
  const LanguageParams& params;

  [[noreturn]] void fail(const sexp::Sexp& s, const std::string& what) const {
    throw ParseError(what, s.line, s.col);
  }

  bool is(const sexp::Sexp& s, const char* w) const { return s.is_atom && s.atom == w; }

  TypePtr type(const sexp::Sexp& s) const {
    // reuse the core type grammar
    std::string text = render(s);
    return parse_type_text(text, params);
  }

  static std::string render(const sexp::Sexp& s) {
    if (s.is_atom) return s.atom;
    std::string out = "(";
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      if (i) out += ' ';
      out += render(s.items[i]);
    }
    return out + ")";
  }

  struct Annotations {
    std::optional<std::string> lock;
    std::optional<TypePtr> type;
    std::optional<bool> race;
  };

  // parse trailing :key value pairs starting at index `from`
  Annotations annotations(const sexp::Sexp& s, std::size_t from) const {
    Annotations out;
    for (std::size_t i = from; i < s.items.size(); i += 2) {
      if (!s.items[i].is_atom || i + 1 >= s.items.size())
        fail(s.items[i], "expected :key value annotation pairs");
      const std::string& key = s.items[i].atom;
      const sexp::Sexp& val = s.items[i + 1];
      if (key == ":lock") {
        if (!val.is_atom) fail(val, ":lock expects a name");
        out.lock = val.atom;
      } else if (key == ":type") {
        out.type = type(val);
      } else if (key == ":race") {
        if (is(val, "#t"))
          out.race = true;
        else if (is(val, "#f"))
          out.race = false;
        else
          fail(val, ":race expects #t or #f");
      } else {
        fail(s.items[i], "unknown annotation '" + key + "'");
      }
    }
    return out;
  }

  std::size_t annotation_start(const sexp::Sexp& s, std::size_t from) const {
    for (std::size_t i = from; i < s.items.size(); ++i)
      if (s.items[i].is_atom && !s.items[i].atom.empty() && s.items[i].atom[0] == ':') return i;
    return s.items.size();
  }

  CatPtr term(const sexp::Sexp& s) const {
    SourceSpan span{s.line, s.col};
    if (s.is_atom) {
      if (s.atom == "true") return mk({CatConst{tm_true()}, span});
      if (s.atom == "false") return mk({CatConst{tm_false()}, span});
      return mk({CatVar{s.atom}, span});
    }
    if (s.items.empty()) return mk({CatConst{tm_unit()}, span});
    const sexp::Sexp& head = s.items[0];
    if (is(head, "loc")) {
      if (s.items.size() != 2 || !s.items[1].is_atom) fail(s, "expected (loc NAME)");
      return mk({CatLoc{s.items[1].atom}, span});
    }
    if (is(head, "fun")) {
      if (s.items.size() != 4 || !s.items[1].is_atom) fail(s, "expected (fun f ((x TYPE)...) BODY)");
      CatFun fun;
      fun.name = s.items[1].atom;
      const sexp::Sexp& ps = s.items[2];
      if (ps.is_atom) fail(ps, "expected a parameter list");
      for (const auto& p : ps.items) {
        if (p.is_atom || p.items.size() != 2 || !p.items[0].is_atom)
          fail(p, "expected an (x TYPE) parameter");
        fun.params.push_back({p.items[0].atom, type(p.items[1])});
      }
      fun.body = term(s.items[3]);
      return mk({std::move(fun), span});
    }
    if (is(head, "prim")) {
      if (s.items.size() < 2 || !s.items[1].is_atom) fail(s, "expected (prim NAME ARGS...)");
      CatPrimApp app;
      app.prim = s.items[1].atom;
      std::size_t stop = annotation_start(s, 2);
      for (std::size_t i = 2; i < stop; ++i) app.args.push_back(term(s.items[i]));
      Annotations ann = annotations(s, stop);
      app.type_arg = ann.type;
      return mk({std::move(app), span});
    }
    if (is(head, "read")) {
      if (s.items.size() < 2 || !s.items[1].is_atom)
        fail(s, "expected (read x :lock l :type T :race #t/#f)");
      Annotations ann = annotations(s, 2);
      if (!ann.lock || !ann.type || !ann.race)
        fail(s, "read needs :lock, :type and :race annotations");
      return mk({CatRead{s.items[1].atom, *ann.race, *ann.lock, *ann.type}, span});
    }
    if (is(head, "assign")) {
      if (s.items.size() < 3 || !s.items[1].is_atom)
        fail(s, "expected (assign x EXPR :lock l :type T :race #t/#f)");
      Annotations ann = annotations(s, 3);
      if (!ann.lock || !ann.type || !ann.race)
        fail(s, "assign needs :lock, :type and :race annotations");
      return mk({CatAssign{s.items[1].atom, *ann.race, *ann.lock, *ann.type, term(s.items[2])},
                 span});
    }
    if (is(head, "let")) {
      if (s.items.size() != 3 || s.items[1].is_atom || s.items[1].items.size() != 2 ||
          !s.items[1].items[0].is_atom)
        fail(s, "expected (let (x EXPR) BODY)");
      return mk({CatLet{s.items[1].items[0].atom, term(s.items[1].items[1]), term(s.items[2])},
                 span});
    }
    if (is(head, "if")) {
      if (s.items.size() != 4) fail(s, "expected (if C T E)");
      return mk({CatIf{term(s.items[1]), term(s.items[2]), term(s.items[3])}, span});
    }
    if (is(head, "while")) {
      if (s.items.size() != 3) fail(s, "expected (while C B)");
      return mk({CatWhile{term(s.items[1]), term(s.items[2])}, span});
    }
    if (is(head, "invoke")) {
      if (s.items.size() < 3 || s.items[2].is_atom)
        fail(s, "expected (invoke FN (f...) ARGS...)");
      CatInvoke inv;
      inv.fn = term(s.items[1]);
      for (const auto& f : s.items[2].items) {
        if (!f.is_atom) fail(f, "expected a function name");
        inv.may_call.push_back(f.atom);
      }
      for (std::size_t i = 3; i < s.items.size(); ++i) inv.args.push_back(term(s.items[i]));
      return mk({std::move(inv), span});
    }
    if (is(head, "fork")) {
      if (s.items.size() != 2) fail(s, "expected (fork EXPR)");
      return mk({CatFork{term(s.items[1])}, span});
    }
    if (is(head, "atomic")) {
      if (s.items.size() != 2) fail(s, "expected (atomic EXPR)");
      return mk({CatAtomic{term(s.items[1])}, span});
    }
    fail(head, head.is_atom ? "unknown CAT form '" + head.atom + "'" : "expected a keyword form");
  }
};

}  // namespace

CatPtr parse_cat(std::string_view text, const LanguageParams& params) {
  sexp::Lexer lex{text};
  sexp::Sexp s = lex.next();
  if (!lex.done()) throw ParseError("trailing input after the CAT term", lex.line, lex.col);
  return CatBuilder{params}.term(s);
}

// ---------------------------------------------------------------------------
// The atomicity oracle

namespace {

struct CatChecker {
  const CatEnv& env;
  QuantalePtr q = atomicity_quantale();
  ClosureOperator star = closure(atomicity_quantale());

  Mover lookup(const std::string& name, SourceSpan span) const {
    auto it = env.find(name);
    if (it == env.end()) reject("EXP", "unbound function/primitive '" + name + "'", span);
    return it->second;
  }

  Elem seq(Elem a, Elem b) const { return q->seq(a, b); }

  Elem check(const CatTerm& t) const {
    return std::visit(
        [&](const auto& n) -> Elem {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, CatConst> || std::is_same_v<T, CatVar> ||
                        std::is_same_v<T, CatLoc>) {
            return atom(Mover::B);
          } else if constexpr (std::is_same_v<T, CatFun>) {
            Elem body = check(*n.body);
            Elem declared = atom(lookup(n.name, t.span));
            if (!q->leq(body, declared))
              reject("EXP FUN",
                     "body of '" + n.name + "' has atomicity " + q->render(body) +
                         ", above its declared " + q->render(declared),
                     t.span);
            return atom(Mover::B);
          } else if constexpr (std::is_same_v<T, CatPrimApp>) {
            Elem acc = atom(Mover::B);
            for (const auto& a : n.args) acc = seq(acc, check(*a));
            return seq(acc, atom(lookup(n.prim, t.span)));
          } else if constexpr (std::is_same_v<T, CatRead>) {
            return atom(n.racy ? Mover::A : Mover::B);
          } else if constexpr (std::is_same_v<T, CatAssign>) {
            return seq(check(*n.value), atom(n.racy ? Mover::A : Mover::B));
          } else if constexpr (std::is_same_v<T, CatLet>) {
            return seq(check(*n.bound), check(*n.body));
          } else if constexpr (std::is_same_v<T, CatIf>) {
            return seq(check(*n.cond), q->join(check(*n.then_branch), check(*n.else_branch)));
          } else if constexpr (std::is_same_v<T, CatWhile>) {
            Elem a1 = check(*n.cond);
            Elem a2 = check(*n.body);
            return seq(a1, star(seq(a2, a1)));
          } else if constexpr (std::is_same_v<T, CatInvoke>) {
            check(*n.fn);  // derived, but the published rule drops it
            Elem acc = atom(Mover::B);
            for (const auto& a : n.args) acc = seq(acc, check(*a));
            if (n.may_call.empty()) reject("EXP INVOKE", "empty call set", t.span);
            Elem fa = atom(lookup(n.may_call[0], t.span));
            for (std::size_t i = 1; i < n.may_call.size(); ++i)
              fa = q->join(fa, atom(lookup(n.may_call[i], t.span)));
            return seq(acc, fa);
          } else if constexpr (std::is_same_v<T, CatFork>) {
            check(*n.body);  // must be derivable, result discarded
            return atom(Mover::A);
          } else {
            Elem a = check(*n.body);
            if (!q->leq(a, atom(Mover::A)))
              reject("EXP ATOMIC",
                     "atomic block has atomicity " + q->render(a) + ", which is not below A",
                     t.span);
            return a;
          }
        },
        t.node);
  }
};

}  // namespace

Mover cat_check(const CatEnv& env, const CatTerm& t) {
  CatChecker checker{env};
  return std::get<Mover>(checker.check(t).payload);
}

// ---------------------------------------------------------------------------
// Translation

TermPtr wraplock(TermPtr e) {
  std::string x = fresh_name("wl");
  TermPtr body = tm_seq(tm_app(tm_prim("acquire"), tm_var(x)),
                        tm_seq(std::move(e), tm_seq(tm_app(tm_prim("release"), tm_var(x)),
                                                    tm_unit())));
  return tm_let(x, tm_app(tm_prim("new_lock"), tm_unit()), std::move(body));
}

namespace {

EffExpr atomic_latent(const LanguageParams& params) {
  return parse_effect("eff{{}=>{}⊗A}", *params.family);
}

struct Translator {
  const LanguageParams& params;

  TermPtr prim_spine(const std::string& prim, const std::vector<TermPtr>& args,
                     const std::optional<TypePtr>& type_arg, SourceSpan span) const {
    auto it = params.delta.find(prim);
    if (it == params.delta.end()) reject("translate", "unknown primitive '" + prim + "'", span);
    TermPtr out = tm_prim(prim);
    const TypeAst* t = it->second.get();
    std::size_t next_arg = 0;
    for (;;) {
      if (const auto* pi = std::get_if<TPi>(&t->node)) {
        if (next_arg >= args.size()) break;
        out = tm_app(out, args[next_arg++]);
        t = pi->result.get();
      } else if (const auto* fa = std::get_if<TForall>(&t->node)) {
        if (!type_arg)
          reject("translate", "primitive '" + prim + "' needs a :type annotation", span);
        out = tm_tyapp(out, *type_arg);
        t = fa->body.get();
      } else {
        break;
      }
    }
    if (next_arg != args.size())
      reject("translate", "too many arguments for primitive '" + prim + "'", span);
    return out;
  }

  TermPtr translate(const CatTerm& t) const {
    return std::visit(
        [&](const auto& n) -> TermPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, CatConst>) {
            return n.value;
          } else if constexpr (std::is_same_v<T, CatVar>) {
            return tm_var(n.name);
          } else if constexpr (std::is_same_v<T, CatLoc>) {
            return tm_prim(n.name);
          } else if constexpr (std::is_same_v<T, CatFun>) {
            TermPtr body = translate(*n.body);
            for (auto it = n.params.rbegin(); it != n.params.rend(); ++it)
              body = tm_lam(it->first, it->second, std::nullopt, body);
            return body;
          } else if constexpr (std::is_same_v<T, CatPrimApp>) {
            std::vector<TermPtr> args;
            for (const auto& a : n.args) args.push_back(translate(*a));
            return prim_spine(n.prim, args, n.type_arg, t.span);
          } else if constexpr (std::is_same_v<T, CatRead>) {
            return prim_spine(n.racy ? "read_racy" : "read_sync",
                              {tm_var(n.lock), tm_var(n.var)}, n.type, t.span);
          } else if constexpr (std::is_same_v<T, CatAssign>) {
            return prim_spine(n.racy ? "write_racy" : "write_sync",
                              {tm_var(n.lock), tm_var(n.var), translate(*n.value)}, n.type,
                              t.span);
          } else if constexpr (std::is_same_v<T, CatLet>) {
            return tm_let(n.var, translate(*n.bound), translate(*n.body));
          } else if constexpr (std::is_same_v<T, CatIf>) {
            return tm_if(translate(*n.cond), translate(*n.then_branch),
                         translate(*n.else_branch));
          } else if constexpr (std::is_same_v<T, CatWhile>) {
            return tm_while(translate(*n.cond), translate(*n.body));
          } else if constexpr (std::is_same_v<T, CatInvoke>) {
            TermPtr out = translate(*n.fn);
            for (const auto& a : n.args) out = tm_app(out, translate(*a));
            return out;
          } else if constexpr (std::is_same_v<T, CatFork>) {
            // let _ = (λ_. ⟦e⟧) in wraplock ()
            TermPtr thunk =
                tm_lam(fresh_name("_"), ty_unit(), std::nullopt, translate(*n.body));
            return tm_let(fresh_name("_"), std::move(thunk), wraplock(tm_unit()));
          } else {
            // req_atomic (λ_. wraplock ⟦e⟧); ⟦e⟧  — the thunk is never run, the
            // duplicate is evaluated directly so the block keeps its atomicity
            TermPtr copy = translate(*n.body);
            TermPtr thunk = tm_lam(fresh_name("_"), ty_bool(), atomic_latent(params),
                                   wraplock(translate(*n.body)));
            return tm_seq(tm_app(tm_prim("req_atomic"), std::move(thunk)), std::move(copy));
          }
        },
        t.node);
  }
};

}  // namespace

TermPtr translate_cat(const CatTerm& t, const LanguageParams& params) {
  return Translator{params}.translate(t);
}

// ---------------------------------------------------------------------------
// Environment construction and the differential check

namespace {

/// Atomicity component of the final latent effect of a (curried) type.
std::optional<Mover> final_latent_atomicity(const LanguageParams& params, const TypePtr& type) {
  const TypeAst* t = type.get();
  const EffExpr* last = nullptr;
  for (;;) {
    if (const auto* pi = std::get_if<TPi>(&t->node)) {
      last = &pi->latent;
      t = pi->result.get();
    } else if (const auto* fa = std::get_if<TForall>(&t->node)) {
      last = &fa->latent;
      t = fa->body.get();
    } else {
      break;
    }
  }
  if (!last) return std::nullopt;
  NormalForm nf = normalize(*last);
  auto inst = params.family->instantiate(effect_names(*last));
  auto ground = nf_ground(nf, inst);
  if (!ground) return std::nullopt;
  return atomicity_of(*ground);
}

void collect_funs(const CatTerm& t, std::vector<const CatFun*>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, CatFun>) {
          out.push_back(&n);
          collect_funs(*n.body, out);
        } else if constexpr (std::is_same_v<T, CatPrimApp>) {
          for (const auto& a : n.args) collect_funs(*a, out);
        } else if constexpr (std::is_same_v<T, CatAssign>) {
          collect_funs(*n.value, out);
        } else if constexpr (std::is_same_v<T, CatLet>) {
          collect_funs(*n.bound, out);
          collect_funs(*n.body, out);
        } else if constexpr (std::is_same_v<T, CatIf>) {
          collect_funs(*n.cond, out);
          collect_funs(*n.then_branch, out);
          collect_funs(*n.else_branch, out);
        } else if constexpr (std::is_same_v<T, CatWhile>) {
          collect_funs(*n.cond, out);
          collect_funs(*n.body, out);
        } else if constexpr (std::is_same_v<T, CatInvoke>) {
          collect_funs(*n.fn, out);
          for (const auto& a : n.args) collect_funs(*a, out);
        } else if constexpr (std::is_same_v<T, CatFork>) {
          collect_funs(*n.body, out);
        } else if constexpr (std::is_same_v<T, CatAtomic>) {
          collect_funs(*n.body, out);
        }
      },
      t.node);
}

}  // namespace

CatEnv build_cat_env(const CatTerm& t, const LanguageParams& params, std::string* problems) {
  CatEnv env;
  for (const auto& [name, type] : params.delta) {
    auto m = final_latent_atomicity(params, type);
    if (m) env[name] = *m;
  }
  std::vector<const CatFun*> funs;
  collect_funs(t, funs);
  for (const CatFun* f : funs) {
    try {
      CatTerm node{CatFun{*f}, {}};
      TermPtr closure_term = translate_cat(node, params);
      TypingResult r = type_of(params, TypeEnv{}, closure_term, nullptr);
      auto m = final_latent_atomicity(params, r.type);
      if (m) {
        env[f->name] = *m;
      } else if (problems) {
        *problems += "function '" + f->name + "' has a non-ground latent effect; ";
      }
    } catch (const CheckError& e) {
      if (problems)
        *problems += "function '" + f->name + "' does not translate/type: " +
                     e.diagnostic.message + "; ";
    }
  }
  // Functions whose translation the core rejects (the system is lock-blind)
  // still need a declared atomicity for the oracle; take the least derivable
  // atomicity of the body. Inner functions first, iterating in case bodies
  // invoke one another.
  for (std::size_t pass = 0; pass <= funs.size(); ++pass) {
    bool progress = false;
    for (auto it = funs.rbegin(); it != funs.rend(); ++it) {
      const CatFun* f = *it;
      if (env.count(f->name)) continue;
      try {
        CatEnv probe = env;
        probe[f->name] = Mover::TopFQ;  // self references bound loosely
        Mover m = cat_check(probe, *f->body);
        env[f->name] = m;
        progress = true;
      } catch (const CheckError&) {
      }
    }
    if (!progress) break;
  }
  return env;
}

DifferentialReport unembed_check(const LanguageParams& params, const CatTerm& t) {
  DifferentialReport report;
  report.env = build_cat_env(t, params, &report.detail);

  try {
    TermPtr core = translate_cat(t, params);
    TypingResult r = type_of(params, TypeEnv{}, core, nullptr);
    report.core_accepts = true;
    report.core_effect = render_effect(r.effect);
    auto inst = params.family->instantiate(effect_names(r.effect));
    if (auto ground = nf_ground(r.effect_nf, inst)) report.core_atomicity = atomicity_of(*ground);
  } catch (const Error& e) {
    report.core_error = e.what();
  }

  try {
    report.cat_atomicity = cat_check(report.env, t);
    report.cat_accepts = true;
  } catch (const CheckError& e) {
    report.cat_error = e.diagnostic.message;
  }

  if (report.core_accepts && report.cat_accepts) {
    report.agree = report.core_atomicity.has_value() &&
                   *report.core_atomicity == *report.cat_atomicity;
    if (!report.agree)
      report.detail += "atomicity components differ between the core typing and the oracle; ";
  } else if (!report.core_accepts && !report.cat_accepts) {
    report.agree = true;  // joint rejection
  } else if (!report.core_accepts && report.cat_accepts) {
    // The oracle is lock-blind. An Err-effect rejection can only come from the
    // lock component (the atomicity table never reaches Err from non-Err
    // operands), so this divergence is the expected lock-discipline one.
    report.expected_divergence =
        report.core_error.find("error element") != std::string::npos;
    report.detail += report.expected_divergence
                         ? "core rejects on lock discipline; the lock-blind oracle accepts; "
                         : "core rejects for a non-lock reason the oracle missed; ";
  } else {
    report.detail += "oracle rejects but the core typing accepts; ";
  }
  return report;
}

DifferentialReport unembed_check(const LanguageParams& params, std::string_view text) {
  return unembed_check(params, *parse_cat(text, params));
}

}  // namespace eq
