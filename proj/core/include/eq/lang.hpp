#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eq/effects.hpp"

namespace eq {

struct ParseError : Error {
  ParseError(const std::string& msg, int line, int col)
      : Error(msg + " at " + std::to_string(line) + ":" + std::to_string(col)),
        line(line),
        col(col) {}
  int line;
  int col;
};

struct SourceSpan {
  int line = 0;
  int col = 0;
};

// ---------------------------------------------------------------------------
// Kinds

class Kind {
 public:
  enum class Tag { Star, Eff, Arrow };

  static Kind star();
  static Kind eff();
  static Kind arrow(Kind from, Kind to);

  Tag tag() const { return node_->tag; }
  Kind from() const;
  Kind to() const;

  bool operator==(const Kind& other) const;
  std::string render() const;

 private:
  struct Node {
    Tag tag;
    std::shared_ptr<const Node> a, b;
  };
  explicit Kind(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Types and terms

struct TypeAst;
struct TermAst;
using TypePtr = std::shared_ptr<const TypeAst>;
using TermPtr = std::shared_ptr<const TermAst>;

struct TName {
  std::string name;
};  // type variable or primitive type family
struct TBool {};
struct TUnit {};
struct TEffect {
  EffExpr effect;
};  // an effect used as a type of kind E
struct TApp {
  TypePtr fn, arg;
};
struct TPi {
  std::string var;
  TypePtr arg;
  EffExpr latent;
  TypePtr result;
};
struct TForall {
  std::string var;
  Kind kind;
  EffExpr latent;
  TypePtr body;
};
struct TSingleton {
  TermPtr value;
};

struct TypeAst {
  std::variant<TName, TBool, TUnit, TEffect, TApp, TPi, TForall, TSingleton> node;
  SourceSpan span;
};

struct TmVar {
  std::string name;
};
struct TmPrim {
  std::string name;
};
struct TmTrue {};
struct TmFalse {};
struct TmUnitVal {};
struct TmLam {
  std::string var;
  std::optional<TypePtr> arg_type;    // required except in immediate application
  std::optional<EffExpr> latent_ann;  // declared latent effect; defaults to the synthesized one
  TermPtr body;
};
struct TmApp {
  TermPtr fn, arg;
};
struct TmIf {
  TermPtr cond, then_branch, else_branch;
};
struct TmWhile {
  TermPtr cond, body;
};
struct TmTyLam {
  std::string var;
  Kind kind;
  TermPtr body;
};
struct TmTyApp {
  TermPtr fn;
  TypePtr arg;
};

struct TermAst {
  std::variant<TmVar, TmPrim, TmTrue, TmFalse, TmUnitVal, TmLam, TmApp, TmIf, TmWhile, TmTyLam,
               TmTyApp>
      node;
  SourceSpan span;
};

// Node constructors
TypePtr ty_name(std::string name);
TypePtr ty_bool();
TypePtr ty_unit();
TypePtr ty_effect(EffExpr e);
TypePtr ty_app(TypePtr fn, TypePtr arg);
TypePtr ty_pi(std::string var, TypePtr arg, EffExpr latent, TypePtr result);
TypePtr ty_arrow(TypePtr arg, EffExpr latent, TypePtr result);  // pi with an unused binder
TypePtr ty_forall(std::string var, Kind kind, EffExpr latent, TypePtr body);
TypePtr ty_singleton(TermPtr value);

TermPtr tm_var(std::string name);
TermPtr tm_prim(std::string name);
TermPtr tm_true();
TermPtr tm_false();
TermPtr tm_unit();
TermPtr tm_lam(std::string var, std::optional<TypePtr> arg_type, std::optional<EffExpr> latent,
               TermPtr body);
TermPtr tm_app(TermPtr fn, TermPtr arg);
TermPtr tm_if(TermPtr c, TermPtr t, TermPtr e);
TermPtr tm_while(TermPtr c, TermPtr b);
TermPtr tm_tylam(std::string var, Kind kind, TermPtr body);
TermPtr tm_tyapp(TermPtr fn, TypePtr arg);
/// e1 ; e2 — sugar for (app (lam _ e2) e1).
TermPtr tm_seq(TermPtr first, TermPtr rest);
/// let x = e1 in e2 — sugar for (app (lam x e2) e1).
TermPtr tm_let(std::string var, TermPtr bound, TermPtr body);

/// Globally fresh name derived from the hint; never collides with parsed
/// identifiers (uses '%').
std::string fresh_name(const std::string& hint);

std::string render_term(const TermAst& t);
std::string render_type(const TypeAst& t);

// Free variables, per stratum. Term-variable occurrences include names
// mentioned by effect payloads (e.g. locks) and singleton values.
NameSet free_term_vars(const TermAst& t);
NameSet free_term_vars(const TypeAst& t);
NameSet free_type_vars(const TermAst& t);
NameSet free_type_vars(const TypeAst& t);
/// Union over every stratum, for the Fig.-style side conditions.
NameSet free_vars(const TermAst& t);
NameSet free_vars(const TypeAst& t);
NameSet free_vars(const EffExpr& e);

// ---------------------------------------------------------------------------
// Language parameters

struct AbstractState {
  virtual ~AbstractState() = default;
  virtual std::string describe() const = 0;
};
using StatePtr = std::shared_ptr<const AbstractState>;

struct SigmaEntry {
  std::string name;
  TypePtr type;
};

/// Runtime state-type environment Σ: the source typing δ extended with
/// runtime-introduced names, ordered by extension.
struct StateTypeEnv {
  std::vector<SigmaEntry> entries;

  const TypePtr* lookup(const std::string& name) const;
  bool contains(const std::string& name) const { return lookup(name) != nullptr; }
  StateTypeEnv extended(std::string name, TypePtr type) const;
  NameSet names() const;

  /// Partial-function extension order (domains grow, entries agree).
  static bool leq(const StateTypeEnv& a, const StateTypeEnv& b);
};

struct SpineArg {
  std::variant<TermPtr, TypePtr> v;
  bool is_term() const { return std::holds_alternative<TermPtr>(v); }
  const TermPtr& term() const { return std::get<TermPtr>(v); }
  const TypePtr& type() const { return std::get<TypePtr>(v); }
};

struct PrimSpine {
  std::string prim;
  std::vector<SpineArg> args;
};

struct PrimResult {
  TermPtr value;
  Elem effect;  // ground dynamic effect, in the instance indexed by current names
  StatePtr state;
  std::vector<SigmaEntry> sigma_ext;  // runtime names introduced by this step
};

struct LanguageParams;

/// Partial primitive semantics: defined only on fully applied spines.
using PrimSemantics =
    std::function<std::optional<PrimResult>(const LanguageParams&, const PrimSpine&,
                                            const StatePtr&)>;

struct LanguageParams {
  FamilyPtr family;                           // Q(X)
  std::map<std::string, Kind> type_families;  // K over the T_i
  std::map<std::string, TypePtr> delta;       // source types of primitives
  PrimSemantics prim_semantics;
  StatePtr initial_state;
  /// Values of these types index the effect quantale (e.g. lock).
  std::function<bool(const TypeAst&)> is_index_type;
  /// Q ⊢ σ : Σ.
  std::function<bool(const LanguageParams&, const StatePtr&, const StateTypeEnv&,
                     std::string* why)>
      state_typing;

  StateTypeEnv delta_sigma() const;  // δ as the least state-type environment
};

/// Number of value/type arguments a primitive's δ type expects.
int delta_arity(const LanguageParams& params, const std::string& prim);

/// View a term as a primitive application spine (prim applied to term/type
/// arguments, left-nested).
std::optional<PrimSpine> as_prim_spine(const TermPtr& t);

/// Values: primitives, partially applied primitive spines, lambdas, variables,
/// booleans, type-lambdas, unit.
bool is_value(const TermAst& t, const LanguageParams& params);

// ---------------------------------------------------------------------------
// Parsing

TermPtr parse_program(std::string_view text, const LanguageParams& params);
TypePtr parse_type_text(std::string_view text, const LanguageParams& params);

}  // namespace eq
