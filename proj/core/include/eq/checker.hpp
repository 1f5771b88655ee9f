#pragma once

#include "eq/lang.hpp"

namespace eq {

struct Diagnostic {
  std::string rule;
  std::string message;
  SourceSpan span;
};

struct CheckError : Error {
  explicit CheckError(Diagnostic d) : Error(d.message), diagnostic(std::move(d)) {}
  Diagnostic diagnostic;
};

struct TraceNode {
  std::string rule;
  std::string judgment;
  std::vector<TraceNode> children;
};

struct TypingResult {
  TypePtr type;
  EffExpr effect;  // normalized, scoped to the environment's instance
  NormalForm effect_nf;
  TraceNode trace;
};

/// Ordered telescope of term and type bindings.
class TypeEnv {
 public:
  struct Entry {
    std::string name;
    bool is_term;
    TypePtr type;  // for term bindings
    std::optional<Kind> kind;
  };

  TypeEnv pushed_term(std::string name, TypePtr type) const;
  TypeEnv pushed_type(std::string name, Kind kind) const;
  const TypePtr* lookup_term(const std::string& name) const;
  const Kind* lookup_type(const std::string& name) const;
  bool bound(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Names in scope that index the effect quantale: term variables of index
/// type in Γ plus (in runtime mode) Σ entries of index type.
NameSet index_scope(const LanguageParams& params, const TypeEnv& env, const StateTypeEnv* sigma);

Kind kind_of(const LanguageParams& params, const TypeEnv& env, const TypePtr& type,
             const StateTypeEnv* sigma = nullptr);

/// Source typing (sigma null) or runtime typing (sigma supplied: primitives
/// are typed from Σ and effects may mention runtime names).
TypingResult type_of(const LanguageParams& params, const TypeEnv& env, const TermPtr& term,
                     const StateTypeEnv* sigma = nullptr);

struct CheckOutcome {
  std::optional<TypingResult> result;
  std::vector<Diagnostic> diagnostics;
  TermPtr term;  // parsed term when parsing succeeded
  bool ok() const { return result.has_value(); }
};

CheckOutcome check_program(const LanguageParams& params, std::string_view text);

// Capture-avoiding substitution of a value for a term variable; effects inside
// types are transported through the family's collapse/include homomorphisms.
TermPtr subst_term(const TermPtr& e, const TermPtr& v, const std::string& x,
                   const FamilyPtr& family);
TypePtr subst_term_in_type(const TypePtr& t, const TermPtr& v, const std::string& x,
                           const FamilyPtr& family);
EffExpr subst_term_in_effect(const EffExpr& g, const TermPtr& v, const std::string& x,
                             const FamilyPtr& family);

TermPtr subst_type_in_term(const TermPtr& e, const TypePtr& t, const std::string& alpha,
                           const FamilyPtr& family);
TypePtr subst_type_in_type(const TypePtr& body, const TypePtr& t, const std::string& alpha,
                           const FamilyPtr& family);
/// Types may not appear inside effects; only effect-kinded type variables do.
EffExpr subst_type_in_effect(const EffExpr& g, const TypePtr& t, const std::string& alpha);

/// Alpha equivalence with effect positions compared by normal form.
bool type_equal(const LanguageParams& params, const TypePtr& a, const TypePtr& b);

/// Check the parameter-bundle restrictions on δ: closed well-formed types,
/// no closed base types, unit latent effects on all but the last arrow.
std::vector<std::string> validate_params(const LanguageParams& params);

}  // namespace eq
