#pragma once

#include "eq/locking.hpp"

namespace eq {

// CAT terms, with the lock/type annotations the original system assumes some
// other analysis has produced made explicit on every heap access.

struct CatTerm;
using CatPtr = std::shared_ptr<const CatTerm>;

struct CatConst {
  TermPtr value;  // true | false | ()
};
struct CatVar {
  std::string name;
};
struct CatLoc {
  std::string name;
};
struct CatFun {
  std::string name;
  std::vector<std::pair<std::string, TypePtr>> params;
  CatPtr body;
};
struct CatPrimApp {
  std::string prim;
  std::vector<CatPtr> args;
  std::optional<TypePtr> type_arg;  // fills the primitive's quantifier slot
};
struct CatRead {
  std::string var;
  bool racy;
  std::string lock;  // LockFor(var)
  TypePtr type;      // RefTypeOf(var)
};
struct CatAssign {
  std::string var;
  bool racy;
  std::string lock;
  TypePtr type;
  CatPtr value;
};
struct CatLet {
  std::string var;
  CatPtr bound;
  CatPtr body;
};
struct CatIf {
  CatPtr cond, then_branch, else_branch;
};
struct CatWhile {
  CatPtr cond, body;
};
struct CatInvoke {
  CatPtr fn;
  std::vector<std::string> may_call;  // the declared F set
  std::vector<CatPtr> args;
};
struct CatFork {
  CatPtr body;
};
struct CatAtomic {
  CatPtr body;
};

struct CatTerm {
  std::variant<CatConst, CatVar, CatLoc, CatFun, CatPrimApp, CatRead, CatAssign, CatLet, CatIf,
               CatWhile, CatInvoke, CatFork, CatAtomic>
      node;
  SourceSpan span;
};

/// Atomicities for every function and primitive name.
using CatEnv = std::map<std::string, Mover>;

CatPtr parse_cat(std::string_view text, const LanguageParams& params);

/// The least derivable atomicity per the published rules, using the atomicity
/// instance's join, seq and star. Throws CheckError when an atomic block's
/// body is not below A, or on unbound names.
Mover cat_check(const CatEnv& env, const CatTerm& t);

/// Translation into the core language: curried primitives, explicit
/// annotations on reads/writes, fork and atomic via the wraplock shorthand.
TermPtr translate_cat(const CatTerm& t, const LanguageParams& params);

/// let x = new_lock() in (acquire x; e; release x; ()).
TermPtr wraplock(TermPtr e);

/// Γ̂: primitive atomicities from δ's final latent effects, plus one entry per
/// function definition, taken from the final latent effect of its translated
/// n-ary closure.
CatEnv build_cat_env(const CatTerm& t, const LanguageParams& params, std::string* problems);

struct DifferentialReport {
  bool core_accepts = false;
  std::string core_effect;  // rendered product effect when accepted
  std::optional<Mover> core_atomicity;
  std::string core_error;
  bool cat_accepts = false;
  std::optional<Mover> cat_atomicity;
  std::string cat_error;
  bool agree = false;                // same verdict, and same atomicity when accepting
  bool expected_divergence = false;  // core rejected on lock discipline alone
  CatEnv env;
  std::string detail;
};

DifferentialReport unembed_check(const LanguageParams& params, const CatTerm& t);
DifferentialReport unembed_check(const LanguageParams& params, std::string_view text);

}  // namespace eq
