#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eq/algebra.hpp"
#include "eq/iteration.hpp"

namespace eq {

struct EffectError : Error {
  using Error::Error;
};

/// Symbolic effect expression: quantale literals, effect variables, join,
/// sequencing and iteration. Unit and Err are literal forms.
class EffExpr {
 public:
  enum class Tag { Lit, Var, Join, Seq, Star };

  static EffExpr lit(Elem e);
  static EffExpr var(std::string name);
  static EffExpr join(EffExpr a, EffExpr b);
  static EffExpr seq(EffExpr a, EffExpr b);
  static EffExpr star(EffExpr a);

  Tag tag() const;
  const Elem& literal() const;
  const std::string& var_name() const;
  EffExpr lhs() const;
  EffExpr rhs() const;
  EffExpr body() const;

  /// Owning instance of the first literal, if any.
  QuantalePtr instance() const;

 private:
  struct Node;
  explicit EffExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct NfAtom;

/// Canonical form: a duplicate-free, sorted join of sequences of atoms.
/// The empty sequence is the unit effect; a ground expression always collapses
/// to a single literal (or the empty sequence).
struct NormalForm {
  std::vector<std::vector<NfAtom>> alts;
};

struct NfAtom {
  std::optional<Elem> lit;
  std::optional<std::string> var;
  std::shared_ptr<const NormalForm> star;
};

/// Rewrite to the canonical form: distribute seq over join, drop units, absorb
/// through Err, fuse adjacent literals, flatten joins, and apply the star
/// rules (star of star, star of unit, star of a literal via the instance's
/// closure operator, join-with-star absorption).
/// Throws EffectError for star over a ground literal whose instance has no
/// closure operator, and UsageError for mixed-instance expressions.
NormalForm normalize(const EffExpr& e);

bool nf_equal(const NormalForm& a, const NormalForm& b);
std::strong_ordering nf_cmp(const NormalForm& a, const NormalForm& b);
bool nf_is_unit(const NormalForm& n);
/// The literal value of a ground normal form (empty for symbolic forms).
std::optional<Elem> nf_ground(const NormalForm& n, const QuantalePtr& q);

std::string render_effect(const EffExpr& e);
std::string render_nf(const NormalForm& n, const QuantalePtr& q);
EffExpr nf_to_expr(const NormalForm& n, const QuantalePtr& q);

enum class Subsumption { Yes, No, Unknown };

/// Sound subeffect test: Yes when join(a, b) normalizes to b's normal form;
/// No when both sides are ground and the instance order refutes it; Unknown
/// otherwise. Yes is sound for every ground substitution.
Subsumption subeffect(const EffExpr& a, const EffExpr& b);

bool is_ground(const EffExpr& e);
/// Direct fold of the instance operations; the normalization oracle.
/// Throws EffectError on variables.
Elem eval_ground(const EffExpr& e);

/// Substitute an effect expression for an effect variable.
EffExpr subst_effect_var(const EffExpr& e, const std::string& var, const EffExpr& replacement);

/// Value substitution: rename `from` to `to` inside literal payloads,
/// transported through the family (collapsing claims when `to` is already
/// mentioned). Literals not mentioning `from` are left in place.
EffExpr subst_effect_name(const EffExpr& e, const std::string& from, const std::string& to,
                          const IndexedFamily& family);

struct EffectBinding {
  std::string name;
  std::variant<EffExpr, std::string> replacement;  // expression for 𝓔 variables, value name otherwise
};

EffExpr subst_effect(const EffExpr& e, const EffectBinding& binding,
                     const IndexedFamily* family = nullptr);

/// Transport every literal into the instance indexed by `scope` (an inclusion;
/// all mentioned names must lie inside the scope).
EffExpr rescope_effect(const EffExpr& e, const IndexedFamily& family, const NameSet& scope);

/// Names mentioned by literal payloads (term-level, e.g. lock names).
NameSet effect_names(const EffExpr& e);
/// Free effect variables.
NameSet effect_vars(const EffExpr& e);

/// Surface syntax: `eff{...}` literals (payload per instance renderer), `I`
/// for the unit literal, identifiers for effect variables, `a | b` join,
/// `a ; b` sequencing, postfix `a*`, parentheses.
EffExpr parse_effect(std::string_view text, const IndexedFamily& family);

}  // namespace eq
