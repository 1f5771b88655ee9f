#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eq/elem.hpp"

namespace eq {

/// An effect quantale instance: a join semilattice with top plus a monoid whose
/// product distributes over joins on both sides, with the top nilpotent.
/// Instances are immutable and shareable; all operations may run concurrently.
class Quantale : public std::enable_shared_from_this<Quantale> {
 public:
  virtual ~Quantale() = default;

  /// Structural identity. Two instances with the same key are interchangeable
  /// (e.g. the lockset quantale re-instantiated at the same name set).
  const std::string& key() const { return key_; }
  const std::string& name() const { return name_; }

  Elem unit() const { return Elem{shared_from_this(), unit_}; }
  Elem top() const { return Elem{shared_from_this(), top_}; }

  Elem join(const Elem& a, const Elem& b) const;
  Elem seq(const Elem& a, const Elem& b) const;
  bool eq(const Elem& a, const Elem& b) const;
  /// Induced order: leq(a, b) iff join(a, b) = b.
  bool leq(const Elem& a, const Elem& b) const;

  bool is_unit(const Elem& a) const { return payload_eq(a.payload, unit_); }
  bool is_top(const Elem& a) const { return payload_eq(a.payload, top_); }

  Elem own(Payload p) const { return Elem{shared_from_this(), std::move(p)}; }

  /// All elements, for finite carriers.
  virtual std::optional<std::vector<Elem>> enumerate() const { return std::nullopt; }

  /// The name set this instance was indexed by, when it belongs to an indexed
  /// family (empty optional for constant instances).
  virtual std::optional<NameSet> index_names() const { return std::nullopt; }

  /// Payload names that participate in indexing (and therefore scoping and
  /// substitution). Constant instances return the empty set: their payload
  /// names (e.g. exception tags) are fixed constants, not value references.
  virtual NameSet indexed_payload_names(const Payload&) const { return {}; }

  virtual std::string render(const Elem& e) const = 0;
  virtual std::optional<Elem> parse_elem(std::string_view) const { return std::nullopt; }

  /// Iteration operator supplied in closed form, for carriers the generic
  /// least-element search cannot enumerate.
  virtual std::optional<Elem> analytic_star(const Elem& e) const { return std::nullopt; }

 protected:
  Quantale(std::string key, std::string name, Payload unit, Payload top)
      : key_(std::move(key)), name_(std::move(name)), unit_(std::move(unit)), top_(std::move(top)) {}

  virtual Payload join_payload(const Payload& a, const Payload& b) const = 0;
  virtual Payload seq_payload(const Payload& a, const Payload& b) const = 0;

  void require_owned(const Elem& e, const char* op) const;

 private:
  std::string key_;
  std::string name_;
  Payload unit_;
  Payload top_;
};

inline bool leq(const QuantalePtr& q, const Elem& a, const Elem& b) { return q->leq(a, b); }

/// A map between instances. `include` homomorphisms preserve all structure;
/// `collapse` maps are only required to reflect top (the collapsibility law).
struct Homomorphism {
  QuantalePtr source;
  QuantalePtr target;
  std::function<Elem(const Elem&)> map;
};

Elem apply_hom(const Homomorphism& h, const Elem& a);

/// A quantale parameterized by a name set, with transports for scope growth
/// (include) and for substitutions that identify two names (collapse).
class IndexedFamily : public std::enable_shared_from_this<IndexedFamily> {
 public:
  virtual ~IndexedFamily() = default;

  virtual std::string family_key() const = 0;
  virtual QuantalePtr instantiate(const NameSet& names) const = 0;

  /// Inclusion homomorphism Q(from) -> Q(to); requires from to be a subset of to.
  Homomorphism include(const NameSet& from, const NameSet& to) const;
  /// Collapse Q(base + extra) -> Q(base), sending `extra` to `target` in base.
  Homomorphism collapse(const NameSet& base, const std::string& extra,
                        const std::string& target) const;
  /// Rename `from` to `to` in Q(names): include into the widened set, then collapse.
  /// `to` may be fresh or already present.
  Homomorphism rename(const NameSet& names, const std::string& from, const std::string& to) const;

  /// Parse an element from its rendered form, instantiating at the mentioned names.
  virtual std::optional<Elem> parse_payload(std::string_view text) const = 0;

  /// Transport an element into `target`, applying `map` to every payload name.
  virtual Elem transport(const Elem& e, const QuantalePtr& target,
                         const std::function<std::string(const std::string&)>& map) const = 0;
};

using FamilyPtr = std::shared_ptr<const IndexedFamily>;

/// Constant family: ignores the name set (any plain quantale lifts to a
/// monotone, collapsible indexed quantale).
FamilyPtr constant_family(QuantalePtr q);

struct LawResult {
  std::string law;
  bool pass = true;
  std::vector<Elem> counterexample;  // empty when pass
  std::uint64_t cases = 0;
  bool exhaustive = false;
};

struct LawReport {
  std::string instance;
  std::vector<LawResult> laws;
  bool all_pass() const;
  const LawResult* failed(const std::string& law) const;
};

struct LawCheckConfig {
  std::uint64_t budget = 10000;          // sampled tuples per law when not exhaustive
  std::uint64_t seed = 0x5eed0eff;       // deterministic sampling
  std::uint64_t exhaustive_cap = 30000000;  // max tuple-space size checked exhaustively
};

/// Check the full law suite (join ACI + top absorption, monoid laws, top
/// nilpotence, both distributivity laws, isotonicity) over the given elements.
/// Laws whose tuple space fits under the cap are checked exhaustively,
/// otherwise by seeded sampling. Failures are data, not errors.
LawReport check_laws(const QuantalePtr& q, std::span<const Elem> samples,
                     const LawCheckConfig& cfg = {});
/// Convenience: uses the instance's own enumeration (usage error if absent).
LawReport check_laws(const QuantalePtr& q, const LawCheckConfig& cfg = {});

/// Bounded join semilattice described by an explicit finite carrier.
struct SemilatticeSpec {
  std::string key;
  std::string name;
  std::vector<Payload> carrier;
  std::function<Payload(const Payload&, const Payload&)> join;
  Payload bottom;
  Payload top;
  std::function<std::string(const Payload&)> render;
  std::function<std::optional<Payload>(std::string_view)> parse;
};

/// Lift a commutative effect system: reuse the join for sequencing, with the
/// bottom as unit. Construction error if `bottom` is not a unit for join.
QuantalePtr commutative_lift(SemilatticeSpec spec);

/// Product of two effect quantales: pairs of non-top elements plus a single
/// merged Err; operations pointwise, collapsing to Err whenever a component
/// operation yields its top.
QuantalePtr product(QuantalePtr lhs, QuantalePtr rhs);

/// Product of indexed families, instantiated pointwise.
FamilyPtr product_family(FamilyPtr lhs, FamilyPtr rhs);

/// Access the components of a product element (null components for Err).
const PairElem& pair_of(const Elem& e);

bool is_product(const QuantalePtr& q);
QuantalePtr product_lhs(const QuantalePtr& q);
QuantalePtr product_rhs(const QuantalePtr& q);
/// Pair two component elements in the given product instance, collapsing to Err
/// when either component is its instance's top.
Elem make_product_elem(const QuantalePtr& q, const Elem& a, const Elem& b);

/// Finite instance defined by explicit operation tables. Payloads are indices
/// into `labels`. Used for synthesized quantales (effectoid reconstruction)
/// and deliberately broken instances in tests.
struct TableSpec {
  std::string key;
  std::string name;
  std::vector<std::string> labels;
  std::vector<std::vector<std::int64_t>> join;  // labels.size() squared
  std::vector<std::vector<std::int64_t>> seq;
  std::int64_t unit = 0;
  std::int64_t top = 0;
};

QuantalePtr table_quantale(TableSpec spec);

}  // namespace eq
