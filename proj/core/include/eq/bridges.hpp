#pragma once

#include "eq/algebra.hpp"
#include "eq/iteration.hpp"

namespace eq {

/// Relational presentation of sequential effects: a Base predicate, an order,
/// and a ternary sequencing relation over a finite carrier, with the Identity,
/// Associativity and Reflexive Congruence laws.
struct Effectoid {
  std::string name;
  std::vector<Elem> carrier;
  std::vector<char> base;       // Base(i)
  std::vector<char> le;         // i <= j, row-major
  std::vector<char> seq3;       // i ⨾ j -> k, carrier^3

  std::size_t size() const { return carrier.size(); }
  bool le_at(std::size_t i, std::size_t j) const { return le[i * size() + j] != 0; }
  bool seq_at(std::size_t i, std::size_t j, std::size_t k) const {
    return seq3[(i * size() + j) * size() + k] != 0;
  }
};

struct EffectoidLawReport {
  PropertyResult identity;
  PropertyResult associativity;
  PropertyResult reflexive_congruence;
  bool all_pass() const {
    return identity.pass && associativity.pass && reflexive_congruence.pass;
  }
};

/// Erase the top of a finite, nontrivial quantale: Base(a) iff I ⊑ a, a ≤ b
/// iff a ⊑ b, and a⨾b -> c iff a|>b ⊑ c with neither a|>b nor c equal to top.
Effectoid quantale_to_effectoid(const QuantalePtr& q);

/// Extend a finite quantale with a synthetic absorbing Err above its top.
/// Commutative instances have a meaningful top (e.g. the full exception set),
/// which erasure would otherwise delete.
QuantalePtr with_synthetic_err(const QuantalePtr& q);

EffectoidLawReport check_effectoid_laws(const Effectoid& e);

struct NotApplicable {
  std::string reason;
};

/// Rebuild a quantale from an effectoid with binary joins, a least centric
/// element, and principalled composition, adding a synthetic Err on top.
std::variant<QuantalePtr, NotApplicable> effectoid_to_quantale(const Effectoid& e);

struct RoundTrip {
  bool isomorphic = false;
  std::string detail;
};

/// Exhaustive check that reconstructing the quantale from its effectoid gives
/// an isomorphic instance (non-top elements map to themselves, Err to Err).
RoundTrip effectoid_round_trip(const QuantalePtr& q);

}  // namespace eq
