#pragma once

#include "eq/algebra.hpp"

namespace eq {

/// Flanagan-Qadeer atomicity movers: the five-point lattice B < {L,R} < A < TOP
/// with Err on top, and `;` from the published composition table.
QuantalePtr atomicity_quantale();

Elem atom(Mover m);

Elem atomicity_join(const Elem& a, const Elem& b);
Elem atomicity_seq(const Elem& a, const Elem& b);

/// Lockset quantale over multisets of named lock claims: elements are
/// (pre, post) claim pairs plus Err. seq threads claims through, join requires
/// equal acquire/release deltas.
QuantalePtr lockset_quantale(const NameSet& locks);

/// Indexed, monotone, collapsible family over lock name sets.
FamilyPtr lockset_family();

/// The set-based variant (claims capped at one, recursive acquisition is Err).
/// An effect quantale for a fixed lock set, but not collapsible as a family.
FamilyPtr lockset_set_variant();
QuantalePtr lockset_set_quantale(const NameSet& locks);

Elem lock_eff(const QuantalePtr& q, Multiset pre, Multiset post);
Elem lock_err(const QuantalePtr& q);

Elem lockset_join(const Elem& a, const Elem& b);
Elem lockset_seq(const Elem& a, const Elem& b);

/// Commutative powerset instance (sets of exception-style tags under union).
QuantalePtr powerset_quantale(const NameSet& universe);

/// All lock effects with claims drawn from `locks`, every multiplicity at most
/// `max_mult`, plus Err. Not closed under the operations; for bounded checks.
std::vector<Elem> enumerate_lock_effects(const QuantalePtr& q, const NameSet& locks, int max_mult);

}  // namespace eq
