#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eq/algebra.hpp"

namespace eq {

struct PropertyResult {
  bool pass = true;
  std::vector<Elem> witness;  // empty when pass
  std::string note;
};

/// Iterability report: the freely iterable elements, the two clauses of the
/// iterable-quantale definition, and the P1-P5 suite for the induced operator.
struct IterReport {
  std::string instance;
  bool exact = false;  // computed from the instance's own (full) enumeration
  std::vector<Elem> iter_set;
  PropertyResult least_element_condition;
  PropertyResult join_closed;
  std::vector<std::pair<std::string, PropertyResult>> p_results;
};

/// a |> a = a.
bool is_freely_iterable(const QuantalePtr& q, const Elem& e);

/// The exact set of freely iterable elements; requires a finite enumeration.
std::vector<Elem> freely_iterable(const QuantalePtr& q);

IterReport iterability(const QuantalePtr& q);
/// Bounded variant over a supplied carrier subset (e.g. lock effects up to a
/// multiplicity bound).
IterReport iterability(const QuantalePtr& q, std::span<const Elem> carrier, bool exact = false);

struct ClosureError : ConstructionError {
  ClosureError(const std::string& msg, Elem w) : ConstructionError(msg), witness(std::move(w)) {}
  Elem witness;
};

/// Extensive, idempotent, monotone star operator with range inside the freely
/// iterable elements at or above unit.
class ClosureOperator {
 public:
  ClosureOperator(QuantalePtr q, std::function<Elem(const Elem&)> star)
      : q_(std::move(q)), star_(std::move(star)) {}

  const QuantalePtr& instance() const { return q_; }
  Elem star(const Elem& e) const { return star_(e); }
  Elem operator()(const Elem& e) const { return star_(e); }

 private:
  QuantalePtr q_;
  std::function<Elem(const Elem&)> star_;
};

/// Derive the iteration operator: star(x) = least element of
/// x-up ∩ unit-up ∩ Iter(Q). Uses the instance's analytic operator when
/// available, otherwise the enumerated least-element search. Throws
/// ClosureError (with the obstructing element) if some x has no least bound,
/// and ConstructionError if the carrier cannot be searched at all.
/// Join-closure of Iter(Q) is not required; P4 is reported, not assumed.
ClosureOperator closure(const QuantalePtr& q);

/// P1: e ⊑ e*; P2: e|>e* ⊑ e* and e*|>e ⊑ e*; P3: (e*)* = e*;
/// P4: (e⊔f)* = e*⊔f*; P5: I ⊑ e*. Exhaustive over the given elements.
std::vector<std::pair<std::string, PropertyResult>> check_star_properties(
    const ClosureOperator& star, std::span<const Elem> elems);

}  // namespace eq
