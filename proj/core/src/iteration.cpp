#include "eq/iteration.hpp"

#include <algorithm>

namespace eq {

bool is_freely_iterable(const QuantalePtr& q, const Elem& e) {
  return q->eq(q->seq(e, e), e);
}

std::vector<Elem> freely_iterable(const QuantalePtr& q) {
  auto all = q->enumerate();
  if (!all)
    throw UsageError("freely_iterable: instance '" + q->name() +
                     "' has no finite enumeration; use is_freely_iterable per element");
  std::vector<Elem> out;
  for (const auto& e : *all)
    if (is_freely_iterable(q, e)) out.push_back(e);
  return out;
}

namespace {

/// Least element of {y in candidates}; empty optional when there is none.
std::optional<Elem> least_of(const QuantalePtr& q, const std::vector<Elem>& candidates) {
  for (const auto& m : candidates) {
    bool least = true;
    for (const auto& c : candidates)
      if (!q->leq(m, c)) {
        least = false;
        break;
      }
    if (least) return m;
  }
  return std::nullopt;
}

std::vector<Elem> star_candidates(const QuantalePtr& q, std::span<const Elem> carrier,
                                  const Elem& x) {
  const Elem unit = q->unit();
  std::vector<Elem> out;
  for (const auto& y : carrier)
    if (q->leq(x, y) && q->leq(unit, y) && is_freely_iterable(q, y)) out.push_back(y);
  return out;
}

}  // namespace

IterReport iterability(const QuantalePtr& q) {
  auto all = q->enumerate();
  if (!all)
    throw UsageError("iterability: instance '" + q->name() +
                     "' has no finite enumeration; supply a bounded carrier");
  return iterability(q, *all, /*exact=*/true);
}

IterReport iterability(const QuantalePtr& q, std::span<const Elem> carrier, bool exact) {
  IterReport report;
  report.instance = q->name();
  report.exact = exact;

  for (const auto& e : carrier)
    if (is_freely_iterable(q, e)) report.iter_set.push_back(e);

  for (const auto& x : carrier) {
    auto candidates = star_candidates(q, carrier, x);
    if (!least_of(q, candidates)) {
      report.least_element_condition.pass = false;
      report.least_element_condition.witness = {x};
      report.least_element_condition.note =
          "no least freely iterable element above " + q->render(x) + " and unit";
      break;
    }
  }

  for (const auto& x : report.iter_set) {
    for (const auto& y : report.iter_set) {
      Elem j = q->join(x, y);
      if (!is_freely_iterable(q, j)) {
        report.join_closed.pass = false;
        report.join_closed.witness = {x, y};
        report.join_closed.note = q->render(x) + " ⊔ " + q->render(y) + " = " + q->render(j) +
                                  " is not freely iterable";
        goto join_done;
      }
    }
  }
join_done:

  if (report.least_element_condition.pass) {
    std::vector<Elem> carrier_copy(carrier.begin(), carrier.end());
    ClosureOperator star(q, [q, carrier_copy](const Elem& e) {
      if (auto s = q->analytic_star(e)) return *s;
      auto candidates = star_candidates(q, carrier_copy, e);
      auto least = least_of(q, candidates);
      if (!least) throw ClosureError("no least iterable bound for " + q->render(e), e);
      return *least;
    });
    report.p_results = check_star_properties(star, carrier);
  }
  return report;
}

ClosureOperator closure(const QuantalePtr& q) {
  if (q->analytic_star(q->unit())) {
    return ClosureOperator(q, [q](const Elem& e) {
      auto s = q->analytic_star(e);
      if (!s) throw ClosureError("analytic star undefined for " + q->render(e), e);
      return *s;
    });
  }
  auto all = q->enumerate();
  if (!all)
    throw ConstructionError("closure: instance '" + q->name() +
                            "' has neither an enumeration nor an analytic star");
  // Precompute; construction fails on the first element without a least bound.
  auto table = std::make_shared<std::vector<std::pair<Elem, Elem>>>();
  for (const auto& x : *all) {
    auto least = least_of(q, star_candidates(q, *all, x));
    if (!least)
      throw ClosureError("closure: the least-element condition fails at " + q->render(x), x);
    table->push_back({x, *least});
  }
  return ClosureOperator(q, [q, table](const Elem& e) {
    for (const auto& [x, s] : *table)
      if (q->eq(x, e)) return s;
    throw UsageError("closure: element " + q->render(e) + " outside the enumerated carrier");
  });
}

std::vector<std::pair<std::string, PropertyResult>> check_star_properties(
    const ClosureOperator& star, std::span<const Elem> elems) {
  const QuantalePtr& q = star.instance();
  const Elem unit = q->unit();
  std::vector<std::pair<std::string, PropertyResult>> out;

  auto unary = [&](const std::string& name, auto holds) {
    PropertyResult r;
    for (const auto& e : elems) {
      if (!holds(e)) {
        r.pass = false;
        r.witness = {e};
        break;
      }
    }
    out.emplace_back(name, std::move(r));
  };

  unary("P1", [&](const Elem& e) { return q->leq(e, star(e)); });
  unary("P2", [&](const Elem& e) {
    Elem s = star(e);
    return q->leq(q->seq(e, s), s) && q->leq(q->seq(s, e), s);
  });
  unary("P3", [&](const Elem& e) { return q->eq(star(star(e)), star(e)); });

  PropertyResult p4;
  for (const auto& e : elems) {
    for (const auto& f : elems) {
      if (!q->eq(star(q->join(e, f)), q->join(star(e), star(f)))) {
        p4.pass = false;
        p4.witness = {e, f};
        p4.note = "(" + q->render(e) + " ⊔ " + q->render(f) + ")* = " +
                  q->render(star(q->join(e, f))) + " but " + q->render(star(e)) + " ⊔ " +
                  q->render(star(f)) + " = " + q->render(q->join(star(e), star(f)));
        goto p4_done;
      }
    }
  }
p4_done:
  out.emplace_back("P4", std::move(p4));

  unary("P5", [&](const Elem& e) { return q->leq(unit, star(e)); });
  return out;
}

}  // namespace eq
