#include "eq/bridges.hpp"

namespace eq {

Effectoid quantale_to_effectoid(const QuantalePtr& q) {
  auto all = q->enumerate();
  if (!all) throw UsageError("quantale_to_effectoid: carrier is not finite");
  Effectoid e;
  e.name = q->name();
  for (const auto& x : *all)
    if (!q->is_top(x)) e.carrier.push_back(x);
  const std::size_t n = e.carrier.size();
  if (n == 0) throw UsageError("quantale_to_effectoid: trivial quantale (top only)");
  const Elem unit = q->unit();
  e.base.resize(n);
  e.le.resize(n * n);
  e.seq3.resize(n * n * n);
  for (std::size_t i = 0; i < n; ++i) {
    e.base[i] = q->leq(unit, e.carrier[i]) ? 1 : 0;
    for (std::size_t j = 0; j < n; ++j) e.le[i * n + j] = q->leq(e.carrier[i], e.carrier[j]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Elem s = q->seq(e.carrier[i], e.carrier[j]);
      if (q->is_top(s)) continue;  // failure is a missing entry
      for (std::size_t k = 0; k < n; ++k)
        e.seq3[(i * n + j) * n + k] = q->leq(s, e.carrier[k]) ? 1 : 0;
    }
  return e;
}

QuantalePtr with_synthetic_err(const QuantalePtr& q) {
  auto all = q->enumerate();
  if (!all) throw UsageError("with_synthetic_err: carrier is not finite");
  const std::size_t n = all->size();
  const std::int64_t err = std::int64_t(n);
  TableSpec spec;
  spec.key = "err+" + q->key();
  spec.name = q->name() + "+err";
  for (const auto& x : *all) spec.labels.push_back(q->render(x));
  spec.labels.push_back("ERR");
  spec.join.assign(n + 1, std::vector<std::int64_t>(n + 1, err));
  spec.seq.assign(n + 1, std::vector<std::int64_t>(n + 1, err));
  auto index_of = [&](const Elem& e) -> std::int64_t {
    for (std::size_t i = 0; i < n; ++i)
      if (q->eq((*all)[i], e)) return std::int64_t(i);
    throw UsageError("with_synthetic_err: element outside the enumeration");
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (q->eq((*all)[i], q->unit())) spec.unit = std::int64_t(i);
    for (std::size_t j = 0; j < n; ++j) {
      spec.join[i][j] = index_of(q->join((*all)[i], (*all)[j]));
      spec.seq[i][j] = index_of(q->seq((*all)[i], (*all)[j]));
    }
  }
  spec.top = err;
  return table_quantale(std::move(spec));
}

EffectoidLawReport check_effectoid_laws(const Effectoid& e) {
  EffectoidLawReport report;
  const std::size_t n = e.size();

  // Identity: (∃ base l. l⨾a -> b) <=> a <= b <=> (∃ base r. a⨾r -> b)
  for (std::size_t a = 0; a < n && report.identity.pass; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      bool left = false, right = false;
      for (std::size_t u = 0; u < n; ++u) {
        if (e.base[u] && e.seq_at(u, a, b)) left = true;
        if (e.base[u] && e.seq_at(a, u, b)) right = true;
      }
      bool ord = e.le_at(a, b);
      if (left != ord || right != ord) {
        report.identity.pass = false;
        report.identity.witness = {e.carrier[a], e.carrier[b]};
        report.identity.note = "identity law fails";
        break;
      }
    }

  // Associativity: (∃m. a⨾b->m ∧ m⨾c->r) <=> (∃m. b⨾c->m ∧ a⨾m->r)
  for (std::size_t a = 0; a < n && report.associativity.pass; ++a)
    for (std::size_t b = 0; b < n && report.associativity.pass; ++b)
      for (std::size_t c = 0; c < n && report.associativity.pass; ++c)
        for (std::size_t r = 0; r < n; ++r) {
          bool left = false, right = false;
          for (std::size_t m = 0; m < n; ++m) {
            if (e.seq_at(a, b, m) && e.seq_at(m, c, r)) left = true;
            if (e.seq_at(b, c, m) && e.seq_at(a, m, r)) right = true;
          }
          if (left != right) {
            report.associativity.pass = false;
            report.associativity.witness = {e.carrier[a], e.carrier[b], e.carrier[c],
                                            e.carrier[r]};
            report.associativity.note = "associativity law fails";
            break;
          }
        }

  // Reflexive congruence: reflexivity; Base respects <=; composition results
  // respect <=.
  for (std::size_t a = 0; a < n; ++a)
    if (!e.le_at(a, a)) {
      report.reflexive_congruence.pass = false;
      report.reflexive_congruence.witness = {e.carrier[a]};
      report.reflexive_congruence.note = "order is not reflexive";
    }
  for (std::size_t a = 0; a < n && report.reflexive_congruence.pass; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (e.base[a] && e.le_at(a, b) && !e.base[b]) {
        report.reflexive_congruence.pass = false;
        report.reflexive_congruence.witness = {e.carrier[a], e.carrier[b]};
        report.reflexive_congruence.note = "Base does not respect the order";
        break;
      }
    }
  for (std::size_t a = 0; a < n && report.reflexive_congruence.pass; ++a)
    for (std::size_t b = 0; b < n && report.reflexive_congruence.pass; ++b)
      for (std::size_t r = 0; r < n && report.reflexive_congruence.pass; ++r)
        for (std::size_t r2 = 0; r2 < n; ++r2) {
          if (e.seq_at(a, b, r) && e.le_at(r, r2) && !e.seq_at(a, b, r2)) {
            report.reflexive_congruence.pass = false;
            report.reflexive_congruence.witness = {e.carrier[a], e.carrier[b], e.carrier[r],
                                                   e.carrier[r2]};
            report.reflexive_congruence.note = "composition does not respect the order";
            break;
          }
        }
  return report;
}

namespace {

std::optional<std::size_t> least_of_set(const Effectoid& e, const std::vector<std::size_t>& set) {
  for (std::size_t m : set) {
    bool least = true;
    for (std::size_t c : set)
      if (!e.le_at(m, c)) {
        least = false;
        break;
      }
    if (least) return m;
  }
  return std::nullopt;
}

}  // namespace

std::variant<QuantalePtr, NotApplicable> effectoid_to_quantale(const Effectoid& e) {
  const std::size_t n = e.size();
  const std::int64_t err = std::int64_t(n);

  // binary joins
  std::vector<std::vector<std::int64_t>> join(n + 1, std::vector<std::int64_t>(n + 1, err));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::size_t> uppers;
      for (std::size_t k = 0; k < n; ++k)
        if (e.le_at(i, k) && e.le_at(j, k)) uppers.push_back(k);
      auto least = least_of_set(e, uppers);
      if (!least)
        return NotApplicable{"no binary join for " + e.carrier[i].owner->render(e.carrier[i]) +
                             " and " + e.carrier[j].owner->render(e.carrier[j])};
      join[i][j] = std::int64_t(*least);
    }
  for (std::size_t i = 0; i <= n; ++i) join[i][n] = join[n][i] = err;

  // least centric element
  std::vector<std::size_t> centric;
  for (std::size_t i = 0; i < n; ++i)
    if (e.base[i]) centric.push_back(i);
  auto unit = least_of_set(e, centric);
  if (!unit) return NotApplicable{"no least centric element"};

  // principalled composition
  std::vector<std::vector<std::int64_t>> seq(n + 1, std::vector<std::int64_t>(n + 1, err));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::size_t> results;
      for (std::size_t k = 0; k < n; ++k)
        if (e.seq_at(i, j, k)) results.push_back(k);
      if (results.empty()) continue;  // undefined -> Err
      auto least = least_of_set(e, results);
      if (!least)
        return NotApplicable{"composition is not principalled at " +
                             e.carrier[i].owner->render(e.carrier[i]) + " ⨾ " +
                             e.carrier[j].owner->render(e.carrier[j])};
      seq[i][j] = std::int64_t(*least);
    }
  for (std::size_t i = 0; i <= n; ++i) seq[i][n] = seq[n][i] = err;

  TableSpec spec;
  spec.key = "effectoid:" + e.name;
  spec.name = e.name + "-reconstructed";
  for (const auto& x : e.carrier) spec.labels.push_back(x.owner->render(x));
  spec.labels.push_back("ERR");
  spec.join = std::move(join);
  spec.seq = std::move(seq);
  spec.unit = std::int64_t(*unit);
  spec.top = err;
  return table_quantale(std::move(spec));
}

RoundTrip effectoid_round_trip(const QuantalePtr& q) {
  RoundTrip out;
  Effectoid e = quantale_to_effectoid(q);
  auto rebuilt = effectoid_to_quantale(e);
  if (std::holds_alternative<NotApplicable>(rebuilt)) {
    out.detail = "reconstruction not applicable: " + std::get<NotApplicable>(rebuilt).reason;
    return out;
  }
  QuantalePtr r = std::get<QuantalePtr>(rebuilt);
  const std::size_t n = e.size();
  // the carrier bijection: index i <-> e.carrier[i], Err <-> top
  auto to_original = [&](const Elem& re) -> Elem {
    auto idx = std::size_t(std::get<std::int64_t>(re.payload));
    return idx == n ? q->top() : e.carrier[idx];
  };
  auto from_index = [&](std::size_t i) { return r->own(std::int64_t(i)); };
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      Elem a = i == n ? q->top() : e.carrier[i];
      Elem b = j == n ? q->top() : e.carrier[j];
      Elem rj = r->join(from_index(i), from_index(j));
      Elem rs = r->seq(from_index(i), from_index(j));
      if (!q->eq(q->join(a, b), to_original(rj)) || !q->eq(q->seq(a, b), to_original(rs))) {
        out.detail = "operations disagree at " + q->render(a) + ", " + q->render(b);
        return out;
      }
    }
  }
  if (!q->eq(to_original(r->unit()), q->unit()) || !q->eq(to_original(r->top()), q->top())) {
    out.detail = "unit or top is not preserved";
    return out;
  }
  out.isomorphic = true;
  return out;
}

}  // namespace eq
