#include "eq/algebra.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace eq {

void Quantale::require_owned(const Elem& e, const char* op) const {
  if (e.owner.get() == this) return;
  if (!e.owner) throw UsageError(std::string(op) + ": element has no owning instance");
  if (e.owner->key() != key_)
    throw UsageError(std::string(op) + ": element of instance '" + e.owner->key() +
                     "' used with instance '" + key_ + "'");
}

Elem Quantale::join(const Elem& a, const Elem& b) const {
  require_owned(a, "join");
  require_owned(b, "join");
  return Elem{shared_from_this(), join_payload(a.payload, b.payload)};
}

Elem Quantale::seq(const Elem& a, const Elem& b) const {
  require_owned(a, "seq");
  require_owned(b, "seq");
  return Elem{shared_from_this(), seq_payload(a.payload, b.payload)};
}

bool Quantale::eq(const Elem& a, const Elem& b) const {
  require_owned(a, "eq");
  require_owned(b, "eq");
  return payload_eq(a.payload, b.payload);
}

bool Quantale::leq(const Elem& a, const Elem& b) const {
  require_owned(a, "leq");
  require_owned(b, "leq");
  return payload_eq(join_payload(a.payload, b.payload), b.payload);
}

Elem apply_hom(const Homomorphism& h, const Elem& a) {
  if (!h.source || a.owner->key() != h.source->key())
    throw UsageError("apply_hom: element does not belong to the source instance");
  return h.map(a);
}

// ---------------------------------------------------------------------------
// Indexed families

namespace {

std::string identity_name(const std::string& n) { return n; }

}  // namespace

Homomorphism IndexedFamily::include(const NameSet& from, const NameSet& to) const {
  for (const auto& n : from)
    if (!to.count(n)) throw UsageError("include: '" + n + "' missing from the larger name set");
  auto tgt = instantiate(to);
  auto self = shared_from_this();
  return Homomorphism{instantiate(from), tgt, [self, tgt](const Elem& e) {
                        return self->transport(e, tgt, identity_name);
                      }};
}

Homomorphism IndexedFamily::collapse(const NameSet& base, const std::string& extra,
                                     const std::string& target) const {
  if (base.count(extra)) throw UsageError("collapse: '" + extra + "' already in the base set");
  if (!base.count(target)) throw UsageError("collapse: target '" + target + "' not in the base set");
  NameSet wide = base;
  wide.insert(extra);
  auto tgt = instantiate(base);
  auto self = shared_from_this();
  return Homomorphism{instantiate(wide), tgt, [self, tgt, extra, target](const Elem& e) {
                        return self->transport(
                            e, tgt, [&](const std::string& n) { return n == extra ? target : n; });
                      }};
}

Homomorphism IndexedFamily::rename(const NameSet& names, const std::string& from,
                                   const std::string& to) const {
  if (!names.count(from)) throw UsageError("rename: '" + from + "' not in scope");
  NameSet base = names;
  base.erase(from);
  base.insert(to);
  auto tgt = instantiate(base);
  auto self = shared_from_this();
  if (from == to)
    return Homomorphism{tgt, tgt, [](const Elem& e) { return e; }};
  return Homomorphism{instantiate(names), tgt, [self, tgt, from, to](const Elem& e) {
                        return self->transport(
                            e, tgt, [&](const std::string& n) { return n == from ? to : n; });
                      }};
}

namespace {

class ConstantFamily final : public IndexedFamily {
 public:
  explicit ConstantFamily(QuantalePtr q) : q_(std::move(q)) {}

  std::string family_key() const override { return "const:" + q_->key(); }
  QuantalePtr instantiate(const NameSet&) const override { return q_; }
  std::optional<Elem> parse_payload(std::string_view text) const override {
    return q_->parse_elem(text);
  }

  Elem transport(const Elem& e, const QuantalePtr& target,
                 const std::function<std::string(const std::string&)>&) const override {
    return target->own(e.payload);
  }

 private:
  QuantalePtr q_;
};

}  // namespace

FamilyPtr constant_family(QuantalePtr q) {
  return std::make_shared<ConstantFamily>(std::move(q));
}

// ---------------------------------------------------------------------------
// Law suite

bool LawReport::all_pass() const {
  return std::all_of(laws.begin(), laws.end(), [](const LawResult& r) { return r.pass; });
}

const LawResult* LawReport::failed(const std::string& law) const {
  for (const auto& r : laws)
    if (r.law == law && !r.pass) return &r;
  return nullptr;
}

namespace {

using Tuple = std::vector<Elem>;

LawResult run_law(const std::string& name, std::size_t arity, std::span<const Elem> elems,
                  const std::function<bool(const Tuple&)>& holds, const LawCheckConfig& cfg) {
  LawResult res;
  res.law = name;
  const std::uint64_t n = elems.size();
  if (n == 0) return res;
  std::uint64_t space = 1;
  bool overflow = false;
  for (std::size_t i = 0; i < arity; ++i) {
    if (space > cfg.exhaustive_cap / n + 1) overflow = true;
    space *= n;
    if (space > cfg.exhaustive_cap) overflow = true;
  }
  Tuple tuple(arity, elems[0]);
  if (!overflow && space <= cfg.exhaustive_cap) {
    res.exhaustive = true;
    std::vector<std::size_t> idx(arity, 0);
    for (;;) {
      for (std::size_t i = 0; i < arity; ++i) tuple[i] = elems[idx[i]];
      ++res.cases;
      if (!holds(tuple)) {
        res.pass = false;
        res.counterexample = tuple;
        return res;
      }
      std::size_t k = arity;
      while (k > 0) {
        --k;
        if (++idx[k] < n) break;
        idx[k] = 0;
        if (k == 0) return res;
      }
    }
  }
  std::mt19937_64 rng(cfg.seed ^ std::hash<std::string>{}(name));
  std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
  for (std::uint64_t t = 0; t < cfg.budget; ++t) {
    for (std::size_t i = 0; i < arity; ++i) tuple[i] = elems[pick(rng)];
    ++res.cases;
    if (!holds(tuple)) {
      res.pass = false;
      res.counterexample = tuple;
      return res;
    }
  }
  return res;
}

}  // namespace

LawReport check_laws(const QuantalePtr& q, std::span<const Elem> samples,
                     const LawCheckConfig& cfg) {
  std::vector<Elem> elems(samples.begin(), samples.end());
  std::sort(elems.begin(), elems.end(),
            [](const Elem& a, const Elem& b) { return elem_cmp(a, b) < 0; });
  elems.erase(std::unique(elems.begin(), elems.end(),
                          [](const Elem& a, const Elem& b) { return elem_eq(a, b); }),
              elems.end());

  const Elem unit = q->unit();
  const Elem top = q->top();
  LawReport report;
  report.instance = q->name();
  auto add = [&](const std::string& name, std::size_t arity,
                 std::function<bool(const Tuple&)> fn) {
    report.laws.push_back(run_law(name, arity, elems, fn, cfg));
  };

  add("join-idem", 1, [&](const Tuple& t) { return q->eq(q->join(t[0], t[0]), t[0]); });
  add("join-top", 1, [&](const Tuple& t) { return q->eq(q->join(t[0], top), top); });
  add("unit-left", 1, [&](const Tuple& t) { return q->eq(q->seq(unit, t[0]), t[0]); });
  add("unit-right", 1, [&](const Tuple& t) { return q->eq(q->seq(t[0], unit), t[0]); });
  add("top-nilpotent", 1, [&](const Tuple& t) {
    return q->eq(q->seq(top, t[0]), top) && q->eq(q->seq(t[0], top), top);
  });
  add("join-comm", 2, [&](const Tuple& t) { return q->eq(q->join(t[0], t[1]), q->join(t[1], t[0])); });
  add("join-assoc", 3, [&](const Tuple& t) {
    return q->eq(q->join(t[0], q->join(t[1], t[2])), q->join(q->join(t[0], t[1]), t[2]));
  });
  add("seq-assoc", 3, [&](const Tuple& t) {
    return q->eq(q->seq(t[0], q->seq(t[1], t[2])), q->seq(q->seq(t[0], t[1]), t[2]));
  });
  add("distrib-left", 3, [&](const Tuple& t) {
    return q->eq(q->seq(t[0], q->join(t[1], t[2])),
                 q->join(q->seq(t[0], t[1]), q->seq(t[0], t[2])));
  });
  add("distrib-right", 3, [&](const Tuple& t) {
    return q->eq(q->seq(q->join(t[0], t[1]), t[2]),
                 q->join(q->seq(t[0], t[2]), q->seq(t[1], t[2])));
  });
  add("isotonicity", 4, [&](const Tuple& t) {
    if (!q->leq(t[0], t[1]) || !q->leq(t[2], t[3])) return true;
    return q->leq(q->seq(t[0], t[2]), q->seq(t[1], t[3]));
  });
  return report;
}

LawReport check_laws(const QuantalePtr& q, const LawCheckConfig& cfg) {
  auto elems = q->enumerate();
  if (!elems)
    throw UsageError("check_laws: instance '" + q->name() +
                     "' has no finite enumeration; supply samples");
  return check_laws(q, *elems, cfg);
}

// ---------------------------------------------------------------------------
// Commutative lift

namespace {

class CommutativeQuantale final : public Quantale {
 public:
  explicit CommutativeQuantale(SemilatticeSpec spec)
      : Quantale(spec.key, spec.name, spec.bottom, spec.top), spec_(std::move(spec)) {}

  std::optional<std::vector<Elem>> enumerate() const override {
    std::vector<Elem> out;
    out.reserve(spec_.carrier.size());
    for (const auto& p : spec_.carrier) out.push_back(own(p));
    return out;
  }

  std::string render(const Elem& e) const override { return spec_.render(e.payload); }

  std::optional<Elem> parse_elem(std::string_view text) const override {
    if (!spec_.parse) return std::nullopt;
    auto p = spec_.parse(text);
    if (!p) return std::nullopt;
    return own(*p);
  }

 protected:
  Payload join_payload(const Payload& a, const Payload& b) const override {
    return spec_.join(a, b);
  }
  Payload seq_payload(const Payload& a, const Payload& b) const override {
    return spec_.join(a, b);
  }

 private:
  SemilatticeSpec spec_;
};

}  // namespace

QuantalePtr commutative_lift(SemilatticeSpec spec) {
  if (!spec.join) throw ConstructionError("commutative_lift: missing join");
  for (const auto& p : spec.carrier) {
    if (!payload_eq(spec.join(spec.bottom, p), p))
      throw ConstructionError("commutative_lift: bottom is not a unit for join in '" + spec.name +
                              "'");
    if (!payload_eq(spec.join(spec.top, p), spec.top))
      throw ConstructionError("commutative_lift: top does not absorb join in '" + spec.name + "'");
  }
  return std::make_shared<CommutativeQuantale>(std::move(spec));
}

// ---------------------------------------------------------------------------
// Products

namespace {

/// Least freely iterable element at or above both e and unit, via the analytic
/// operator when supplied, otherwise by search over a finite enumeration.
std::optional<Elem> instance_star(const QuantalePtr& q, const Elem& e) {
  if (auto s = q->analytic_star(e)) return s;
  auto all = q->enumerate();
  if (!all) return std::nullopt;
  const Elem unit = q->unit();
  std::vector<Elem> candidates;
  for (const auto& y : *all)
    if (q->leq(e, y) && q->leq(unit, y) && q->eq(q->seq(y, y), y)) candidates.push_back(y);
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

class ProductQuantale final : public Quantale {
 public:
  ProductQuantale(QuantalePtr lhs, QuantalePtr rhs)
      : Quantale("prod(" + lhs->key() + "," + rhs->key() + ")",
                 lhs->name() + "⊗" + rhs->name(),
                 PairElem{std::make_shared<Elem>(lhs->unit()), std::make_shared<Elem>(rhs->unit())},
                 PairElem{nullptr, nullptr}),
        lhs_(std::move(lhs)),
        rhs_(std::move(rhs)) {}

  const QuantalePtr& left() const { return lhs_; }
  const QuantalePtr& right() const { return rhs_; }

  std::optional<NameSet> index_names() const override {
    auto a = lhs_->index_names();
    auto b = rhs_->index_names();
    if (!a) return b;
    if (!b) return a;
    NameSet out = *a;
    out.insert(b->begin(), b->end());
    return out;
  }

  NameSet indexed_payload_names(const Payload& p) const override {
    const auto& pe = std::get<PairElem>(p);
    if (!pe.first) return {};
    NameSet out = lhs_->indexed_payload_names(pe.first->payload);
    out.merge(rhs_->indexed_payload_names(pe.second->payload));
    return out;
  }

  Elem make(const Elem& a, const Elem& b) const {
    if (lhs_->is_top(a) || rhs_->is_top(b)) return top();
    return own(PairElem{std::make_shared<Elem>(a), std::make_shared<Elem>(b)});
  }

  std::optional<std::vector<Elem>> enumerate() const override {
    auto ls = lhs_->enumerate();
    auto rs = rhs_->enumerate();
    if (!ls || !rs) return std::nullopt;
    std::vector<Elem> out;
    for (const auto& a : *ls) {
      if (lhs_->is_top(a)) continue;
      for (const auto& b : *rs) {
        if (rhs_->is_top(b)) continue;
        out.push_back(make(a, b));
      }
    }
    out.push_back(top());
    return out;
  }

  std::string render(const Elem& e) const override {
    const auto& p = std::get<PairElem>(e.payload);
    if (!p.first) return "ERR";
    return lhs_->render(*p.first) + "⊗" + rhs_->render(*p.second);
  }

  std::optional<Elem> parse_elem(std::string_view text) const override {
    if (text == "ERR") return top();
    static constexpr std::string_view kTimes = "\xe2\x8a\x97";  // ⊗
    for (std::size_t pos = text.find(kTimes); pos != std::string_view::npos;
         pos = text.find(kTimes, pos + 1)) {
      auto a = lhs_->parse_elem(text.substr(0, pos));
      auto b = rhs_->parse_elem(text.substr(pos + kTimes.size()));
      if (a && b) return make(*a, *b);
    }
    // Shorthand: a bare component with the other side at unit.
    if (auto b = rhs_->parse_elem(text)) return make(lhs_->unit(), *b);
    if (auto a = lhs_->parse_elem(text)) return make(*a, rhs_->unit());
    return std::nullopt;
  }

  std::optional<Elem> analytic_star(const Elem& e) const override {
    const auto& p = std::get<PairElem>(e.payload);
    if (!p.first) return top();
    auto sa = instance_star(lhs_, *p.first);
    if (!sa) return std::nullopt;
    auto sb = instance_star(rhs_, *p.second);
    if (!sb) return std::nullopt;
    return make(*sa, *sb);
  }

 protected:
  Payload join_payload(const Payload& a, const Payload& b) const override {
    return combine(a, b, true);
  }
  Payload seq_payload(const Payload& a, const Payload& b) const override {
    return combine(a, b, false);
  }

 private:
  Payload combine(const Payload& a, const Payload& b, bool join_op) const {
    const auto& pa = std::get<PairElem>(a);
    const auto& pb = std::get<PairElem>(b);
    if (!pa.first || !pb.first) return PairElem{nullptr, nullptr};
    Elem ra = join_op ? lhs_->join(*pa.first, *pb.first) : lhs_->seq(*pa.first, *pb.first);
    Elem rb = join_op ? rhs_->join(*pa.second, *pb.second) : rhs_->seq(*pa.second, *pb.second);
    if (lhs_->is_top(ra) || rhs_->is_top(rb)) return PairElem{nullptr, nullptr};
    return PairElem{std::make_shared<Elem>(std::move(ra)), std::make_shared<Elem>(std::move(rb))};
  }

  QuantalePtr lhs_;
  QuantalePtr rhs_;
};

}  // namespace

QuantalePtr product(QuantalePtr lhs, QuantalePtr rhs) {
  return std::make_shared<ProductQuantale>(std::move(lhs), std::move(rhs));
}

const PairElem& pair_of(const Elem& e) {
  if (!std::holds_alternative<PairElem>(e.payload))
    throw UsageError("pair_of: not a product element");
  return std::get<PairElem>(e.payload);
}

bool is_product(const QuantalePtr& q) {
  return dynamic_cast<const ProductQuantale*>(q.get()) != nullptr;
}

QuantalePtr product_lhs(const QuantalePtr& q) {
  auto* p = dynamic_cast<const ProductQuantale*>(q.get());
  if (!p) throw UsageError("product_lhs: not a product instance");
  return p->left();
}

QuantalePtr product_rhs(const QuantalePtr& q) {
  auto* p = dynamic_cast<const ProductQuantale*>(q.get());
  if (!p) throw UsageError("product_rhs: not a product instance");
  return p->right();
}

Elem make_product_elem(const QuantalePtr& q, const Elem& a, const Elem& b) {
  auto* p = dynamic_cast<const ProductQuantale*>(q.get());
  if (!p) throw UsageError("make_product_elem: not a product instance");
  return p->make(a, b);
}

namespace {

class ProductFamily final : public IndexedFamily {
 public:
  ProductFamily(FamilyPtr lhs, FamilyPtr rhs) : lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

  std::string family_key() const override {
    return "prod(" + lhs_->family_key() + "," + rhs_->family_key() + ")";
  }

  QuantalePtr instantiate(const NameSet& names) const override {
    return product(lhs_->instantiate(names), rhs_->instantiate(names));
  }

  std::optional<Elem> parse_payload(std::string_view text) const override {
    if (text == "ERR") {
      return instantiate({})->top();
    }
    static constexpr std::string_view kTimes = "\xe2\x8a\x97";
    for (std::size_t pos = text.find(kTimes); pos != std::string_view::npos;
         pos = text.find(kTimes, pos + 1)) {
      auto a = lhs_->parse_payload(text.substr(0, pos));
      auto b = rhs_->parse_payload(text.substr(pos + kTimes.size()));
      if (a && b) return combine_parsed(*a, *b);
    }
    if (auto b = rhs_->parse_payload(text))
      return combine_parsed(lhs_->instantiate(payload_names(b->payload))->unit(), *b);
    if (auto a = lhs_->parse_payload(text))
      return combine_parsed(*a, rhs_->instantiate(payload_names(a->payload))->unit());
    return std::nullopt;
  }

  Elem transport(const Elem& e, const QuantalePtr& target,
                 const std::function<std::string(const std::string&)>& map) const override {
    auto* tp = dynamic_cast<const ProductQuantale*>(target.get());
    if (!tp) throw UsageError("product family transport: target is not a product instance");
    const auto& p = std::get<PairElem>(e.payload);
    if (!p.first) return target->top();
    Elem a = lhs_->transport(*p.first, tp->left(), map);
    Elem b = rhs_->transport(*p.second, tp->right(), map);
    return tp->make(a, b);
  }

 private:
  // Lift both halves into the union of their mentioned index names, then pair.
  Elem combine_parsed(const Elem& a, const Elem& b) const {
    NameSet names = a.owner->indexed_payload_names(a.payload);
    names.merge(b.owner->indexed_payload_names(b.payload));
    auto inst = instantiate(names);
    auto* tp = dynamic_cast<const ProductQuantale*>(inst.get());
    Elem ta = lhs_->transport(a, tp->left(), identity_name);
    Elem tb = rhs_->transport(b, tp->right(), identity_name);
    return tp->make(ta, tb);
  }

  FamilyPtr lhs_;
  FamilyPtr rhs_;
};

}  // namespace

FamilyPtr product_family(FamilyPtr lhs, FamilyPtr rhs) {
  return std::make_shared<ProductFamily>(std::move(lhs), std::move(rhs));
}

// ---------------------------------------------------------------------------
// Table-driven finite instances

namespace {

class TableQuantale final : public Quantale {
 public:
  explicit TableQuantale(TableSpec spec)
      : Quantale(spec.key, spec.name, spec.unit, spec.top), spec_(std::move(spec)) {}

  std::optional<std::vector<Elem>> enumerate() const override {
    std::vector<Elem> out;
    for (std::int64_t i = 0; i < std::int64_t(spec_.labels.size()); ++i) out.push_back(own(i));
    return out;
  }

  std::string render(const Elem& e) const override {
    return spec_.labels.at(std::size_t(std::get<std::int64_t>(e.payload)));
  }

  std::optional<Elem> parse_elem(std::string_view text) const override {
    for (std::size_t i = 0; i < spec_.labels.size(); ++i)
      if (spec_.labels[i] == text) return own(std::int64_t(i));
    return std::nullopt;
  }

 protected:
  Payload join_payload(const Payload& a, const Payload& b) const override {
    return spec_.join.at(idx(a)).at(idx(b));
  }
  Payload seq_payload(const Payload& a, const Payload& b) const override {
    return spec_.seq.at(idx(a)).at(idx(b));
  }

 private:
  static std::size_t idx(const Payload& p) { return std::size_t(std::get<std::int64_t>(p)); }
  TableSpec spec_;
};

}  // namespace

QuantalePtr table_quantale(TableSpec spec) {
  const std::size_t n = spec.labels.size();
  if (spec.join.size() != n || spec.seq.size() != n)
    throw ConstructionError("table_quantale: table size mismatch");
  for (const auto& row : spec.join)
    if (row.size() != n) throw ConstructionError("table_quantale: ragged join table");
  for (const auto& row : spec.seq)
    if (row.size() != n) throw ConstructionError("table_quantale: ragged seq table");
  return std::make_shared<TableQuantale>(std::move(spec));
}

}  // namespace eq
