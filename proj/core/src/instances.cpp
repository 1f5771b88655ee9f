#include "eq/instances.hpp"

#include <array>
#include <sstream>

namespace eq {

namespace {

constexpr int kMovers = 6;

// Fig. 1 composition over {B,L,R,A,TOP}; Err added as annihilator.
constexpr std::array<std::array<Mover, 5>, 5> kSeqTable = {{
    // columns: B, L, R, A, TOP
    /* B   */ {{Mover::B, Mover::L, Mover::R, Mover::A, Mover::TopFQ}},
    /* L   */ {{Mover::L, Mover::L, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ}},
    /* R   */ {{Mover::R, Mover::A, Mover::R, Mover::A, Mover::TopFQ}},
    /* A   */ {{Mover::A, Mover::A, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ}},
    /* TOP */ {{Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ, Mover::TopFQ}},
}};

// Height in the lattice chain B < L,R < A < TOP < Err.
int mover_rank(Mover m) {
  switch (m) {
    case Mover::B: return 0;
    case Mover::L:
    case Mover::R: return 1;
    case Mover::A: return 2;
    case Mover::TopFQ: return 3;
    case Mover::Err: return 4;
  }
  return 4;
}

Mover mover_join(Mover a, Mover b) {
  if (a == b) return a;
  if (mover_rank(a) > mover_rank(b)) std::swap(a, b);
  if (mover_rank(a) == mover_rank(b)) return Mover::A;  // L vs R
  return b;
}

Mover mover_seq(Mover a, Mover b) {
  if (a == Mover::Err || b == Mover::Err) return Mover::Err;
  return kSeqTable[std::size_t(a)][std::size_t(b)];
}

class AtomicityQuantale final : public Quantale {
 public:
  AtomicityQuantale() : Quantale("atomicity", "atomicity", Mover::B, Mover::Err) {}

  std::optional<std::vector<Elem>> enumerate() const override {
    std::vector<Elem> out;
    for (int i = 0; i < kMovers; ++i) out.push_back(own(Mover(i)));
    return out;
  }

  std::string render(const Elem& e) const override {
    return std::string(mover_name(std::get<Mover>(e.payload)));
  }

  std::optional<Elem> parse_elem(std::string_view text) const override {
    if (auto m = mover_from_name(text)) return own(*m);
    return std::nullopt;
  }

 protected:
  Payload join_payload(const Payload& a, const Payload& b) const override {
    return mover_join(std::get<Mover>(a), std::get<Mover>(b));
  }
  Payload seq_payload(const Payload& a, const Payload& b) const override {
    return mover_seq(std::get<Mover>(a), std::get<Mover>(b));
  }
};

}  // namespace

QuantalePtr atomicity_quantale() {
  static const QuantalePtr instance = std::make_shared<AtomicityQuantale>();
  return instance;
}

Elem atom(Mover m) { return atomicity_quantale()->own(m); }

Elem atomicity_join(const Elem& a, const Elem& b) { return atomicity_quantale()->join(a, b); }
Elem atomicity_seq(const Elem& a, const Elem& b) { return atomicity_quantale()->seq(a, b); }

// ---------------------------------------------------------------------------
// Locksets

namespace {

std::string lockset_key(const char* tag, const NameSet& locks) {
  std::string key = tag;
  key += '{';
  bool first = true;
  for (const auto& n : locks) {
    if (!first) key += ',';
    key += n;
    first = false;
  }
  key += '}';
  return key;
}

std::string render_multiset(const Multiset& m) {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, count] : m.entries()) {
    if (!first) out += ',';
    out += name;
    out += '^';
    out += std::to_string(count);
    first = false;
  }
  out += '}';
  return out;
}

std::optional<Multiset> parse_multiset(std::string_view text) {
  if (text.size() < 2 || text.front() != '{' || text.back() != '}') return std::nullopt;
  Multiset out;
  std::string_view body = text.substr(1, text.size() - 2);
  while (!body.empty()) {
    auto comma = body.find(',');
    std::string_view item = body.substr(0, comma);
    body = (comma == std::string_view::npos) ? std::string_view{} : body.substr(comma + 1);
    if (item.empty()) return std::nullopt;
    int count = 1;
    auto caret = item.find('^');
    if (caret != std::string_view::npos) {
      count = 0;
      for (char c : item.substr(caret + 1)) {
        if (c < '0' || c > '9') return std::nullopt;
        count = count * 10 + (c - '0');
      }
      item = item.substr(0, caret);
    }
    if (item.empty() || count <= 0) return std::nullopt;
    std::string name(item);
    out.set(name, out.count(name) + count);
  }
  return out;
}

/// Core of the lockset sequencing: the least start multiset c for
/// (a,a') |> (b,b') and the resulting end multiset c'.
std::pair<Multiset, Multiset> lock_seq_pair(const Multiset& a, const Multiset& a2,
                                            const Multiset& b, const Multiset& b2) {
  const Multiset rel = Multiset::diff(a, a2);
  const Multiset acq = Multiset::diff(a2, a);
  // c = max(a, rel + max(b - acq, 0)) pointwise.
  const Multiset c = Multiset::join(a, Multiset::sum(rel, Multiset::diff(b, acq)));
  const Multiset mid = Multiset::sum(Multiset::diff(c, rel), acq);
  const Multiset c2 =
      Multiset::sum(Multiset::diff(mid, Multiset::diff(b, b2)), Multiset::diff(b2, b));
  return {c, c2};
}

bool deltas_agree(const LockEffect& x, const LockEffect& y) {
  return Multiset::diff(x.pre, x.post) == Multiset::diff(y.pre, y.post) &&
         Multiset::diff(x.post, x.pre) == Multiset::diff(y.post, y.pre);
}

class LockQuantaleBase : public Quantale {
 public:
  LockQuantaleBase(std::string key, std::string name, const NameSet& locks)
      : Quantale(std::move(key), std::move(name), LockEffect{}, LockEffect::error()),
        locks_(locks) {}

  const NameSet& locks() const { return locks_; }

  std::optional<NameSet> index_names() const override { return locks_; }

  NameSet indexed_payload_names(const Payload& p) const override { return payload_names(p); }

  std::string render(const Elem& e) const override {
    const auto& le = std::get<LockEffect>(e.payload);
    if (le.err) return "ERR";
    return render_multiset(le.pre) + "=>" + render_multiset(le.post);
  }

  std::optional<Elem> parse_elem(std::string_view text) const override {
    auto le = parse_lock_effect(text);
    if (!le) return std::nullopt;
    if (!le->err)
      for (const auto& n : payload_names(*le))
        if (!locks_.count(n)) return std::nullopt;
    return own(*le);
  }

  static std::optional<LockEffect> parse_lock_effect(std::string_view text) {
    if (text == "ERR") return LockEffect::error();
    auto arrow = text.find("=>");
    if (arrow == std::string_view::npos) return std::nullopt;
    auto pre = parse_multiset(text.substr(0, arrow));
    auto post = parse_multiset(text.substr(arrow + 2));
    if (!pre || !post) return std::nullopt;
    return LockEffect::of(std::move(*pre), std::move(*post));
  }

 private:
  NameSet locks_;
};

class LockQuantale final : public LockQuantaleBase {
 public:
  explicit LockQuantale(const NameSet& locks)
      : LockQuantaleBase(lockset_key("lockset", locks), "lockset", locks) {}

  std::optional<Elem> analytic_star(const Elem& e) const override {
    const auto& le = std::get<LockEffect>(e.payload);
    if (le.err) return top();
    if (le.pre == le.post) return e;
    return top();
  }

 protected:
  Payload join_payload(const Payload& a, const Payload& b) const override {
    const auto& x = std::get<LockEffect>(a);
    const auto& y = std::get<LockEffect>(b);
    if (x.err || y.err) return LockEffect::error();
    if (!deltas_agree(x, y)) return LockEffect::error();
    return LockEffect::of(Multiset::join(x.pre, y.pre), Multiset::join(x.post, y.post));
  }

  Payload seq_payload(const Payload& a, const Payload& b) const override {
    const auto& x = std::get<LockEffect>(a);
    const auto& y = std::get<LockEffect>(b);
    if (x.err || y.err) return LockEffect::error();
    auto [c, c2] = lock_seq_pair(x.pre, x.post, y.pre, y.post);
    return LockEffect::of(std::move(c), std::move(c2));
  }
};

/// Set-based variant: any claim count above one is unrepresentable and maps to Err.
class LockSetQuantale final : public LockQuantaleBase {
 public:
  explicit LockSetQuantale(const NameSet& locks)
      : LockQuantaleBase(lockset_key("lockset-set", locks), "lockset-set", locks) {}

  std::optional<Elem> analytic_star(const Elem& e) const override {
    const auto& le = std::get<LockEffect>(e.payload);
    if (le.err) return top();
    if (le.pre == le.post) return e;
    return top();
  }

  std::optional<Elem> parse_elem(std::string_view text) const override {
    auto e = LockQuantaleBase::parse_elem(text);
    if (e && !std::get<LockEffect>(e->payload).err &&
        (std::get<LockEffect>(e->payload).pre.max_count() > 1 ||
         std::get<LockEffect>(e->payload).post.max_count() > 1))
      return std::nullopt;
    return e;
  }

 protected:
  Payload join_payload(const Payload& a, const Payload& b) const override {
    const auto& x = std::get<LockEffect>(a);
    const auto& y = std::get<LockEffect>(b);
    if (x.err || y.err) return LockEffect::error();
    if (!deltas_agree(x, y)) return LockEffect::error();
    return clamp(LockEffect::of(Multiset::join(x.pre, y.pre), Multiset::join(x.post, y.post)));
  }

  Payload seq_payload(const Payload& a, const Payload& b) const override {
    const auto& x = std::get<LockEffect>(a);
    const auto& y = std::get<LockEffect>(b);
    if (x.err || y.err) return LockEffect::error();
    auto [c, c2] = lock_seq_pair(x.pre, x.post, y.pre, y.post);
    return clamp(LockEffect::of(std::move(c), std::move(c2)));
  }

 private:
  static Payload clamp(LockEffect le) {
    if (le.pre.max_count() > 1 || le.post.max_count() > 1) return LockEffect::error();
    return le;
  }
};

template <class Q>
class LockFamilyImpl final : public IndexedFamily {
 public:
  explicit LockFamilyImpl(std::string key) : key_(std::move(key)) {}

  std::string family_key() const override { return key_; }

  QuantalePtr instantiate(const NameSet& names) const override {
    return std::make_shared<Q>(names);
  }

  std::optional<Elem> parse_payload(std::string_view text) const override {
    auto le = LockQuantaleBase::parse_lock_effect(text);
    if (!le) return std::nullopt;
    auto inst = instantiate(payload_names(*le));
    return inst->parse_elem(text);
  }

  Elem transport(const Elem& e, const QuantalePtr& target,
                 const std::function<std::string(const std::string&)>& map) const override {
    const auto& le = std::get<LockEffect>(e.payload);
    if (le.err) return target->top();
    Multiset pre, post;
    for (const auto& [name, count] : le.pre.entries()) {
      auto n = map(name);
      pre.set(n, pre.count(n) + count);
    }
    for (const auto& [name, count] : le.post.entries()) {
      auto n = map(name);
      post.set(n, post.count(n) + count);
    }
    auto* tq = dynamic_cast<const LockQuantaleBase*>(target.get());
    if (!tq) throw UsageError("lockset transport: target is not a lockset instance");
    for (const auto& n : pre.names())
      if (!tq->locks().count(n)) throw UsageError("lockset transport: '" + n + "' out of scope");
    for (const auto& n : post.names())
      if (!tq->locks().count(n)) throw UsageError("lockset transport: '" + n + "' out of scope");
    Elem out = target->own(LockEffect::of(std::move(pre), std::move(post)));
    if constexpr (std::is_same_v<Q, LockSetQuantale>) {
      const auto& moved = std::get<LockEffect>(out.payload);
      if (moved.pre.max_count() > 1 || moved.post.max_count() > 1) return target->top();
    }
    return out;
  }

 private:
  std::string key_;
};

}  // namespace

QuantalePtr lockset_quantale(const NameSet& locks) { return std::make_shared<LockQuantale>(locks); }

QuantalePtr lockset_set_quantale(const NameSet& locks) {
  return std::make_shared<LockSetQuantale>(locks);
}

FamilyPtr lockset_family() { return std::make_shared<LockFamilyImpl<LockQuantale>>("lockset"); }

FamilyPtr lockset_set_variant() {
  return std::make_shared<LockFamilyImpl<LockSetQuantale>>("lockset-set");
}

Elem lock_eff(const QuantalePtr& q, Multiset pre, Multiset post) {
  return q->own(LockEffect::of(std::move(pre), std::move(post)));
}

Elem lock_err(const QuantalePtr& q) { return q->top(); }

Elem lockset_join(const Elem& a, const Elem& b) { return a.owner->join(a, b); }
Elem lockset_seq(const Elem& a, const Elem& b) { return a.owner->seq(a, b); }

// ---------------------------------------------------------------------------
// Powerset lift

QuantalePtr powerset_quantale(const NameSet& universe) {
  if (universe.size() > 16) throw ConstructionError("powerset_quantale: universe too large");
  std::vector<std::string> names(universe.begin(), universe.end());
  std::vector<Payload> carrier;
  for (std::uint32_t bits = 0; bits < (1u << names.size()); ++bits) {
    NameSet s;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (bits & (1u << i)) s.insert(names[i]);
    carrier.push_back(std::move(s));
  }
  SemilatticeSpec spec;
  spec.key = lockset_key("powerset", universe);
  spec.name = "powerset";
  spec.carrier = std::move(carrier);
  spec.join = [](const Payload& a, const Payload& b) -> Payload {
    NameSet out = std::get<NameSet>(a);
    const auto& other = std::get<NameSet>(b);
    out.insert(other.begin(), other.end());
    return out;
  };
  spec.bottom = NameSet{};
  spec.top = universe;
  spec.render = [](const Payload& p) {
    std::string out = "{";
    bool first = true;
    for (const auto& n : std::get<NameSet>(p)) {
      if (!first) out += ',';
      out += n;
      first = false;
    }
    return out + "}";
  };
  spec.parse = [universe](std::string_view text) -> std::optional<Payload> {
    if (text.size() < 2 || text.front() != '{' || text.back() != '}') return std::nullopt;
    NameSet out;
    std::string_view body = text.substr(1, text.size() - 2);
    while (!body.empty()) {
      auto comma = body.find(',');
      std::string_view item = body.substr(0, comma);
      body = (comma == std::string_view::npos) ? std::string_view{} : body.substr(comma + 1);
      if (item.empty() || !universe.count(std::string(item))) return std::nullopt;
      out.insert(std::string(item));
    }
    return Payload(out);
  };
  return commutative_lift(std::move(spec));
}

// ---------------------------------------------------------------------------
// Bounded enumeration

std::vector<Elem> enumerate_lock_effects(const QuantalePtr& q, const NameSet& locks,
                                         int max_mult) {
  std::vector<std::string> names(locks.begin(), locks.end());
  std::vector<Multiset> multisets;
  std::vector<int> counts(names.size(), 0);
  for (;;) {
    Multiset m;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (counts[i] > 0) m.set(names[i], counts[i]);
    multisets.push_back(std::move(m));
    std::size_t k = 0;
    while (k < counts.size() && ++counts[k] > max_mult) counts[k++] = 0;
    if (k == counts.size()) break;
    if (names.empty()) break;
  }
  std::vector<Elem> out;
  out.reserve(multisets.size() * multisets.size() + 1);
  for (const auto& pre : multisets)
    for (const auto& post : multisets) {
      Elem e = q->own(LockEffect::of(pre, post));
      out.push_back(std::move(e));
    }
  out.push_back(q->top());
  return out;
}

}  // namespace eq
