#include "eq/elem.hpp"

#include <algorithm>

#include "eq/algebra.hpp"

namespace eq {

Multiset::Multiset(std::initializer_list<std::pair<std::string, int>> entries) {
  for (const auto& [name, count] : entries) set(name, this->count(name) + count);
}

Multiset Multiset::of(std::initializer_list<std::string> names) {
  Multiset m;
  for (const auto& n : names) m.set(n, m.count(n) + 1);
  return m;
}

int Multiset::count(const std::string& name) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                             [](const auto& e, const std::string& n) { return e.first < n; });
  return (it != entries_.end() && it->first == name) ? it->second : 0;
}

void Multiset::set(const std::string& name, int count) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                             [](const auto& e, const std::string& n) { return e.first < n; });
  if (it != entries_.end() && it->first == name) {
    if (count > 0)
      it->second = count;
    else
      entries_.erase(it);
  } else if (count > 0) {
    entries_.insert(it, {name, count});
  }
}

int Multiset::total() const {
  int t = 0;
  for (const auto& [_, c] : entries_) t += c;
  return t;
}

int Multiset::max_count() const {
  int m = 0;
  for (const auto& [_, c] : entries_) m = std::max(m, c);
  return m;
}

namespace {

template <class F>
Multiset merge_pointwise(const Multiset& a, const Multiset& b, F combine) {
  Multiset out;
  auto ia = a.entries().begin(), ea = a.entries().end();
  auto ib = b.entries().begin(), eb = b.entries().end();
  while (ia != ea || ib != eb) {
    if (ib == eb || (ia != ea && ia->first < ib->first)) {
      out.set(ia->first, combine(ia->second, 0));
      ++ia;
    } else if (ia == ea || ib->first < ia->first) {
      out.set(ib->first, combine(0, ib->second));
      ++ib;
    } else {
      out.set(ia->first, combine(ia->second, ib->second));
      ++ia;
      ++ib;
    }
  }
  return out;
}

}  // namespace

Multiset Multiset::join(const Multiset& a, const Multiset& b) {
  return merge_pointwise(a, b, [](int x, int y) { return std::max(x, y); });
}

Multiset Multiset::sum(const Multiset& a, const Multiset& b) {
  return merge_pointwise(a, b, [](int x, int y) { return x + y; });
}

Multiset Multiset::diff(const Multiset& a, const Multiset& b) {
  return merge_pointwise(a, b, [](int x, int y) { return std::max(x - y, 0); });
}

bool Multiset::leq(const Multiset& a, const Multiset& b) {
  for (const auto& [name, c] : a.entries_)
    if (c > b.count(name)) return false;
  return true;
}

NameSet Multiset::names() const {
  NameSet out;
  for (const auto& [name, _] : entries_) out.insert(name);
  return out;
}

Multiset Multiset::renamed(const std::string& from, const std::string& to) const {
  Multiset out;
  for (const auto& [name, c] : entries_) {
    const std::string& n = (name == from) ? to : name;
    out.set(n, out.count(n) + c);
  }
  return out;
}

std::string_view mover_name(Mover m) {
  switch (m) {
    case Mover::B: return "B";
    case Mover::L: return "L";
    case Mover::R: return "R";
    case Mover::A: return "A";
    case Mover::TopFQ: return "TOP";
    case Mover::Err: return "ERR";
  }
  return "?";
}

std::optional<Mover> mover_from_name(std::string_view s) {
  if (s == "B") return Mover::B;
  if (s == "L") return Mover::L;
  if (s == "R") return Mover::R;
  if (s == "A") return Mover::A;
  if (s == "TOP") return Mover::TopFQ;
  if (s == "ERR") return Mover::Err;
  return std::nullopt;
}

namespace {

std::strong_ordering cmp_int(long a, long b) {
  if (a < b) return std::strong_ordering::less;
  if (a > b) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::strong_ordering pair_cmp(const PairElem& a, const PairElem& b) {
  const bool ae = !a.first, be = !b.first;
  if (ae || be) return cmp_int(ae ? 0 : 1, be ? 0 : 1);
  // Components of a well-formed product share owners; compare payloads only so
  // rename-translated copies stay comparable.
  auto c = payload_cmp(a.first->payload, b.first->payload);
  if (c != 0) return c;
  return payload_cmp(a.second->payload, b.second->payload);
}

}  // namespace

std::strong_ordering payload_cmp(const Payload& a, const Payload& b) {
  if (a.index() != b.index()) return cmp_int(long(a.index()), long(b.index()));
  return std::visit(
      [&](const auto& x) -> std::strong_ordering {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b);
        if constexpr (std::is_same_v<T, Mover>) {
          return cmp_int(long(x), long(y));
        } else if constexpr (std::is_same_v<T, LockEffect>) {
          return x <=> y;
        } else if constexpr (std::is_same_v<T, NameSet>) {
          return x <=> y;
        } else if constexpr (std::is_same_v<T, PairElem>) {
          return pair_cmp(x, y);
        } else {
          return cmp_int(long(x), long(y));
        }
      },
      a);
}

bool payload_eq(const Payload& a, const Payload& b) { return payload_cmp(a, b) == 0; }

NameSet payload_names(const Payload& p) {
  return std::visit(
      [](const auto& x) -> NameSet {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LockEffect>) {
          if (x.err) return {};
          NameSet out = x.pre.names();
          out.merge(x.post.names());
          return out;
        } else if constexpr (std::is_same_v<T, NameSet>) {
          return x;
        } else if constexpr (std::is_same_v<T, PairElem>) {
          if (!x.first) return {};
          NameSet out = payload_names(x.first->payload);
          out.merge(payload_names(x.second->payload));
          return out;
        } else {
          return {};
        }
      },
      p);
}

Payload payload_renamed(const Payload& p, const std::string& from, const std::string& to) {
  return std::visit(
      [&](const auto& x) -> Payload {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LockEffect>) {
          if (x.err) return x;
          return LockEffect::of(x.pre.renamed(from, to), x.post.renamed(from, to));
        } else if constexpr (std::is_same_v<T, NameSet>) {
          NameSet out;
          for (const auto& n : x) out.insert(n == from ? to : n);
          return out;
        } else if constexpr (std::is_same_v<T, PairElem>) {
          throw UsageError("rename of product payloads must go through the family transport");
        } else {
          return x;
        }
      },
      p);
}

bool elem_eq(const Elem& a, const Elem& b) { return elem_cmp(a, b) == 0; }

std::strong_ordering elem_cmp(const Elem& a, const Elem& b) {
  if (a.owner && b.owner && a.owner->key() != b.owner->key())
    return a.owner->key() <=> b.owner->key();
  return payload_cmp(a.payload, b.payload);
}

}  // namespace eq
