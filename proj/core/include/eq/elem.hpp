#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace eq {

class Quantale;
using QuantalePtr = std::shared_ptr<const Quantale>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mixing elements of distinct instances, or otherwise calling an operation outside its contract.
struct UsageError : Error {
  using Error::Error;
};

/// A requested structure cannot be built (missing bottom, failed least-element condition, ...).
struct ConstructionError : Error {
  using Error::Error;
};

using NameSet = std::set<std::string>;

/// Multiset of names. Canonical form: entries sorted by name, all counts strictly positive.
class Multiset {
 public:
  Multiset() = default;
  explicit Multiset(std::initializer_list<std::pair<std::string, int>> entries);

  static Multiset of(std::initializer_list<std::string> names);

  int count(const std::string& name) const;
  void set(const std::string& name, int count);
  bool empty() const { return entries_.empty(); }
  std::size_t distinct() const { return entries_.size(); }
  int total() const;
  int max_count() const;

  /// Pointwise max.
  static Multiset join(const Multiset& a, const Multiset& b);
  /// Pointwise addition of multiplicities.
  static Multiset sum(const Multiset& a, const Multiset& b);
  /// Zero-limited pointwise subtraction.
  static Multiset diff(const Multiset& a, const Multiset& b);
  /// Inclusion: a(n) <= b(n) for every name.
  static bool leq(const Multiset& a, const Multiset& b);

  NameSet names() const;
  /// Merge occurrences of `from` into `to`.
  Multiset renamed(const std::string& from, const std::string& to) const;

  const std::vector<std::pair<std::string, int>>& entries() const { return entries_; }

  friend bool operator==(const Multiset&, const Multiset&) = default;
  friend auto operator<=>(const Multiset&, const Multiset&) = default;

 private:
  std::vector<std::pair<std::string, int>> entries_;
};

/// Lipton mover classes plus the Flanagan-Qadeer top and the quantale error element.
enum class Mover : std::uint8_t { B, L, R, A, TopFQ, Err };

std::string_view mover_name(Mover m);
std::optional<Mover> mover_from_name(std::string_view s);

/// Lock effect: Err, or a (pre, post) pair of lock-claim multisets.
struct LockEffect {
  bool err = false;
  Multiset pre;
  Multiset post;

  static LockEffect error() { return LockEffect{true, {}, {}}; }
  static LockEffect of(Multiset pre, Multiset post) {
    return LockEffect{false, std::move(pre), std::move(post)};
  }

  friend bool operator==(const LockEffect&, const LockEffect&) = default;
  friend auto operator<=>(const LockEffect&, const LockEffect&) = default;
};

struct Elem;

/// Payload of a product element. Both components null encodes the merged Err element;
/// otherwise both are non-null and neither equals its instance's top.
struct PairElem {
  std::shared_ptr<const Elem> first;
  std::shared_ptr<const Elem> second;
};

/// Canonical instance-specific payload. Structural equality over this variant is
/// element equality within an instance.
using Payload = std::variant<Mover, LockEffect, NameSet, PairElem, std::int64_t>;

/// Element of a quantale instance. Carries its owning instance; combining elements of
/// different instances is a usage error.
struct Elem {
  QuantalePtr owner;
  Payload payload;
};

bool payload_eq(const Payload& a, const Payload& b);
/// Total order on payloads of the same instance; used for canonical sorting and
/// deterministic counterexample reporting.
std::strong_ordering payload_cmp(const Payload& a, const Payload& b);
/// Names mentioned by a payload (lock names in lock effects, set members, ...).
NameSet payload_names(const Payload& p);
/// Rename every occurrence of `from` to `to` (merging multiset claims); recurses into pairs.
Payload payload_renamed(const Payload& p, const std::string& from, const std::string& to);

bool elem_eq(const Elem& a, const Elem& b);
std::strong_ordering elem_cmp(const Elem& a, const Elem& b);

}  // namespace eq
