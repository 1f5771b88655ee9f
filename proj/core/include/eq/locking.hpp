#pragma once

#include <map>

#include "eq/instances.hpp"
#include "eq/interp.hpp"

namespace eq {

enum class LockModel {
  Boolean,   // a held lock cannot be re-acquired (acquire is undefined on it)
  Counting,  // locks carry claim counts; re-acquisition increments
};

struct LockHeapState final : AbstractState {
  std::map<std::string, int> locks;     // lock name -> held count
  std::map<std::string, TermPtr> heap;  // location -> stored value
  std::uint64_t next_lock = 0;
  std::uint64_t next_ref = 0;

  std::string describe() const override;
};

/// The locking+atomicity parameter bundle: Q(X) = lockset(X) ⊗ atomicity,
/// type families lock :: * and ref :: * => * => *, the nine primitives
/// (new_lock, acquire, release, alloc, read_sync, read_racy, write_sync,
/// write_racy, req_atomic) with their partial semantics, and the state-typing
/// relation requiring every heap cell to type at its declared payload.
LanguageParams fq_params(LockModel model = LockModel::Boolean);

/// The same bundle over the set-based lockset variant (recursive acquisition
/// is statically Err).
LanguageParams fq_params_set_variant(LockModel model = LockModel::Boolean);

/// Parameter bundle with no primitives and a unit state, over an arbitrary
/// family; effects enter programs only through latent-effect annotations.
LanguageParams pure_params(FamilyPtr family);

/// The atomicity component of a ground effect of the product instance.
Mover atomicity_of(const Elem& product_elem);

}  // namespace eq
