#pragma once

#include "eq/checker.hpp"

namespace eq {

/// Interpreter configuration: abstract state, current term, state-type
/// environment, and the dynamic effect accumulated so far.
struct MachineState {
  StatePtr state;
  TermPtr term;
  StateTypeEnv sigma;
  Elem accumulated;  // ground, owned by the instance at sigma's index names
};

MachineState initial_machine(const LanguageParams& params, TermPtr program);

struct Stepped {
  MachineState next;
  Elem step_effect;
  std::string rule;
};
struct IsValue {};
struct StuckPrimitive {
  std::string prim;
  std::string detail;
};
struct RuntimeTypeError {
  std::string detail;
};

using StepOutcome = std::variant<Stepped, IsValue, StuckPrimitive, RuntimeTypeError>;

/// One labelled small step, with left-to-right call-by-value descent:
/// function position, then argument; type-application subject; if-condition;
/// primitive argument spines left to right.
StepOutcome step(const LanguageParams& params, const MachineState& st);

struct RunResult {
  enum class Kind { Value, Diverged, Stuck, TypeError };
  Kind kind;
  MachineState final_state;
  std::uint64_t steps = 0;
  std::string detail;
};

using TraceFn = std::function<void(std::uint64_t index, const std::string& rule,
                                   const Elem& step_effect, const MachineState& next)>;

RunResult run(const LanguageParams& params, TermPtr program, std::uint64_t fuel = 100000,
              const TraceFn& trace = nullptr);

struct HarnessViolation {
  std::uint64_t step = 0;
  std::string what;
};

/// Dynamic check of the preservation theorem: after every step,
/// accumulated ; residual ⊑ static effect, Σ grows monotonically, and the
/// state stays well-typed. Also audits progress: a typed term never reaches a
/// runtime type error.
struct HarnessReport {
  bool program_typed = false;
  bool ok = false;
  std::uint64_t steps = 0;
  std::string static_effect;
  std::string final_accumulated;
  std::string outcome;  // value | diverged | stuck(<prim>) | type-error
  std::optional<HarnessViolation> violation;
  std::vector<Diagnostic> diagnostics;
};

HarnessReport preservation_harness(const LanguageParams& params, TermPtr program,
                                   std::uint64_t fuel = 100000);
HarnessReport preservation_harness(const LanguageParams& params, std::string_view text,
                                   std::uint64_t fuel = 100000);

}  // namespace eq
