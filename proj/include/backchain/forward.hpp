#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "backchain/atom.hpp"
#include "backchain/theory.hpp"

namespace backchain {

/// Every atom derivable from a theory, with its minimal derivation depth
/// (facts at depth 0; a rule conclusion sits one above its deepest premise).
class Closure {
 public:
  struct Derivation {
    std::size_t rule_index;
    std::vector<Atom> premises;
  };

  std::optional<int> depth_of(const Atom& atom) const;
  bool contains(const Atom& atom) const { return depth_.contains(atom); }
  std::size_t size() const noexcept { return depth_.size(); }
  const std::unordered_map<Atom, int, AtomHash>& depths() const noexcept { return depth_; }

  /// Atoms of one minimal-depth derivation tree of `atom` (the atom itself,
  /// intermediate conclusions and the facts at the leaves). Empty if absent.
  std::unordered_set<Atom, AtomHash> proof_chain(const Atom& atom) const;

 private:
  friend Closure closure(const Theory& theory);

  std::unordered_map<Atom, int, AtomHash> depth_;
  std::unordered_map<Atom, Derivation, AtomHash> witness_;
};

/// Exhaustive modus-ponens fixpoint. Open world: negative atoms come only
/// from negative facts or negative consequents. Throws InconsistencyError if
/// some atom is derived with both signs.
Closure closure(const Theory& theory);

Label oracle_label(const Closure& closure, const Atom& goal);
Label oracle_label(const Theory& theory, const Atom& goal);

struct SiPolicy {
  enum class Kind { Deterministic, Noisy };
  Kind kind = Kind::Deterministic;
  std::uint64_t seed = 0;
  double epsilon = 0.0;

  static SiPolicy deterministic() { return {}; }
  static SiPolicy noisy(std::uint64_t seed, double epsilon) { return {Kind::Noisy, seed, epsilon}; }
};

struct ForwardRunStats {
  int steps = 0;
  std::vector<Atom> inferences;
  std::uint64_t module_calls = 0;
  std::size_t unique_inferences = 0;
  std::vector<bool> on_path;  // k-th inference is new and lies on the minimal derivation of the goal

  nlohmann::ordered_json to_json() const;
};

struct SiResult {
  Label label = Label::Unknown;
  ForwardRunStats stats;
};

/// Selection-inference style forward prover: each step selects one applicable
/// (rule, supporting facts) pair and appends its conclusion, for exactly
/// `max_steps` steps (fewer only if nothing is applicable). Two module calls
/// per step.
SiResult si_prove(const Theory& theory, const Atom& goal, int max_steps, const SiPolicy& policy);

}  // namespace backchain
