#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "backchain/atom.hpp"
#include "backchain/theory.hpp"

namespace backchain {

enum class ModuleKind : std::uint8_t { FactCheck = 0, RuleSelection = 1, GoalDecomposition = 2, SignAgreement = 3 };
inline constexpr std::size_t kModuleKinds = 4;

std::string_view to_string(ModuleKind kind) noexcept;
ModuleKind module_kind_from_string(std::string_view text);

/// Outcome of Fact Check. `evidence` indexes the fact (in the list passed to
/// the backend) that entails or contradicts the goal.
struct ModuleResult {
  Label label = Label::Unknown;
  std::optional<std::size_t> evidence;

  friend bool operator==(const ModuleResult&, const ModuleResult&) = default;
};

/// A module output plus the number of language-model-equivalent calls spent
/// producing it (two-stage modules count each stage).
template <class T>
struct Metered {
  T value;
  std::uint32_t lm_calls = 0;
};

/// The four reasoning modules. Implementations are deterministic for a fixed
/// configuration.
class ReasoningBackend {
 public:
  virtual ~ReasoningBackend() = default;

  virtual Metered<ModuleResult> fact_check(const Atom& goal, std::span<const Atom> facts) = 0;
  /// Ids of the rules whose consequent unifies with `goal`, in input order.
  virtual Metered<std::vector<std::string>> rule_selection(const Atom& goal, std::span<const Rule> rules) = 0;
  virtual Metered<std::vector<Atom>> goal_decomposition(const Rule& rule, const Atom& goal) = 0;
  virtual Metered<bool> sign_agreement(const Rule& rule, const Atom& goal) = 0;

  /// Whether one instance may serve concurrent proofs. Backends that return
  /// false must be fork()ed per worker.
  virtual bool thread_safe() const noexcept = 0;
  /// Fresh per-proof instance sharing immutable configuration.
  virtual std::unique_ptr<ReasoningBackend> fork() const = 0;
  virtual std::string_view name() const noexcept = 0;
};

struct ModuleCallStats {
  std::array<std::uint64_t, kModuleKinds> fresh{};
  std::array<std::uint64_t, kModuleKinds> cache_hits{};
  std::uint64_t proof_cache_hits = 0;
  /// LM-equivalent calls; fresh invocations only, sub-module stages counted individually.
  std::uint64_t lm_calls = 0;

  std::uint64_t total_fresh() const noexcept;
  std::uint64_t total_cache_hits() const noexcept;

  ModuleCallStats& operator+=(const ModuleCallStats& other) noexcept;
  friend bool operator==(const ModuleCallStats&, const ModuleCallStats&) = default;
};

enum class Outcome : std::uint8_t { Proved, Disproved, Unknown, CycleCut, DepthCut };

std::string_view to_string(Outcome outcome) noexcept;
Outcome outcome_from_string(std::string_view text);
Label label_of(Outcome outcome) noexcept;

struct ModuleCall {
  ModuleKind kind = ModuleKind::FactCheck;
  bool cache_hit = false;
  std::uint32_t lm_calls = 0;
  std::string rule_id;                  // decomposition and sign agreement
  ModuleResult fact;                    // fact check
  std::vector<std::string> selected;    // rule selection
  std::vector<Atom> subgoals;           // goal decomposition
  bool agrees = false;                  // sign agreement

  friend bool operator==(const ModuleCall&, const ModuleCall&) = default;
};

struct TraceNode;

/// One attempted rule. `children` covers the evaluated prefix of `subgoals`;
/// evaluation stops at the first sub-goal that is not Proved.
struct RuleBranch {
  std::string rule_id;
  std::vector<Atom> subgoals;
  std::vector<TraceNode> children;
  std::optional<bool> sign_agrees;

  friend bool operator==(const RuleBranch&, const RuleBranch&);
};

struct TraceNode {
  Atom goal;
  int depth = 0;
  bool cache_hit = false;  // resolved from the proof-level cache
  std::vector<ModuleCall> module_calls;
  std::vector<RuleBranch> branches;
  Outcome outcome = Outcome::Unknown;

  std::size_t subtree_size() const noexcept;
  friend bool operator==(const TraceNode&, const TraceNode&) = default;
};

struct ProofTrace {
  TraceNode root;
  ModuleCallStats stats;

  friend bool operator==(const ProofTrace&, const ProofTrace&) = default;
};

struct EngineConfig {
  static constexpr int kGlobalMaxDepth = 10;

  int max_depth = 5;
  bool caching = true;
  bool cycle_check = true;

  static EngineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ProveRequest {
  const Theory& theory;
  Atom goal;
  int max_depth = 5;
};

struct ProofResult {
  Label label = Label::Unknown;
  ProofTrace trace;
};

/// Result cache for whole sub-proofs within one session. Proved/Disproved
/// answers carry over to deeper queries, Unknown answers to shallower ones.
class ProofCache {
 public:
  struct Entry {
    Atom goal;
    Label label;
    int depth;
  };

  std::optional<Label> lookup(const Atom& goal, int depth) const;
  void store(const Entry& entry);
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  struct Slot {
    std::optional<int> decided_depth;  // smallest depth with a Proved/Disproved answer
    Label decided = Label::Unknown;
    std::optional<int> unknown_depth;  // largest depth known to give Unknown
  };
  std::unordered_map<Atom, Slot, AtomHash> entries_;
};

/// True iff `goal` is exactly (subject, predicate, object, sign) one of the
/// open goals on `path`.
bool cycle_check(const Atom& goal, std::span<const Atom> path);

/// Stable sort by antecedent count.
std::vector<Rule> rerank(std::vector<Rule> rules);

/// Depth-limited goal-directed search over one theory. Each call to prove()
/// runs an isolated session: proof cache, module caches and the open-goal path
/// are not shared between calls.
class BackwardChainer {
 public:
  explicit BackwardChainer(EngineConfig config = {});

  /// Throws std::invalid_argument for an out-of-range depth. Backend errors
  /// abort the proof and propagate with the partial trace attached.
  ProofResult prove(const ProveRequest& request, ReasoningBackend& backend) const;

  const EngineConfig& config() const noexcept { return config_; }

 private:
  EngineConfig config_;
};

}  // namespace backchain
