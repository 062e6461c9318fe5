#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "backchain/engine.hpp"

namespace backchain {

struct SymbolicConfig {
  int fact_check_trials = 2;
};

/// Exact, LM-free implementation of the four reasoning modules over
/// structured atoms.
class SymbolicBackend : public ReasoningBackend {
 public:
  explicit SymbolicBackend(SymbolicConfig config = {});

  /// Select-then-verify, removing the selected fact after each failed trial.
  /// Each trial costs two calls (selection and verification).
  Metered<ModuleResult> fact_check(const Atom& goal, std::span<const Atom> facts) override;
  /// Consequent extraction runs once per distinct rule set (one call), then
  /// one matching call per invocation. Sign is not considered here.
  Metered<std::vector<std::string>> rule_selection(const Atom& goal, std::span<const Rule> rules) override;
  /// Throws UnificationError when the rule's consequent does not unify.
  Metered<std::vector<Atom>> goal_decomposition(const Rule& rule, const Atom& goal) override;
  Metered<bool> sign_agreement(const Rule& rule, const Atom& goal) override;

  bool thread_safe() const noexcept override { return true; }
  std::unique_ptr<ReasoningBackend> fork() const override;
  std::string_view name() const noexcept override { return "symbolic"; }

  const SymbolicConfig& config() const noexcept { return config_; }

  /// (subject match, predicate match, object match); larger is more relevant.
  static std::tuple<bool, bool, bool> relevance(const Atom& goal, const Atom& fact);
  static Label verify_fact(const Atom& fact, const Atom& goal);
  static bool unifies(const Atom& consequent, const Atom& goal);

 protected:
  /// Position in `candidates` of the fact to verify next. Default: highest
  /// relevance, ties broken by fact order.
  virtual std::size_t select_fact(const Atom& goal, std::span<const Atom> facts,
                                  std::span<const std::size_t> candidates) const;

 private:
  const std::vector<Atom>& consequents_for(std::span<const Rule> rules, bool& computed);

  SymbolicConfig config_;
  std::mutex memo_mutex_;
  std::unordered_map<std::string, std::vector<Atom>> consequent_memo_;
};

}  // namespace backchain
