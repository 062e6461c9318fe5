#include "backchain/symbolic.hpp"

#include <numeric>
#include <stdexcept>

#include "backchain/errors.hpp"

namespace backchain {

SymbolicBackend::SymbolicBackend(SymbolicConfig config) : config_(config) {
  if (config_.fact_check_trials < 1) throw std::invalid_argument("fact_check_trials must be >= 1");
}

std::unique_ptr<ReasoningBackend> SymbolicBackend::fork() const { return std::make_unique<SymbolicBackend>(config_); }

std::tuple<bool, bool, bool> SymbolicBackend::relevance(const Atom& goal, const Atom& fact) {
  return {fact.subject == goal.subject, fact.predicate == goal.predicate, fact.object == goal.object};
}

Label SymbolicBackend::verify_fact(const Atom& fact, const Atom& goal) {
  if (fact == goal) return Label::Proved;
  if (fact == goal.negated()) return Label::Disproved;
  return Label::Unknown;
}

bool SymbolicBackend::unifies(const Atom& consequent, const Atom& goal) {
  return consequent.predicate == goal.predicate && consequent.object == goal.object &&
         (consequent.subject.is_variable() || consequent.subject == goal.subject);
}

std::size_t SymbolicBackend::select_fact(const Atom& goal, std::span<const Atom> facts,
                                         std::span<const std::size_t> candidates) const {
  std::size_t best = 0;
  auto best_score = relevance(goal, facts[candidates[0]]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    auto score = relevance(goal, facts[candidates[i]]);
    if (score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

Metered<ModuleResult> SymbolicBackend::fact_check(const Atom& goal, std::span<const Atom> facts) {
  std::vector<std::size_t> remaining(facts.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  Metered<ModuleResult> out{ModuleResult{}, 0};
  for (int trial = 0; trial < config_.fact_check_trials && !remaining.empty(); ++trial) {
    const std::size_t pick = select_fact(goal, facts, remaining);
    const std::size_t index = remaining[pick];
    out.lm_calls += 2;
    const Label label = verify_fact(facts[index], goal);
    if (label != Label::Unknown) {
      out.value = ModuleResult{label, index};
      return out;
    }
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

const std::vector<Atom>& SymbolicBackend::consequents_for(std::span<const Rule> rules, bool& computed) {
  std::string key;
  for (const Rule& r : rules) key.append(r.id).append("|").append(debug_string(r.consequent)).append(";");
  std::lock_guard lock(memo_mutex_);
  auto it = consequent_memo_.find(key);
  computed = it == consequent_memo_.end();
  if (computed) {
    std::vector<Atom> consequents;
    consequents.reserve(rules.size());
    for (const Rule& r : rules) consequents.push_back(r.consequent);
    it = consequent_memo_.emplace(std::move(key), std::move(consequents)).first;
  }
  return it->second;
}

Metered<std::vector<std::string>> SymbolicBackend::rule_selection(const Atom& goal, std::span<const Rule> rules) {
  Metered<std::vector<std::string>> out{{}, 0};
  if (rules.empty()) return out;
  bool computed = false;
  const std::vector<Atom>& consequents = consequents_for(rules, computed);
  out.lm_calls = computed ? 2 : 1;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (unifies(consequents[i], goal)) out.value.push_back(rules[i].id);
  }
  return out;
}

Metered<std::vector<Atom>> SymbolicBackend::goal_decomposition(const Rule& rule, const Atom& goal) {
  if (!unifies(rule.consequent, goal)) {
    throw UnificationError("rule " + rule.id + " does not unify with " + debug_string(goal));
  }
  Metered<std::vector<Atom>> out{{}, 1};
  out.value.reserve(rule.antecedents.size());
  for (const Atom& a : rule.antecedents) {
    out.value.push_back(a.subject.is_variable() ? a.with_subject(goal.subject) : a);
  }
  return out;
}

Metered<bool> SymbolicBackend::sign_agreement(const Rule& rule, const Atom& goal) {
  return {rule.consequent.sign == goal.sign, 1};
}

}  // namespace backchain
