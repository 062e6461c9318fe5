#include "backchain/forward.hpp"

#include <algorithm>
#include <set>

#include "backchain/errors.hpp"
#include "backchain/rng.hpp"
#include "backchain/serialize.hpp"

namespace backchain {

namespace {

std::vector<Term> entities_of(const Theory& theory) {
  std::vector<Term> out;
  std::set<std::string> seen;
  auto add = [&](const Term& t) {
    if (!t.is_variable() && seen.insert(t.name()).second) out.push_back(t);
  };
  for (const Atom& f : theory.facts) add(f.subject);
  for (const Rule& r : theory.rules) {
    for (const Atom& a : r.antecedents) add(a.subject);
    add(r.consequent.subject);
  }
  return out;
}

Atom bind(const Atom& atom, const Term& entity) {
  return atom.subject.is_variable() ? atom.with_subject(entity) : atom;
}

// Every grounding of `rule`: once per entity for variable rules, otherwise once.
template <class Fn>
void for_each_grounding(const Rule& rule, const std::vector<Term>& entities, Fn&& fn) {
  if (!rule.has_variable()) {
    fn(Term::constant(""));
    return;
  }
  for (const Term& e : entities) fn(e);
}

std::set<std::string> relevant_predicates(const Theory& theory, const Atom& goal) {
  std::set<std::string> relevant{goal.predicate};
  bool grew = true;
  while (grew) {
    grew = false;
    for (const Rule& r : theory.rules) {
      if (!relevant.contains(r.consequent.predicate)) continue;
      for (const Atom& a : r.antecedents) grew |= relevant.insert(a.predicate).second;
    }
  }
  return relevant;
}

}  // namespace

std::optional<int> Closure::depth_of(const Atom& atom) const {
  auto it = depth_.find(atom);
  if (it == depth_.end()) return std::nullopt;
  return it->second;
}

std::unordered_set<Atom, AtomHash> Closure::proof_chain(const Atom& atom) const {
  std::unordered_set<Atom, AtomHash> chain;
  if (!contains(atom)) return chain;
  std::vector<Atom> stack{atom};
  while (!stack.empty()) {
    Atom a = std::move(stack.back());
    stack.pop_back();
    if (!chain.insert(a).second) continue;
    auto it = witness_.find(a);
    if (it == witness_.end()) continue;
    for (const Atom& p : it->second.premises) stack.push_back(p);
  }
  return chain;
}

Closure closure(const Theory& theory) {
  Closure c;
  for (const Atom& f : theory.facts) c.depth_.emplace(f, 0);
  const std::vector<Term> entities = entities_of(theory);

  for (int round = 1;; ++round) {
    std::vector<std::pair<Atom, Closure::Derivation>> fresh;
    std::unordered_set<Atom, AtomHash> fresh_set;
    for (std::size_t ri = 0; ri < theory.rules.size(); ++ri) {
      const Rule& rule = theory.rules[ri];
      for_each_grounding(rule, entities, [&](const Term& e) {
        Atom conclusion = bind(rule.consequent, e);
        if (c.depth_.contains(conclusion) || fresh_set.contains(conclusion)) return;
        std::vector<Atom> premises;
        premises.reserve(rule.antecedents.size());
        for (const Atom& a : rule.antecedents) {
          Atom p = bind(a, e);
          if (!c.depth_.contains(p)) return;
          premises.push_back(std::move(p));
        }
        fresh_set.insert(conclusion);
        fresh.emplace_back(std::move(conclusion), Closure::Derivation{ri, std::move(premises)});
      });
    }
    if (fresh.empty()) break;
    for (auto& [atom, why] : fresh) {
      c.depth_.emplace(atom, round);
      c.witness_.emplace(std::move(atom), std::move(why));
    }
  }

  for (const auto& [atom, depth] : c.depth_) {
    if (atom.sign == Sign::Positive && c.depth_.contains(atom.negated())) {
      throw InconsistencyError("closure contains both " + debug_string(atom) + " and its negation");
    }
  }
  return c;
}

Label oracle_label(const Closure& closure, const Atom& goal) {
  if (closure.contains(goal)) return Label::Proved;
  if (closure.contains(goal.negated())) return Label::Disproved;
  return Label::Unknown;
}

Label oracle_label(const Theory& theory, const Atom& goal) { return oracle_label(closure(theory), goal); }

nlohmann::ordered_json ForwardRunStats::to_json() const {
  nlohmann::ordered_json j;
  j["steps"] = steps;
  j["module_calls"] = module_calls;
  j["unique_inferences"] = unique_inferences;
  j["on_path_flags"] = on_path;
  nlohmann::ordered_json inf = nlohmann::ordered_json::array();
  for (const Atom& a : inferences) inf.push_back(backchain::to_json(a));
  j["inferences"] = std::move(inf);
  return j;
}

SiResult si_prove(const Theory& theory, const Atom& goal, int max_steps, const SiPolicy& policy) {
  if (max_steps < 0) throw std::invalid_argument("max_steps must be non-negative");
  if (policy.epsilon < 0.0 || policy.epsilon > 1.0) throw std::invalid_argument("epsilon must lie in [0, 1]");

  const Closure full = closure(theory);
  std::unordered_set<Atom, AtomHash> chain = full.proof_chain(goal);
  if (chain.empty()) chain = full.proof_chain(goal.negated());

  const std::vector<Term> entities = entities_of(theory);
  const std::set<std::string> relevant = relevant_predicates(theory, goal);
  std::unordered_set<Atom, AtomHash> known(theory.facts.begin(), theory.facts.end());
  rng::Engine gen(policy.seed);

  SiResult result;
  ForwardRunStats& stats = result.stats;
  for (int step = 0; step < max_steps; ++step) {
    struct Candidate {
      Atom conclusion;
      bool is_new;
      bool is_relevant;
    };
    std::vector<Candidate> applicable;
    for (const Rule& rule : theory.rules) {
      for_each_grounding(rule, entities, [&](const Term& e) {
        for (const Atom& a : rule.antecedents) {
          if (!known.contains(bind(a, e))) return;
        }
        Atom conclusion = bind(rule.consequent, e);
        const bool is_new = !known.contains(conclusion);
        applicable.push_back({std::move(conclusion), is_new, relevant.contains(rule.consequent.predicate)});
      });
    }
    if (applicable.empty()) break;

    std::size_t pick = 0;
    if (policy.kind == SiPolicy::Kind::Noisy && rng::unit(gen) < policy.epsilon) {
      pick = rng::below(gen, applicable.size());
    } else {
      auto rank = [](const Candidate& c) { return (c.is_new ? 2 : 0) + (c.is_relevant ? 1 : 0); };
      for (std::size_t i = 1; i < applicable.size(); ++i) {
        if (rank(applicable[i]) > rank(applicable[pick])) pick = i;
      }
    }

    Atom& chosen = applicable[pick].conclusion;
    // A re-derivation adds nothing to the proof, so only fresh chain atoms count.
    stats.on_path.push_back(applicable[pick].is_new && chain.contains(chosen));
    known.insert(chosen);
    stats.inferences.push_back(std::move(chosen));
    ++stats.steps;
    stats.module_calls += 2;
  }

  stats.unique_inferences =
      std::unordered_set<Atom, AtomHash>(stats.inferences.begin(), stats.inferences.end()).size();
  if (known.contains(goal)) {
    result.label = Label::Proved;
  } else if (known.contains(goal.negated())) {
    result.label = Label::Disproved;
  }
  return result;
}

}  // namespace backchain
