#include "backchain/theory.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "backchain/errors.hpp"

namespace backchain {

bool Rule::has_variable() const noexcept {
  if (consequent.subject.is_variable()) return true;
  return std::any_of(antecedents.begin(), antecedents.end(),
                     [](const Atom& a) { return a.subject.is_variable(); });
}

const Rule* Theory::find_rule(const std::string& id) const noexcept {
  auto it = std::find_if(rules.begin(), rules.end(), [&](const Rule& r) { return r.id == id; });
  return it == rules.end() ? nullptr : &*it;
}

void validate_rule(const Rule& rule, const std::string& path) {
  if (rule.id.empty()) throw SchemaError(path + ".id", "empty rule id");
  if (rule.antecedents.empty()) throw SchemaError(path + ".antecedents", "rule without antecedents");
  bool variable_antecedent = false;
  for (std::size_t i = 0; i < rule.antecedents.size(); ++i) {
    const std::string at = path + ".antecedents[" + std::to_string(i) + "]";
    validate_atom(rule.antecedents[i], false, at);
    variable_antecedent = variable_antecedent || rule.antecedents[i].subject.is_variable();
    for (std::size_t j = 0; j < i; ++j) {
      if (rule.antecedents[j] == rule.antecedents[i]) throw SchemaError(at, "duplicate antecedent");
    }
  }
  validate_atom(rule.consequent, false, path + ".consequent");
  if (variable_antecedent && !rule.consequent.subject.is_variable()) {
    throw SchemaError(path + ".consequent.subject",
                      "variable antecedent requires the consequent to share the variable");
  }
  if (!variable_antecedent && rule.consequent.subject.is_variable()) {
    throw SchemaError(path + ".consequent.subject", "consequent variable is not bound by any antecedent");
  }
}

void validate_theory(const Theory& theory, const std::string& path) {
  std::unordered_set<Atom, AtomHash> seen;
  for (std::size_t i = 0; i < theory.facts.size(); ++i) {
    const std::string at = path + ".facts[" + std::to_string(i) + "]";
    const Atom& fact = theory.facts[i];
    validate_atom(fact, true, at);
    if (seen.contains(fact)) throw SchemaError(at, "duplicate fact");
    if (seen.contains(fact.negated())) throw SchemaError(at, "fact contradicts an earlier fact");
    seen.insert(fact);
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < theory.rules.size(); ++i) {
    const std::string at = path + ".rules[" + std::to_string(i) + "]";
    validate_rule(theory.rules[i], at);
    if (!ids.insert(theory.rules[i].id).second) throw SchemaError(at + ".id", "duplicate rule id");
  }
  if (!theory.metadata.is_object()) throw SchemaError(path + ".metadata", "metadata must be an object");
}

void validate_example(const Example& example) {
  validate_theory(example.theory);
  validate_atom(example.goal, true, "$.goal");
  if (example.gold_depth && *example.gold_depth < 0) throw SchemaError("$.depth", "negative depth");
  if (example.gold_label != Label::Unknown && !example.gold_depth) {
    throw SchemaError("$.depth", "depth is required for proved/disproved examples");
  }
}

}  // namespace backchain
