#pragma once
// Hand-made corruptions of two known-good traces, each tagged with the
// violation the validator must report.

#include <functional>
#include <string>
#include <vector>

#include "backchain/engine.hpp"
#include "backchain/eval.hpp"
#include "backchain/symbolic.hpp"
#include "backchain/trace_io.hpp"
#include "support.hpp"

namespace testing {

struct TraceFixture {
  Theory theory;
  nlohmann::json trace;
};

inline TraceFixture eric_fixture() {
  SymbolicBackend b;
  const Theory t = eric_theory();
  const auto r = BackwardChainer().prove({t, fact("Eric is nice."), 5}, b);
  return {t, nlohmann::json::parse(trace_to_json(r.trace).dump())};
}

inline TraceFixture dave_fixture() {
  SymbolicBackend b;
  const Theory t = dave_theory();
  const auto r = BackwardChainer().prove({t, fact("Dave is not green."), 5}, b);
  return {t, nlohmann::json::parse(trace_to_json(r.trace).dump())};
}

struct Fault {
  std::string name;
  bool dave;  // which fixture
  Violation expected;
  std::function<void(nlohmann::json&)> apply;
};

namespace fault_paths {
using J = nlohmann::json;
// Eric: root -> Rule6 -> [big (fact), rough (Rule1 fails, Rule3), young (fact)].
inline J& rule6(J& t) { return t["root"]["branches"][0]; }
inline J& big(J& t) { return rule6(t)["children"][0]; }
inline J& rough(J& t) { return rule6(t)["children"][1]; }
inline J& rule3(J& t) { return rough(t)["branches"][1]; }
// Dave: root -> Rule3 (sign disagrees) -> [blue, cold (cached), young (cached)].
inline J& dave_rule3(J& t) { return t["root"]["branches"][1]; }
inline J& blue(J& t) { return dave_rule3(t)["children"][0]; }
inline J& white(J& t) { return blue(t)["branches"][0]["children"][0]["branches"][0]["children"][0]["branches"][0]["children"][0]; }
inline J& fact_call(J& node) { return node["module_calls"][0]; }
}  // namespace fault_paths

inline std::vector<Fault> trace_faults() {
  using namespace fault_paths;
  using V = Violation;
  return {
      {"evidence points at an unrelated fact", false, V::MissingEvidence, [](J& t) { fact_call(big(t))["evidence"] = 3; }},
      {"evidence index out of range", false, V::MissingEvidence, [](J& t) { fact_call(big(t))["evidence"] = 99; }},
      {"decided fact check without evidence", false, V::MissingEvidence,
       [](J& t) { fact_call(big(t))["evidence"] = nullptr; }},
      {"evidence for a deep fact swapped", true, V::MissingEvidence, [](J& t) { fact_call(white(t))["evidence"] = 1; }},

      {"rule id that does not exist", false, V::WrongRule, [](J& t) { rule6(t)["rule_id"] = "Rule99"; }},
      {"rule whose consequent does not unify", false, V::WrongRule, [](J& t) { rule6(t)["rule_id"] = "Rule5"; }},
      {"inner rule swapped for a non-unifying one", false, V::WrongRule, [](J& t) { rule3(t)["rule_id"] = "Rule2"; }},
      {"disproving rule swapped", true, V::WrongRule, [](J& t) { dave_rule3(t)["rule_id"] = "Rule1"; }},

      {"sub-goal predicate altered", false, V::BadDecomposition,
       [](J& t) { rule6(t)["subgoals"][1]["predicate"] = "cold"; }},
      {"sub-goal dropped", false, V::BadDecomposition, [](J& t) { rule6(t)["subgoals"].erase(2); }},
      {"child proves a different goal", false, V::BadDecomposition,
       [](J& t) { big(t)["goal"]["predicate"] = "round"; }},
      {"sub-goal subject altered", true, V::BadDecomposition,
       [](J& t) { dave_rule3(t)["subgoals"][0]["subject"] = "Eric"; }},
      {"sub-goal sign flipped", false, V::BadDecomposition, [](J& t) { rule6(t)["subgoals"][0]["sign"] = "neg"; }},

      {"root sign decision flipped", false, V::WrongSign, [](J& t) { rule6(t)["sign_agrees"] = false; }},
      {"disagreeing sign claimed to agree", true, V::WrongSign, [](J& t) { dave_rule3(t)["sign_agrees"] = true; }},
      {"inner sign decision flipped", false, V::WrongSign, [](J& t) { rule3(t)["sign_agrees"] = false; }},
      {"nested sign decision flipped", true, V::WrongSign,
       [](J& t) { blue(t)["branches"][0]["sign_agrees"] = false; }},

      {"fact label contradicts the outcome", false, V::UnsupportedLabel,
       [](J& t) { fact_call(big(t))["label"] = "disproved"; }},
      {"root outcome inverted", false, V::UnsupportedLabel, [](J& t) { t["root"]["outcome"] = "disproved"; }},
      {"child missing", false, V::UnsupportedLabel, [](J& t) { rule6(t)["children"].erase(2); }},
      {"child left unproved", false, V::UnsupportedLabel, [](J& t) { rule6(t)["children"][2]["outcome"] = "unknown"; }},
      {"disproved root relabelled proved", true, V::UnsupportedLabel, [](J& t) { t["root"]["outcome"] = "proved"; }},
      {"decided root with no support", false, V::UnsupportedLabel,
       [](J& t) { t["root"]["branches"] = J::array(); }},
      {"malformed node", false, V::UnsupportedLabel, [](J& t) { t["root"].erase("goal"); }},
  };
}

}  // namespace testing
