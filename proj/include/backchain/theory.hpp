#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "backchain/atom.hpp"

namespace backchain {

/// `If antecedents then consequent`. At most one variable (`?x`) is shared by
/// every variable-subject part of the rule.
struct Rule {
  std::string id;
  std::vector<Atom> antecedents;
  Atom consequent;

  bool has_variable() const noexcept;

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct Theory {
  std::vector<Atom> facts;
  std::vector<Rule> rules;
  nlohmann::json metadata = nlohmann::json::object();

  const Rule* find_rule(const std::string& id) const noexcept;

  friend bool operator==(const Theory&, const Theory&) = default;
};

struct Example {
  Theory theory;
  Atom goal;
  Label gold_label = Label::Unknown;
  std::optional<int> gold_depth;

  friend bool operator==(const Example&, const Example&) = default;
};

/// Each validator throws SchemaError naming the first violated invariant.
void validate_rule(const Rule& rule, const std::string& path);
void validate_theory(const Theory& theory, const std::string& path = "$");
void validate_example(const Example& example);

}  // namespace backchain
