#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "backchain/theory.hpp"

namespace backchain {

struct IntRange {
  int min = 0;
  int max = 0;
};

struct GenConfig {
  std::uint64_t seed = 0;
  int num_examples = 100;
  int depth = 3;  // proof depth of every Proved/Disproved example
  IntRange entities{3, 5};
  int predicate_pool = 12;
  IntRange facts{4, 8};  // distractor facts on top of those a planted proof needs
  IntRange rules{3, 8};  // distractor rules on top of the planted chain
  IntRange antecedents{1, 3};
  double negative_fact_prob = 0.2;
  double negative_consequent_prob = 0.2;
  double relational_prob = 0.25;
  std::map<Label, double> label_mix{{Label::Proved, 0.4}, {Label::Disproved, 0.3}, {Label::Unknown, 0.3}};
  int max_attempts = 500;  // per example

  /// Throws SchemaError.
  void validate() const;
  static GenConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

/// Deterministic for a fixed config. Every example satisfies
/// oracle_label == gold_label and, when decided, minimal closure depth ==
/// gold_depth == config.depth. Unknown examples carry no depth. Each example's
/// metadata records the partition depth under "dataset_depth".
/// Throws GenerationExhausted if an example cannot be built within
/// max_attempts tries.
std::vector<Example> generate(const GenConfig& config);

/// Counts how many facts share the goal's subject and predicate but not its
/// object (relational near misses).
std::size_t decoy_count(const Theory& theory, const Atom& goal);

struct PerturbSpec {
  enum class Mode { Tokens, Templates };
  Mode mode = Mode::Tokens;
  std::uint64_t seed = 0;
  std::vector<std::string> entity_pool;     // replaces subject constants
  std::vector<std::string> predicate_pool;  // replaces attributive and relational predicates
  std::vector<std::string> object_pool;     // replaces relational objects
  std::string template_pack = "v2";

  /// Pools default to built-in novel tokens when empty.
  static PerturbSpec tokens(std::uint64_t seed);
  static PerturbSpec templates(std::string pack_id = "v2");
  static PerturbSpec from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

/// Token mode renames every subject, predicate and object through a
/// per-example bijection drawn from the pools; labels, depths and structure
/// are preserved. Throws PoolCollisionError if a pool token already occurs
/// in the dataset or a pool is too small. Template mode tags every example
/// with the alternate pack ("template_pack" in metadata) after checking that
/// each statement round-trips through it.
std::vector<Example> perturb(const std::vector<Example>& dataset, const PerturbSpec& spec);

/// The theory as the text layer would deliver it: if metadata names a
/// template pack, each fact and rule is rendered with that pack and parsed
/// back. Otherwise a copy.
Theory materialize(const Theory& theory);

}  // namespace backchain
