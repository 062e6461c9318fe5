#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "backchain/text.hpp"

namespace backchain::lm {

/// One few-shot prompt per LM call shape. Fact Check and Rule Selection are
/// two-stage modules and own two shapes each.
enum class PromptKind : std::uint8_t {
  FactSelection,
  FactVerification,
  RuleImplications,
  RuleSelection,
  GoalDecomposition,
  SignAgreement,
};
inline constexpr std::array<PromptKind, 6> kPromptKinds = {
    PromptKind::FactSelection,     PromptKind::FactVerification,  PromptKind::RuleImplications,
    PromptKind::RuleSelection,     PromptKind::GoalDecomposition, PromptKind::SignAgreement};

std::string_view to_string(PromptKind kind) noexcept;
PromptKind prompt_kind_from_string(std::string_view text);  // throws PromptPackError

/// Input fields are text, shaped per kind:
///   fact_selection     {"facts": [sentence...], "question": "Eric is nice?"}
///   fact_verification  {"fact": sentence, "question": ...}
///   rule_implications  {"rules": [sentence...]}
///   rule_selection     {"implications": ["(is; nice)"...], "question": ...}
///   goal_decomposition {"rule": sentence, "question": ...}
///   sign_agreement     {"rule": sentence, "question": ...}
struct Demonstration {
  nlohmann::json input_fields;
  std::string inference_text;

  friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

class PromptPack {
 public:
  static constexpr std::size_t kDefaultDemonstrations = 4;

  /// Demonstrations written for the v1 templates.
  static const PromptPack& builtin();
  /// Throws PromptPackError on malformed files or demonstrations that fail
  /// the self-consistency check.
  static PromptPack from_json(const nlohmann::json& j, const TemplatePack& text = TemplatePack::v1());
  static PromptPack load(const std::filesystem::path& path, const TemplatePack& text = TemplatePack::v1());
  nlohmann::ordered_json to_json() const;

  /// Throws PromptPackError if the kind has no demonstrations.
  const std::vector<Demonstration>& demonstrations(PromptKind kind) const;
  void set(PromptKind kind, std::vector<Demonstration> demos);

  /// Parses every demonstration's inference text and compares it with the
  /// output recomputed from its inputs. Throws PromptPackError on the first
  /// mismatch.
  void check(const TemplatePack& text = TemplatePack::v1()) const;

 private:
  std::array<std::vector<Demonstration>, kPromptKinds.size()> demos_;
};

// Input builders.
nlohmann::json fact_selection_inputs(const Atom& goal, std::span<const Atom> facts);
nlohmann::json fact_verification_inputs(const Atom& fact, const Atom& goal);
nlohmann::json rule_implications_inputs(std::span<const Rule> rules, const TemplatePack& text = TemplatePack::v1());
nlohmann::json rule_selection_inputs(const std::vector<std::string>& implications, const Atom& goal);
nlohmann::json goal_decomposition_inputs(const Rule& rule, const Atom& goal,
                                         const TemplatePack& text = TemplatePack::v1());
nlohmann::json sign_agreement_inputs(const Rule& rule, const Atom& goal,
                                     const TemplatePack& text = TemplatePack::v1());

/// `Eric is nice?`
std::string question_text(const Atom& goal);
/// Sign-free consequent tuple: `(is; red)`, `(like; dog)` for variable
/// subjects, `(cat; chase; dog)` style when the subject is a constant.
std::string implication_tuple(const Atom& atom);

/// The input block for one example, ending in "Inference: " (no inference).
std::string render_block(PromptKind kind, const nlohmann::json& input_fields);
/// The first `k` demonstrations followed by the query block. Throws
/// PromptPackError for missing demonstrations or empty fact/rule lists.
std::string render_prompt(const PromptPack& pack, PromptKind kind, const nlohmann::json& input_fields,
                          std::size_t k = PromptPack::kDefaultDemonstrations);

/// Parsed module outputs, by kind:
///   FactSelection -> std::size_t (0-based fact index)
///   FactVerification -> Label
///   RuleImplications -> std::vector<std::string> (tuples, one per rule)
///   RuleSelection -> std::vector<std::size_t> (0-based indices of applicable rules)
///   GoalDecomposition -> std::vector<Atom>
///   SignAgreement -> bool
using ModuleOutput =
    std::variant<std::size_t, Label, std::vector<std::string>, std::vector<std::size_t>, std::vector<Atom>, bool>;

/// Only the first line of `completion` is considered. `expected_items` bounds
/// fact and rule indices (0 = unchecked). Throws CompletionParseError.
ModuleOutput parse_response(PromptKind kind, std::string_view completion, std::size_t expected_items = 0,
                            const TemplatePack& text = TemplatePack::v1());

/// The correct inference text for the given inputs, computed symbolically.
std::string render_inference(PromptKind kind, const nlohmann::json& input_fields,
                             const TemplatePack& text = TemplatePack::v1());

/// Splits a rendered prompt into its kind-agnostic query block fields. Used by
/// offline responders; throws PromptPackError if the prompt has no query block.
struct QueryBlock {
  PromptKind kind;
  nlohmann::json input_fields;
};
QueryBlock parse_query_block(std::string_view prompt);

}  // namespace backchain::lm
