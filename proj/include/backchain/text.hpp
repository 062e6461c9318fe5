#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "backchain/atom.hpp"
#include "backchain/theory.hpp"

namespace backchain {

/// Surface wording for rules. Facts use the same sentence shapes in every
/// pack; packs differ only in how rules are phrased.
///
///   v1: If someone is big and red then they are nice.
///   v2: It is a truth that whenever something is big and also red, it is always nice as well.
struct TemplatePack {
  std::string id;
  std::string rule_open;
  std::string rule_then;
  std::string rule_close;
  std::string conjunction;
  std::string variable_antecedent;
  std::string variable_consequent;
  bool plural_variable_consequent = true;
  // Adverbs inserted after the consequent copula; empty in v1. A non-empty
  // negative adverb replaces "not".
  std::string consequent_adverb_pos;
  std::string consequent_adverb_neg;

  static const TemplatePack& v1();
  static const TemplatePack& v2();
  /// Throws std::invalid_argument for unregistered ids.
  static const TemplatePack& by_id(std::string_view id);
};

using Statement = std::variant<Atom, Rule>;

std::string render_text(const Atom& atom, const TemplatePack& pack = TemplatePack::v1());
std::string render_text(const Rule& rule, const TemplatePack& pack = TemplatePack::v1());

/// `Eric is big` / `someone likes the dog`: an atom as a clause without the
/// final period. Variable subjects use the pack's antecedent word.
std::string render_clause(const Atom& atom, const TemplatePack& pack = TemplatePack::v1());

/// Parses a sentence produced by `render_text`. Rules come back with an empty
/// id. Throws ParseError at the first token no template accepts.
Statement parse_text(std::string_view sentence, const TemplatePack& pack = TemplatePack::v1());

Atom parse_fact(std::string_view sentence, const TemplatePack& pack = TemplatePack::v1());
Rule parse_rule(std::string_view sentence, std::string id, const TemplatePack& pack = TemplatePack::v1());

}  // namespace backchain
