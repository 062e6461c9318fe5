#include "backchain/text.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

#include "backchain/errors.hpp"

namespace backchain {

namespace {

struct Token {
  std::string_view text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view s, std::size_t base) {
  std::vector<Token> tokens;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(' ', start);
    if (end == std::string_view::npos) end = s.size();
    if (end == start) throw ParseError("empty token", base + start);
    tokens.push_back({s.substr(start, end - start), base + start});
    start = end + 1;
  }
  return tokens;
}

std::size_t end_offset(const std::vector<Token>& t, std::size_t from, std::size_t fallback) {
  return from < t.size() ? t[from].offset : fallback;
}

struct Phrase {
  std::string predicate;
  std::optional<std::string> object;
  Sign sign;
};

struct PhraseStyle {
  bool plural = false;
  std::string_view adverb_pos;
  std::string_view adverb_neg;
};

std::string predicate_of(const Token& t) {
  if (!is_predicate_token(t.text)) throw ParseError("expected a lowercase predicate", t.offset);
  return std::string(t.text);
}

std::string object_of(const Token& t) {
  if (!is_constant_token(t.text)) throw ParseError("expected an object noun", t.offset);
  return std::string(t.text);
}

// Matches the part of a clause after its subject. `at` is where the phrase
// starts, used when the phrase is empty.
Phrase match_phrase(const std::vector<Token>& t, std::size_t first, std::size_t at, const PhraseStyle& style) {
  const std::size_t n = t.size() - first;
  if (n == 0) throw ParseError("missing predicate", at);
  auto tok = [&](std::size_t i) { return t[first + i].text; };
  const std::string_view copula = style.plural ? "are" : "is";
  const std::string_view aux = style.plural ? "do" : "does";
  const std::string_view neg_word = style.adverb_neg.empty() ? "not" : style.adverb_neg;

  if (tok(0) == copula) {
    if (n == 2 && style.adverb_pos.empty()) return {predicate_of(t[first + 1]), std::nullopt, Sign::Positive};
    if (n == 3 && !style.adverb_pos.empty() && tok(1) == style.adverb_pos) {
      return {predicate_of(t[first + 2]), std::nullopt, Sign::Positive};
    }
    if (n == 3 && tok(1) == neg_word) return {predicate_of(t[first + 2]), std::nullopt, Sign::Negative};
    throw ParseError("unmatched attributive phrase", end_offset(t, first + 1, at));
  }
  if (tok(0) == aux) {
    if (n == 5 && tok(1) == "not" && tok(3) == "the") {
      return {predicate_of(t[first + 2]), object_of(t[first + 4]), Sign::Negative};
    }
    throw ParseError("unmatched negated relation", end_offset(t, first + 1, at));
  }
  if (n == 3 && tok(1) == "the") {
    std::string_view verb = tok(0);
    if (!style.plural) {
      if (verb.size() < 2 || verb.back() != 's') throw ParseError("expected a third-person verb", t[first].offset);
      verb.remove_suffix(1);
    }
    if (!is_predicate_token(verb)) throw ParseError("expected a verb", t[first].offset);
    return {std::string(verb), object_of(t[first + 2]), Sign::Positive};
  }
  throw ParseError("no template matches", t[first].offset);
}

Term subject_of(const Token& t, std::string_view variable_word) {
  if (t.text == variable_word) return Term::variable();
  if (!is_constant_token(t.text)) throw ParseError("expected a subject", t.offset);
  return Term::constant(std::string(t.text));
}

std::string phrase_text(const Atom& atom, const PhraseStyle& style) {
  const bool pos = atom.sign == Sign::Positive;
  if (!atom.relational()) {
    std::string out = style.plural ? "are " : "is ";
    if (pos) {
      if (!style.adverb_pos.empty()) out.append(style.adverb_pos).append(" ");
    } else {
      out.append(style.adverb_neg.empty() ? "not" : style.adverb_neg).append(" ");
    }
    return out + atom.predicate;
  }
  if (pos) return atom.predicate + (style.plural ? "" : "s") + " the " + *atom.object;
  return std::string(style.plural ? "do" : "does") + " not " + atom.predicate + " the " + *atom.object;
}

std::string consequent_text(const Atom& atom, const TemplatePack& pack) {
  PhraseStyle style{false, pack.consequent_adverb_pos, pack.consequent_adverb_neg};
  std::string subject = atom.subject.name();
  if (atom.subject.is_variable()) {
    subject = pack.variable_consequent;
    style.plural = pack.plural_variable_consequent;
  }
  return subject + " " + phrase_text(atom, style);
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::string_view strip_period(std::string_view sentence) {
  if (sentence.empty() || sentence.back() != '.') throw ParseError("sentence must end with '.'", sentence.size());
  return sentence.substr(0, sentence.size() - 1);
}

Atom parse_fact_body(std::string_view body, std::size_t base, std::string_view variable_word) {
  auto t = tokenize(body, base);
  Term subject = subject_of(t[0], variable_word);
  Phrase p = match_phrase(t, 1, base + body.size(), PhraseStyle{});
  return Atom{std::move(subject), std::move(p.predicate), std::move(p.object), p.sign};
}

}  // namespace

const TemplatePack& TemplatePack::v1() {
  static const TemplatePack pack{"v1", "If ", " then ", "", " and ", "someone", "they", true, "", ""};
  return pack;
}

const TemplatePack& TemplatePack::v2() {
  static const TemplatePack pack{"v2",     "It is a truth that whenever ", ", ", " as well", " and also ",
                                 "something", "it", false, "always", "never"};
  return pack;
}

const TemplatePack& TemplatePack::by_id(std::string_view id) {
  if (id == "v1") return v1();
  if (id == "v2") return v2();
  throw std::invalid_argument("unknown template pack '" + std::string(id) + "'");
}

std::string render_clause(const Atom& atom, const TemplatePack& pack) {
  const std::string subject = atom.subject.is_variable() ? pack.variable_antecedent : atom.subject.name();
  return subject + " " + phrase_text(atom, PhraseStyle{});
}

std::string render_text(const Atom& atom, const TemplatePack& pack) { return render_clause(atom, pack) + "."; }

std::string render_text(const Rule& rule, const TemplatePack& pack) {
  std::string out = pack.rule_open;
  const Atom* prev = nullptr;
  for (const Atom& atom : rule.antecedents) {
    if (prev) out += pack.conjunction;
    const bool same_subject = prev && prev->subject == atom.subject;
    const bool chain_attr = same_subject && !prev->relational() && prev->sign == Sign::Positive &&
                            !atom.relational() && atom.sign == Sign::Positive;
    if (chain_attr) {
      out += atom.predicate;
    } else if (same_subject) {
      out += phrase_text(atom, PhraseStyle{});
    } else {
      out += render_clause(atom, pack);
    }
    prev = &atom;
  }
  out += pack.rule_then;
  out += consequent_text(rule.consequent, pack);
  out += pack.rule_close;
  out += ".";
  return out;
}

Atom parse_fact(std::string_view sentence, const TemplatePack& pack) {
  if (starts_with(sentence, pack.rule_open)) throw ParseError("expected a fact, found a rule", 0);
  return parse_fact_body(strip_period(sentence), 0, pack.variable_antecedent);
}

Rule parse_rule(std::string_view sentence, std::string id, const TemplatePack& pack) {
  if (!starts_with(sentence, pack.rule_open)) throw ParseError("expected '" + pack.rule_open + "'", 0);
  std::string_view body = strip_period(sentence);
  const std::string_view close = pack.rule_close;
  if (body.size() < close.size() || body.substr(body.size() - close.size()) != close) {
    throw ParseError("expected '" + pack.rule_close + "' before the period", body.size());
  }
  body.remove_suffix(close.size());
  const std::size_t open = pack.rule_open.size();
  const std::size_t then_at = body.find(pack.rule_then, open);
  if (then_at == std::string_view::npos) throw ParseError("missing '" + pack.rule_then + "'", open);

  Rule rule;
  rule.id = std::move(id);

  std::string_view premises = body.substr(open, then_at - open);
  std::size_t cursor = 0;
  std::optional<Term> subject;
  while (true) {
    std::size_t next = premises.find(pack.conjunction, cursor);
    const std::size_t stop = next == std::string_view::npos ? premises.size() : next;
    const std::size_t base = open + cursor;
    auto t = tokenize(premises.substr(cursor, stop - cursor), base);
    const bool elided = t.size() == 1 || t[0].text == "is" || t[0].text == "does" ||
                        (t.size() == 3 && t[1].text == "the");
    if (elided && !subject) throw ParseError("first premise needs a subject", t[0].offset);
    if (t.size() == 1) {
      rule.antecedents.push_back(Atom{*subject, predicate_of(t[0]), std::nullopt, Sign::Positive});
    } else {
      std::size_t first = 0;
      if (!elided) {
        subject = subject_of(t[0], pack.variable_antecedent);
        first = 1;
      }
      Phrase p = match_phrase(t, first, base + (stop - cursor), PhraseStyle{});
      rule.antecedents.push_back(Atom{*subject, std::move(p.predicate), std::move(p.object), p.sign});
    }
    if (next == std::string_view::npos) break;
    cursor = next + pack.conjunction.size();
  }

  const std::size_t cbase = then_at + pack.rule_then.size();
  auto t = tokenize(body.substr(cbase), cbase);
  PhraseStyle style{false, pack.consequent_adverb_pos, pack.consequent_adverb_neg};
  Term csubject = Term::constant("");
  if (t[0].text == pack.variable_consequent) {
    csubject = Term::variable();
    style.plural = pack.plural_variable_consequent;
  } else {
    csubject = subject_of(t[0], pack.variable_antecedent);
    if (csubject.is_variable()) throw ParseError("consequent must use '" + pack.variable_consequent + "'", t[0].offset);
  }
  Phrase p = match_phrase(t, 1, body.size(), style);
  rule.consequent = Atom{std::move(csubject), std::move(p.predicate), std::move(p.object), p.sign};
  return rule;
}

Statement parse_text(std::string_view sentence, const TemplatePack& pack) {
  if (starts_with(sentence, pack.rule_open)) return parse_rule(sentence, "", pack);
  return parse_fact(sentence, pack);
}

}  // namespace backchain
