#include "backchain/atom.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <stdexcept>

#include "backchain/errors.hpp"

namespace backchain {

namespace {

// Words the text templates rely on to find clause boundaries; no subject,
// predicate or object may spell one of them.
constexpr std::array<std::string_view, 22> kReservedWords = {
    "a",    "also", "always", "and",   "are",   "as",       "do",   "does",
    "if",   "is",   "it",     "never", "not",   "someone",  "something",
    "that", "the",  "then",   "they",  "truth", "whenever", "well"};

bool is_reserved(std::string_view token) {
  std::string lower(token);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(c | 0x20); });
  return std::find(kReservedWords.begin(), kReservedWords.end(), lower) != kReservedWords.end();
}

bool all_letters(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  });
}

}  // namespace

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::Proved:
      return "proved";
    case Label::Disproved:
      return "disproved";
    case Label::Unknown:
      return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Sign sign) noexcept { return sign == Sign::Positive ? "pos" : "neg"; }

Label label_from_string(std::string_view text) {
  if (text == "proved") return Label::Proved;
  if (text == "disproved") return Label::Disproved;
  if (text == "unknown") return Label::Unknown;
  throw std::invalid_argument("unknown label '" + std::string(text) + "'");
}

std::size_t AtomHash::operator()(const Atom& atom) const noexcept {
  std::size_t h = std::hash<std::string>{}(atom.subject.name());
  auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  mix(std::hash<std::string>{}(atom.predicate));
  mix(atom.object ? std::hash<std::string>{}(*atom.object) : 0x51ed27ULL);
  mix(atom.sign == Sign::Positive ? 1 : 2);
  return h;
}

bool is_predicate_token(std::string_view token) noexcept {
  return !token.empty() &&
         std::all_of(token.begin(), token.end(), [](unsigned char c) { return c >= 'a' && c <= 'z'; }) &&
         !is_reserved(token);
}

bool is_constant_token(std::string_view token) noexcept {
  return all_letters(token) && !is_reserved(token);
}

void validate_atom(const Atom& atom, bool require_ground, const std::string& path) {
  if (atom.subject.is_variable()) {
    if (require_ground) throw SchemaError(path + ".subject", "variable subject in a ground atom");
  } else if (!is_constant_token(atom.subject.name())) {
    throw SchemaError(path + ".subject", "invalid constant '" + atom.subject.name() + "'");
  }
  if (!is_predicate_token(atom.predicate)) {
    throw SchemaError(path + ".predicate", "predicate must be lowercase letters, got '" + atom.predicate + "'");
  }
  if (atom.object && !is_constant_token(*atom.object)) {
    throw SchemaError(path + ".object", "invalid object '" + *atom.object + "'");
  }
}

std::string debug_string(const Atom& atom) {
  std::string out = atom.subject.name() + ":" + atom.predicate;
  if (atom.object) out += ":" + *atom.object;
  out += atom.sign == Sign::Positive ? ":+" : ":-";
  return out;
}

}  // namespace backchain
