#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace backchain {

enum class Sign : std::uint8_t { Positive, Negative };

enum class Label : std::uint8_t { Proved, Disproved, Unknown };

inline constexpr Sign flip(Sign s) noexcept {
  return s == Sign::Positive ? Sign::Negative : Sign::Positive;
}

std::string_view to_string(Label label) noexcept;
std::string_view to_string(Sign sign) noexcept;
Label label_from_string(std::string_view text);  // throws std::invalid_argument

/// Subject of an atom: either a constant or the single rule variable.
class Term {
 public:
  static constexpr std::string_view kVariableName = "?x";

  static Term variable() { return Term(std::string(kVariableName)); }
  static Term constant(std::string name) { return Term(std::move(name)); }

  bool is_variable() const noexcept { return name_ == kVariableName; }
  const std::string& name() const noexcept { return name_; }

  friend auto operator<=>(const Term&, const Term&) = default;

 private:
  explicit Term(std::string name) : name_(std::move(name)) {}
  std::string name_;
};

/// A signed attributive (`Eric is big`) or relational (`Eric likes the dog`)
/// proposition. Relational atoms are exactly those with an object.
/// Relational predicates are stored in base verb form (`like`).
struct Atom {
  Term subject = Term::constant("");
  std::string predicate;
  std::optional<std::string> object;
  Sign sign = Sign::Positive;

  static Atom attr(std::string subject, std::string predicate, Sign sign = Sign::Positive) {
    return Atom{Term::constant(std::move(subject)), std::move(predicate), std::nullopt, sign};
  }
  static Atom rel(std::string subject, std::string predicate, std::string object,
                  Sign sign = Sign::Positive) {
    return Atom{Term::constant(std::move(subject)), std::move(predicate), std::move(object), sign};
  }
  static Atom var_attr(std::string predicate, Sign sign = Sign::Positive) {
    return Atom{Term::variable(), std::move(predicate), std::nullopt, sign};
  }
  static Atom var_rel(std::string predicate, std::string object, Sign sign = Sign::Positive) {
    return Atom{Term::variable(), std::move(predicate), std::move(object), sign};
  }

  bool relational() const noexcept { return object.has_value(); }
  bool ground() const noexcept { return !subject.is_variable(); }

  Atom negated() const {
    Atom copy = *this;
    copy.sign = flip(sign);
    return copy;
  }
  Atom with_subject(Term s) const {
    Atom copy = *this;
    copy.subject = std::move(s);
    return copy;
  }

  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct AtomHash {
  std::size_t operator()(const Atom& atom) const noexcept;
};

bool is_predicate_token(std::string_view token) noexcept;
bool is_constant_token(std::string_view token) noexcept;

/// Throws SchemaError (rooted at `path`) unless the atom's tokens are valid
/// and, when `require_ground`, its subject is a constant.
void validate_atom(const Atom& atom, bool require_ground, const std::string& path);

/// Compact debugging form such as `Eric:like:dog:-`.
std::string debug_string(const Atom& atom);

}  // namespace backchain
