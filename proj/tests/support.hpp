#pragma once
// Shared fixtures and an independent reference oracle for the test binaries.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "backchain/atom.hpp"
#include "backchain/generator.hpp"
#include "backchain/text.hpp"
#include "backchain/theory.hpp"

namespace testing {

using namespace backchain;

inline Atom fact(const std::string& sentence) { return parse_fact(sentence); }

/// Rules are named Rule1..n in the order given.
inline Theory theory(const std::vector<std::string>& facts, const std::vector<std::string>& rules) {
  Theory t;
  for (const auto& f : facts) t.facts.push_back(parse_fact(f));
  for (std::size_t i = 0; i < rules.size(); ++i) t.rules.push_back(parse_rule(rules[i], "Rule" + std::to_string(i + 1)));
  return t;
}

/// The "Eric is nice" theory: Rule6 splits the goal into three sub-goals,
/// the middle one needs Rule3 (whose first premise repeats an earlier
/// sub-goal) after the shorter Rule1 fails.
inline Theory eric_theory() {
  return theory({"Eric is big.", "Eric is round.", "Eric is young.", "Fred is green.", "Gary is not kind."},
                {"If someone is cold then they are rough.",
                 "If someone is nice then they are kind.",
                 "If someone is big and round and young then they are rough.",
                 "If someone is green then they are cold.",
                 "If someone is red then they are furry.",
                 "If someone is big and rough and young then they are nice."});
}

/// A depth-5 style search with a cycle cut, cache hits and a disproving rule
/// whose consequent sign disagrees with the goal.
inline Theory dave_theory() {
  return theory({"Dave is white.", "Dave is young."},
                {"If someone is red then they are round.",
                 "If someone is green then they are nice.",
                 "If someone is blue and cold and young then they are green.",
                 "If someone is white and young then they are kind.",
                 "If someone is cold then they are blue.",
                 "If someone is nice and kind then they are green.",
                 "If someone is quiet then they are furry.",
                 "If someone is kind and young then they are cold."});
}

/// Reference oracle written independently of the library: naive rounds of
/// rule application over string keys. Round r adds exactly the atoms of
/// minimal derivation depth r.
class ReferenceOracle {
 public:
  explicit ReferenceOracle(const Theory& t) {
    std::set<std::string> subjects;
    for (const Atom& f : t.facts) {
      depth_[key(f)] = 0;
      subjects.insert(f.subject.name());
    }
    for (const Rule& r : t.rules) {
      for (const Atom& a : r.antecedents) if (a.ground()) subjects.insert(a.subject.name());
      if (r.consequent.ground()) subjects.insert(r.consequent.subject.name());
    }
    for (int round = 1;; ++round) {
      std::map<std::string, int> added;
      for (const Rule& r : t.rules) {
        for (const std::string& s : subjects) {
          bool ok = true;
          for (const Atom& a : r.antecedents) {
            auto it = depth_.find(key(a, s));
            if (it == depth_.end()) { ok = false; break; }
          }
          if (ok && !depth_.contains(key(r.consequent, s))) added[key(r.consequent, s)] = round;
          if (!r.consequent.subject.is_variable()) break;
        }
      }
      if (added.empty()) break;
      depth_.insert(added.begin(), added.end());
    }
  }

  Label label(const Atom& goal) const {
    if (depth_.contains(key(goal))) return Label::Proved;
    if (depth_.contains(key(goal.negated()))) return Label::Disproved;
    return Label::Unknown;
  }

  std::optional<int> depth(const Atom& goal) const {
    for (const Atom& a : {goal, goal.negated()}) {
      if (auto it = depth_.find(key(a)); it != depth_.end()) return it->second;
    }
    return std::nullopt;
  }

  std::size_t size() const { return depth_.size(); }

 private:
  static std::string key(const Atom& a, const std::string& subject = {}) {
    const std::string s = a.subject.is_variable() ? subject : a.subject.name();
    return s + "|" + a.predicate + "|" + a.object.value_or("") + "|" + (a.sign == Sign::Positive ? "+" : "-");
  }

  std::map<std::string, int> depth_;
};

/// Depths 0..5, `per_depth` examples each.
inline std::vector<Example> corpus(std::uint64_t seed, int per_depth) {
  std::vector<Example> all;
  for (int d = 0; d <= 5; ++d) {
    GenConfig c;
    c.seed = seed + static_cast<std::uint64_t>(d);
    c.num_examples = per_depth;
    c.depth = d;
    auto part = generate(c);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("backchain_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
