#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "backchain/errors.hpp"
#include "backchain/symbolic.hpp"
#include "backchain/rng.hpp"
#include "support.hpp"

using namespace backchain;
using testing::fact;

namespace {

// Ranks the exact match last, so it can only be reached by a retry.
class ContraryBackend : public SymbolicBackend {
 public:
  using SymbolicBackend::SymbolicBackend;

 protected:
  std::size_t select_fact(const Atom& goal, std::span<const Atom> facts,
                          std::span<const std::size_t> candidates) const override {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (verify_fact(facts[candidates[i]], goal) == Label::Unknown) return i;
    }
    return 0;
  }
};

std::vector<std::string> ids(const Metered<std::vector<std::string>>& m) { return m.value; }

}  // namespace

TEST_CASE("fact check finds contradicting and entailing facts") {
  SymbolicBackend b;
  const std::vector<Atom> facts{fact("Fred is big."), fact("Fred is green."), fact("Eric is nice.")};
  const auto dis = b.fact_check(fact("Fred is not green."), facts);
  CHECK(dis.value.label == Label::Disproved);
  CHECK(dis.value.evidence == 1);
  CHECK(dis.lm_calls == 2);
  const auto pro = b.fact_check(fact("Eric is nice."), facts);
  CHECK(pro.value.label == Label::Proved);
  CHECK(pro.value.evidence == 2);
  const auto unk = b.fact_check(fact("Eric is big."), facts);
  CHECK(unk.value.label == Label::Unknown);
  CHECK(!unk.value.evidence);
  CHECK(unk.lm_calls == 4);
  CHECK(b.fact_check(fact("Eric is big."), {}).value.label == Label::Unknown);
}

TEST_CASE("fact check retries after a wrong selection") {
  const std::vector<Atom> facts{fact("Eric is nice."), fact("Eric is big.")};
  ContraryBackend two;
  const auto r = two.fact_check(fact("Eric is nice."), facts);
  CHECK(r.value.label == Label::Proved);
  CHECK(r.value.evidence == 0);
  CHECK(r.lm_calls == 4);  // second trial

  ContraryBackend one(SymbolicConfig{1});
  CHECK(one.fact_check(fact("Eric is nice."), facts).value.label == Label::Unknown);
}

TEST_CASE("relevance is lexicographic over subject, predicate, object") {
  const Atom goal = fact("Bob likes the dog.");
  CHECK(SymbolicBackend::relevance(goal, fact("Bob likes the cat.")) == std::tuple{true, true, false});
  CHECK(SymbolicBackend::relevance(goal, fact("Anne likes the dog.")) == std::tuple{false, true, true});
  CHECK(SymbolicBackend::relevance(goal, fact("Bob does not like the dog.")) == std::tuple{true, true, true});
  SymbolicBackend b;
  // The decoy shares subject and predicate, the match wins on object.
  const auto r = b.fact_check(goal, std::vector<Atom>{fact("Bob likes the cat."), fact("Bob likes the dog.")});
  CHECK(r.value.label == Label::Proved);
  CHECK(r.lm_calls == 2);
}

TEST_CASE("rule selection unifies on predicate, object and subject, ignoring sign") {
  const Theory t = testing::theory({}, {"If someone is big then they are kind.",
                                        "If someone is big and red then they are nice.",
                                        "If someone is round then they are not nice.",
                                        "If Fred is cold then Fred is nice.",
                                        "If Eric is cold then Eric is nice.",
                                        "If someone is red then they like the dog.",
                                        "If someone is red then they like the cat."});
  SymbolicBackend b;
  const auto first = b.rule_selection(fact("Eric is nice."), t.rules);
  CHECK(ids(first) == std::vector<std::string>{"Rule2", "Rule3", "Rule5"});
  CHECK(first.lm_calls == 2);  // implications once, then matching
  const auto second = b.rule_selection(fact("Eric likes the dog."), t.rules);
  CHECK(ids(second) == std::vector<std::string>{"Rule6"});
  CHECK(second.lm_calls == 1);
  CHECK(ids(b.rule_selection(fact("Eric is blue."), t.rules)).empty());
  CHECK(b.rule_selection(fact("Eric is blue."), {}).lm_calls == 0);
}

TEST_CASE("goal decomposition substitutes the subject") {
  SymbolicBackend b;
  const Rule r = parse_rule("If someone is big and red then they are nice.", "Rule1");
  const auto subs = b.goal_decomposition(r, fact("Eric is nice."));
  CHECK(subs.value == std::vector<Atom>{fact("Eric is big."), fact("Eric is red.")});
  CHECK(subs.lm_calls == 1);
  const Rule single = parse_rule("If someone is green then they are nice.", "Rule2");
  CHECK(b.goal_decomposition(single, fact("Dave is nice.")).value == std::vector<Atom>{fact("Dave is green.")});
  const Rule constant = parse_rule("If Fiona is round and Fiona is big then Fiona is red.", "Rule3");
  CHECK(b.goal_decomposition(constant, fact("Fiona is red.")).value == constant.antecedents);
  CHECK_THROWS_AS(b.goal_decomposition(constant, fact("Gary is red.")), UnificationError);
  CHECK_THROWS_AS(b.goal_decomposition(r, fact("Eric is kind.")), UnificationError);
}

TEST_CASE("sign agreement compares polarities") {
  SymbolicBackend b;
  const Rule pos = parse_rule("If someone is big then they are nice.", "Rule1");
  const Rule neg = parse_rule("If someone is big then they are not nice.", "Rule2");
  CHECK(b.sign_agreement(pos, fact("Eric is nice.")).value);
  CHECK(!b.sign_agreement(neg, fact("Eric is nice.")).value);
  CHECK(b.sign_agreement(neg, fact("Eric is not nice.")).value);
  CHECK(b.sign_agreement(pos, fact("Eric is nice.")).lm_calls == 1);
}

TEST_CASE("property: exhaustive fact check on small fact sets") {
  // Facts over two subjects and two predicates, every consistent subset.
  const std::vector<Atom> universe{fact("Anne is big."), fact("Anne is not big."), fact("Anne is red."),
                                   fact("Bob is big."),  fact("Bob is red."),      fact("Bob is not red.")};
  std::size_t checked = 0;
  for (unsigned mask = 0; mask < (1u << universe.size()); ++mask) {
    std::vector<Atom> facts;
    for (std::size_t i = 0; i < universe.size(); ++i)
      if (mask & (1u << i)) facts.push_back(universe[i]);
    bool consistent = true;
    for (const Atom& a : facts)
      consistent &= std::find(facts.begin(), facts.end(), a.negated()) == facts.end();
    if (!consistent) continue;
    for (const Atom& goal : universe) {
      SymbolicBackend b;
      const ModuleResult r = b.fact_check(goal, facts).value;
      const bool has = std::find(facts.begin(), facts.end(), goal) != facts.end();
      const bool has_neg = std::find(facts.begin(), facts.end(), goal.negated()) != facts.end();
      REQUIRE((r.label == Label::Proved) == has);
      REQUIRE((r.label == Label::Disproved) == has_neg);
      REQUIRE(r.evidence.has_value() == (r.label != Label::Unknown));
      if (r.evidence) REQUIRE(facts[*r.evidence] == (has ? goal : goal.negated()));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("property: rule selection is permutation and sign invariant; decomposition is ground") {
  const auto data = testing::corpus(606, 10);
  rng::Engine g(99);
  for (const Example& ex : data) {
    SymbolicBackend b;
    std::vector<Rule> rules = ex.theory.rules;
    auto base = ids(b.rule_selection(ex.goal, rules));
    std::vector<std::string> sorted = base;
    std::sort(sorted.begin(), sorted.end());

    std::vector<Rule> shuffled = rules;
    rng::shuffle(g, shuffled);
    SymbolicBackend b2;
    auto perm = ids(b2.rule_selection(ex.goal, shuffled));
    std::sort(perm.begin(), perm.end());
    REQUIRE(perm == sorted);

    std::vector<Rule> flipped = rules;
    for (Rule& r : flipped) r.consequent = r.consequent.negated();
    SymbolicBackend b3;
    REQUIRE(ids(b3.rule_selection(ex.goal, flipped)) == base);

    for (const std::string& id : base) {
      const Rule* r = ex.theory.find_rule(id);
      for (const Atom& a : b.goal_decomposition(*r, ex.goal).value) REQUIRE(a.ground());
    }
  }
}
