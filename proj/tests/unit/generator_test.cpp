#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "backchain/engine.hpp"
#include "backchain/errors.hpp"
#include "backchain/forward.hpp"
#include "backchain/serialize.hpp"
#include "backchain/symbolic.hpp"
#include "support.hpp"

using namespace backchain;

namespace {

GenConfig config(int depth, int n, std::uint64_t seed = 1) {
  GenConfig c;
  c.depth = depth;
  c.num_examples = n;
  c.seed = seed;
  return c;
}

std::string dump(const std::vector<Example>& data) {
  std::ostringstream out;
  write_dataset(data, out);
  return out.str();
}

std::set<std::string> vocabulary(const Theory& t, const Atom& goal) {
  std::set<std::string> v;
  auto add = [&](const Atom& a) {
    if (!a.subject.is_variable()) v.insert(a.subject.name());
    v.insert(a.predicate);
    if (a.object) v.insert(*a.object);
  };
  for (const Atom& f : t.facts) add(f);
  for (const Rule& r : t.rules) {
    for (const Atom& a : r.antecedents) add(a);
    add(r.consequent);
  }
  add(goal);
  return v;
}

ProofResult prove(const Example& ex) {
  SymbolicBackend b;
  return BackwardChainer().prove({materialize(ex.theory), ex.goal, 5}, b);
}

}  // namespace

TEST_CASE("depth 0 datasets are fact lookups in the requested label mix") {
  const auto data = generate(config(0, 10));
  REQUIRE(data.size() == 10);
  std::map<Label, int> counts;
  for (const Example& ex : data) {
    ++counts[ex.gold_label];
    if (ex.gold_label != Label::Unknown) CHECK(ex.gold_depth == 0);
    CHECK(ex.theory.metadata["dataset_depth"] == 0);
  }
  CHECK(counts[Label::Proved] == 4);
  CHECK(counts[Label::Disproved] == 3);
  CHECK(counts[Label::Unknown] == 3);
}

TEST_CASE("depth 5 examples have minimal depth exactly 5 under an independent check") {
  const auto data = generate(config(5, 60, 9));
  for (const Example& ex : data) {
    const testing::ReferenceOracle ref(ex.theory);
    REQUIRE(ref.label(ex.goal) == ex.gold_label);
    if (ex.gold_label == Label::Unknown) {
      REQUIRE(!ex.gold_depth);
    } else {
      REQUIRE(ex.gold_depth == 5);
      REQUIRE(ref.depth(ex.goal) == 5);
    }
  }
}

TEST_CASE("generation is deterministic per seed") {
  CHECK(dump(generate(config(3, 30, 5))) == dump(generate(config(3, 30, 5))));
  CHECK(dump(generate(config(3, 30, 5))) != dump(generate(config(3, 30, 6))));
}

TEST_CASE("property: generated theories are consistent, decoy-limited and valid") {
  const auto data = testing::corpus(909, 30);
  for (const Example& ex : data) {
    REQUIRE_NOTHROW(validate_example(ex));
    REQUIRE_NOTHROW(closure(ex.theory));
    REQUIRE(decoy_count(ex.theory, ex.goal) <= 1);
  }
}

TEST_CASE("Unknown goals reuse theory vocabulary") {
  const auto data = testing::corpus(111, 20);
  for (const Example& ex : data) {
    if (ex.gold_label != Label::Unknown) continue;
    const auto vocab = vocabulary(ex.theory, Atom::attr("Nobody", "nothing"));
    REQUIRE(vocab.contains(ex.goal.subject.name()));
    REQUIRE(vocab.contains(ex.goal.predicate));
  }
}

TEST_CASE("decoy count") {
  const Theory t = testing::theory({"Bob likes the cat.", "Bob likes the cow.", "Bob is big.", "Anne likes the dog."}, {});
  CHECK(decoy_count(t, testing::fact("Bob likes the dog.")) == 2);
  CHECK(decoy_count(t, testing::fact("Anne likes the dog.")) == 0);
}

TEST_CASE("unfillable configurations exhaust their attempts") {
  GenConfig c = config(5, 200);
  c.predicate_pool = 7;
  c.max_attempts = 1;
  c.entities = {1, 1};
  c.facts = {0, 0};
  c.rules = {0, 0};
  c.label_mix = {{Label::Proved, 0.0}, {Label::Disproved, 0.0}, {Label::Unknown, 1.0}};
  CHECK_THROWS_AS(generate(c), GenerationExhausted);
}

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(config(6, 1).validate(), SchemaError);
  GenConfig mix = config(2, 1);
  mix.label_mix[Label::Proved] = 0.9;
  CHECK_THROWS_AS(mix.validate(), SchemaError);
  GenConfig ants = config(2, 1);
  ants.antecedents = {1, 4};
  CHECK_THROWS_AS(ants.validate(), SchemaError);
  CHECK_THROWS_AS(GenConfig::from_json({{"depth", 2}, {"colour", "red"}}), SchemaError);
  const GenConfig round = GenConfig::from_json(nlohmann::json::parse(config(4, 7, 3).to_json().dump()));
  CHECK(round.depth == 4);
  CHECK(round.num_examples == 7);
  CHECK(round.seed == 3);
}

TEST_CASE("token perturbation is a label-preserving bijective renaming") {
  const auto data = testing::corpus(222, 10);
  const auto renamed = perturb(data, PerturbSpec::tokens(17));
  REQUIRE(renamed.size() == data.size());
  std::set<std::string> original_vocab;
  for (const Example& ex : data) {
    const auto v = vocabulary(ex.theory, ex.goal);
    original_vocab.insert(v.begin(), v.end());
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Example& a = data[i];
    const Example& b = renamed[i];
    REQUIRE(b.gold_label == a.gold_label);
    REQUIRE(b.gold_depth == a.gold_depth);
    REQUIRE(b.theory.facts.size() == a.theory.facts.size());
    REQUIRE(b.theory.rules.size() == a.theory.rules.size());
    const auto va = vocabulary(a.theory, a.goal);
    const auto vb = vocabulary(b.theory, b.goal);
    REQUIRE(va.size() == vb.size());  // bijection
    for (const std::string& tok : vb) REQUIRE(!original_vocab.contains(tok));
    for (std::size_t f = 0; f < a.theory.facts.size(); ++f) REQUIRE(a.theory.facts[f].sign == b.theory.facts[f].sign);
    REQUIRE(oracle_label(b.theory, b.goal) == b.gold_label);
    const ProofResult pa = prove(a), pb = prove(b);
    REQUIRE(pa.label == pb.label);
    REQUIRE(pa.trace.root.subtree_size() == pb.trace.root.subtree_size());
    REQUIRE(pa.trace.stats == pb.trace.stats);
  }
  CHECK(dump(renamed) == dump(perturb(data, PerturbSpec::tokens(17))));
}

TEST_CASE("token pools must be novel and disjoint") {
  const auto data = generate(config(1, 5));
  PerturbSpec clash = PerturbSpec::tokens(1);
  clash.entity_pool = {"Anne", "Bob", "Charlie", "Dave", "Eric", "Erin", "Fiona", "Fred", "Gary", "Harry", "Alan", "Bella"};
  CHECK_THROWS_AS(perturb(data, clash), PoolCollisionError);
  PerturbSpec overlap = PerturbSpec::tokens(1);
  overlap.entity_pool = {"Zorblax", "Quimbex"};
  overlap.predicate_pool = {"zorblax"};
  overlap.object_pool = {"Zorblax"};
  CHECK_THROWS_AS(perturb(data, overlap), PoolCollisionError);
  PerturbSpec tiny = PerturbSpec::tokens(1);
  tiny.entity_pool = {"Zorblax"};
  CHECK_THROWS_AS(perturb(data, tiny), PoolCollisionError);
}

TEST_CASE("template perturbation re-renders every statement") {
  const auto data = testing::corpus(333, 5);
  const auto swapped = perturb(data, PerturbSpec::templates("v2"));
  for (std::size_t i = 0; i < data.size(); ++i) {
    REQUIRE(swapped[i].theory.metadata["template_pack"] == "v2");
    const Theory m = materialize(swapped[i].theory);
    REQUIRE(m.facts == data[i].theory.facts);
    REQUIRE(m.rules == data[i].theory.rules);
    REQUIRE(prove(swapped[i]).label == data[i].gold_label);
  }
  CHECK_THROWS(perturb(data, PerturbSpec::templates("v7")));
}

TEST_CASE("perturb spec JSON") {
  const PerturbSpec s = PerturbSpec::from_json({{"mode", "templates"}, {"template_pack", "v2"}});
  CHECK(s.mode == PerturbSpec::Mode::Templates);
  CHECK_THROWS_AS(PerturbSpec::from_json({{"mode", "letters"}}), SchemaError);
  const PerturbSpec t = PerturbSpec::from_json(nlohmann::json::parse(PerturbSpec::tokens(4).to_json().dump()));
  CHECK(t.seed == 4);
  CHECK(t.mode == PerturbSpec::Mode::Tokens);
}
