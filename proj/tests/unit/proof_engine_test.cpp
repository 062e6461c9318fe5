#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <functional>
#include <sstream>

#include "backchain/errors.hpp"
#include "backchain/engine.hpp"
#include "backchain/symbolic.hpp"
#include "backchain/trace_io.hpp"
#include "support.hpp"

using namespace backchain;
using testing::fact;

namespace {

ProofResult prove(const Theory& t, const std::string& goal, int depth = 5, EngineConfig cfg = {}) {
  SymbolicBackend backend;
  return BackwardChainer(cfg).prove({t, fact(goal), depth}, backend);
}

void walk(const TraceNode& n, const std::function<void(const TraceNode&)>& fn) {
  fn(n);
  for (const RuleBranch& b : n.branches)
    for (const TraceNode& c : b.children) walk(c, fn);
}

std::size_t count_outcome(const TraceNode& root, Outcome o) {
  std::size_t n = 0;
  walk(root, [&](const TraceNode& x) { n += x.outcome == o; });
  return n;
}

// Symbolic modules, but decomposition fails on a chosen rule.
class FailingBackend : public SymbolicBackend {
 public:
  Metered<std::vector<Atom>> goal_decomposition(const Rule& rule, const Atom& goal) override {
    if (rule.id == "Rule2") throw TransportError("connection reset");
    return SymbolicBackend::goal_decomposition(rule, goal);
  }
};

}  // namespace

TEST_CASE("a contradicting fact disproves the goal") {
  const Theory t = testing::theory({"Fred is big.", "Fred is green.", "Eric is nice."}, {});
  const ProofResult r = prove(t, "Fred is not green.");
  CHECK(r.label == Label::Disproved);
  REQUIRE(r.trace.root.module_calls.size() == 1);
  CHECK(r.trace.root.module_calls[0].fact.evidence == 1);
}

TEST_CASE("a goal the theory does not settle is Unknown") {
  const Theory t = testing::theory({"Fred is green.", "Fred is big."}, {"If someone is big then they are kind."});
  CHECK(prove(t, "Fred is round.").label == Label::Unknown);
}

TEST_CASE("a goal among the facts is proved at depth 0 by one fact check") {
  const Theory t = testing::theory({"Eric is nice."}, {"If someone is nice then they are kind."});
  const ProofResult r = prove(t, "Eric is nice.", 0);
  CHECK(r.label == Label::Proved);
  CHECK(r.trace.root.subtree_size() == 1);
  CHECK(r.trace.root.branches.empty());
  CHECK(r.trace.stats.fresh[0] == 1);
  CHECK(r.trace.stats.lm_calls == 2);  // one selection + one verification
}

TEST_CASE("depth cut stops rule expansion") {
  const Theory t = testing::theory({"Eric is big."}, {"If someone is big then they are nice."});
  const ProofResult r = prove(t, "Eric is nice.", 0);
  CHECK(r.label == Label::Unknown);
  CHECK(r.trace.root.outcome == Outcome::DepthCut);
  CHECK(prove(t, "Eric is nice.", 1).label == Label::Proved);
}

TEST_CASE("three-sub-goal proof with a repeated sub-goal") {
  const ProofResult r = prove(testing::eric_theory(), "Eric is nice.");
  CHECK(r.label == Label::Proved);
  const RuleBranch& root = r.trace.root.branches.back();
  CHECK(root.rule_id == "Rule6");
  CHECK(root.subgoals.size() == 3);
  // Rule1 (shorter) is tried before Rule3 for "Eric is rough".
  const TraceNode& rough = root.children[1];
  REQUIRE(rough.branches.size() == 2);
  CHECK(rough.branches[0].rule_id == "Rule1");
  CHECK(rough.branches[1].rule_id == "Rule3");
  CHECK(rough.branches[0].children[0].outcome == Outcome::Unknown);
  CHECK(r.trace.stats.total_cache_hits() > 0);
}

TEST_CASE("disproof through a disagreeing rule, with cycle cut and cache hits") {
  const ProofResult r = prove(testing::dave_theory(), "Dave is not green.");
  CHECK(r.label == Label::Disproved);
  const TraceNode& root = r.trace.root;
  REQUIRE(root.branches.size() == 2);
  CHECK(root.branches[0].rule_id == "Rule6");  // shorter rule first
  CHECK(!root.branches[0].sign_agrees.has_value());
  CHECK(root.branches[1].rule_id == "Rule3");
  CHECK(root.branches[1].sign_agrees == false);
  CHECK(count_outcome(root, Outcome::CycleCut) >= 1);
  std::size_t cached = 0;
  walk(root, [&](const TraceNode& n) { cached += n.cache_hit; });
  CHECK(cached >= 1);
}

TEST_CASE("negative consequent yields Disproved end to end") {
  const Theory t = testing::theory({"Eric is big."}, {"If someone is big then they are not nice."});
  CHECK(prove(t, "Eric is nice.").label == Label::Disproved);
  CHECK(prove(t, "Eric is not nice.").label == Label::Proved);
}

TEST_CASE("negative sub-goals must be proved under their own sign") {
  const Theory t = testing::theory({"Eric is big.", "Eric is not young."},
                                   {"If someone is big and is not young then they are kind."});
  CHECK(prove(t, "Eric is kind.").label == Label::Proved);
  const Theory u = testing::theory({"Eric is big.", "Eric is young."},
                                   {"If someone is big and is not young then they are kind."});
  CHECK(prove(u, "Eric is kind.").label == Label::Unknown);
}

TEST_CASE("conjunction stops at the first unproved sub-goal") {
  const Theory t = testing::theory({"Eric is red."}, {"If someone is big and red then they are nice."});
  const ProofResult r = prove(t, "Eric is nice.");
  CHECK(r.label == Label::Unknown);
  REQUIRE(r.trace.root.branches.size() == 1);
  CHECK(r.trace.root.branches[0].subgoals.size() == 2);
  CHECK(r.trace.root.branches[0].children.size() == 1);
  CHECK(!r.trace.root.branches[0].sign_agrees.has_value());
}

TEST_CASE("rerank is a stable sort by antecedent count") {
  auto rule = [](std::string id, int n) {
    Rule r{std::move(id), {}, Atom::var_attr("nice")};
    for (int i = 0; i < n; ++i) r.antecedents.push_back(Atom::var_attr(std::string(1, static_cast<char>('a' + i))));
    return r;
  };
  const auto out = rerank({rule("A", 3), rule("B", 1), rule("C", 2)});
  CHECK(out[0].id == "B");
  CHECK(out[1].id == "C");
  CHECK(out[2].id == "A");
  const auto tie = rerank({rule("X", 2), rule("Y", 2), rule("Z", 1)});
  CHECK(tie[0].id == "Z");
  CHECK(tie[1].id == "X");
  CHECK(tie[2].id == "Y");
  CHECK(rerank({}).empty());
}

TEST_CASE("proof cache honours depth monotonicity") {
  const Atom g = Atom::attr("Eric", "nice");
  SUBCASE("decided entry, deeper query") {
    ProofCache c;
    c.store({g, Label::Proved, 1});
    CHECK(c.lookup(g, 3) == Label::Proved);
    CHECK(c.lookup(g, 1) == Label::Proved);
  }
  SUBCASE("decided entry, shallower query") {
    ProofCache c;
    c.store({g, Label::Disproved, 3});
    CHECK(!c.lookup(g, 1).has_value());
  }
  SUBCASE("unknown entry, shallower query") {
    ProofCache c;
    c.store({g, Label::Unknown, 3});
    CHECK(c.lookup(g, 1) == Label::Unknown);
    CHECK(c.lookup(g, 3) == Label::Unknown);
  }
  SUBCASE("unknown entry, deeper query") {
    ProofCache c;
    c.store({g, Label::Unknown, 1});
    CHECK(!c.lookup(g, 3).has_value());
  }
  SUBCASE("other goals and signs miss") {
    ProofCache c;
    c.store({g, Label::Proved, 0});
    CHECK(!c.lookup(g.negated(), 5).has_value());
    CHECK(!c.lookup(Atom::attr("Fred", "nice"), 5).has_value());
  }
}

TEST_CASE("cycle check is exact signed match") {
  const Atom root = Atom::attr("Fiona", "round");
  const std::vector<Atom> path{root, Atom::attr("Fiona", "red")};
  CHECK(cycle_check(root, path));
  CHECK(!cycle_check(root.negated(), path));
  CHECK(!cycle_check(Atom::attr("Fiona", "big"), path));
  CHECK(!cycle_check(root, {}));
}

TEST_CASE("self-referential goals terminate with a cycle cut") {
  const Theory t = testing::theory({"Fiona is big."}, {"If someone is round then they are round.",
                                                       "If someone is red then they are round.",
                                                       "If someone is round then they are red."});
  const ProofResult r = prove(t, "Fiona is round.");
  CHECK(r.label == Label::Unknown);
  CHECK(count_outcome(r.trace.root, Outcome::CycleCut) >= 2);

  EngineConfig no_cycle;
  no_cycle.cycle_check = false;
  const ProofResult d = prove(t, "Fiona is round.", 5, no_cycle);
  CHECK(d.label == Label::Unknown);
  CHECK(count_outcome(d.trace.root, Outcome::CycleCut) == 0);
  CHECK(d.trace.root.subtree_size() > r.trace.root.subtree_size());
}

TEST_CASE("backend errors abort the proof with the partial trace attached") {
  const Theory t = testing::theory({"Eric is big."}, {"If someone is big then they are red.",
                                                      "If someone is red then they are nice."});
  FailingBackend backend;
  try {
    BackwardChainer().prove({t, fact("Eric is nice."), 5}, backend);
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    REQUIRE(e.partial_trace());
    CHECK(e.partial_trace()->root.goal == fact("Eric is nice."));
    CHECK(e.partial_trace()->stats.fresh[0] >= 1);
  }
}

TEST_CASE("request validation") {
  const Theory t = testing::theory({"Eric is big."}, {});
  SymbolicBackend b;
  CHECK_THROWS_AS(BackwardChainer().prove({t, fact("Eric is big."), 11}, b), std::invalid_argument);
  CHECK_THROWS_AS(BackwardChainer().prove({t, fact("Eric is big."), -1}, b), std::invalid_argument);
  CHECK_THROWS_AS(EngineConfig::from_json({{"max_depth", 5}, {"speed", 1}}), SchemaError);
  CHECK_THROWS_AS(EngineConfig::from_json({{"max_depth", 42}}), SchemaError);
  const EngineConfig c = EngineConfig::from_json({{"caching", false}});
  CHECK(!c.caching);
  CHECK(c.max_depth == 5);
}

TEST_CASE("trace export") {
  const Theory t = testing::theory({"Eric is nice."}, {});
  const ProofResult r = prove(t, "Eric is nice.");
  const std::string dot = export_trace(r.trace, t, TraceFormat::Dot);
  std::size_t nodes = 0, edges = 0;
  std::istringstream lines(dot);
  for (std::string line; std::getline(lines, line);) {
    if (line.find("->") != std::string::npos) {
      ++edges;
    } else if (line.size() > 3 && (line[2] == 'n' || line[2] == 'f') && std::isdigit(static_cast<unsigned char>(line[3]))) {
      ++nodes;
    }
  }
  CHECK(nodes == 2);
  CHECK(edges == 1);
  CHECK(dot.rfind("digraph", 0) == 0);

  const ProofResult big = prove(testing::dave_theory(), "Dave is not green.");
  const auto j = trace_to_json(big.trace);
  CHECK(j["schema"] == "trace/1");
  CHECK(trace_from_json(nlohmann::json::parse(j.dump())) == big.trace);
  const std::string big_dot = trace_to_dot(big.trace, testing::dave_theory());
  CHECK(big_dot.find("cycle_cut") != std::string::npos);
  CHECK(big_dot.find("lightblue") != std::string::npos);
}

TEST_CASE("property: labels match an independent reference oracle") {
  const auto data = testing::corpus(303, 60);
  for (const Example& ex : data) {
    const testing::ReferenceOracle oracle(ex.theory);
    SymbolicBackend b;
    const ProofResult r = BackwardChainer().prove({ex.theory, ex.goal, 5}, b);
    REQUIRE(r.label == oracle.label(ex.goal));
    REQUIRE(r.label == ex.gold_label);
  }
}

TEST_CASE("property: depth monotonicity and cache transparency") {
  const auto data = testing::corpus(404, 25);
  EngineConfig off;
  off.caching = false;
  for (const Example& ex : data) {
    std::optional<Label> decided;
    for (int d = 0; d <= 6; ++d) {
      SymbolicBackend b;
      const Label l = BackwardChainer().prove({ex.theory, ex.goal, d}, b).label;
      if (decided) REQUIRE(l == *decided);
      if (l != Label::Unknown) decided = l;
    }
    SymbolicBackend b1, b2;
    const ProofResult on = BackwardChainer().prove({ex.theory, ex.goal, 5}, b1);
    const ProofResult no = BackwardChainer(off).prove({ex.theory, ex.goal, 5}, b2);
    REQUIRE(on.label == no.label);
    REQUIRE(on.trace.stats.total_fresh() <= no.trace.stats.total_fresh());
    REQUIRE(no.trace.stats.total_cache_hits() == 0);
  }
}

TEST_CASE("property: stats totals equal the sum of their parts") {
  const auto data = testing::corpus(505, 10);
  for (const Example& ex : data) {
    SymbolicBackend b;
    const ProofResult r = BackwardChainer().prove({ex.theory, ex.goal, 5}, b);
    std::uint64_t fresh = 0, hits = 0, lm = 0;
    walk(r.trace.root, [&](const TraceNode& n) {
      hits += n.cache_hit;
      for (const ModuleCall& c : n.module_calls) {
        (c.cache_hit ? hits : fresh) += 1;
        lm += c.lm_calls;
      }
    });
    REQUIRE(fresh == r.trace.stats.total_fresh());
    REQUIRE(hits == r.trace.stats.total_cache_hits());
    REQUIRE(lm == r.trace.stats.lm_calls);
  }
}
