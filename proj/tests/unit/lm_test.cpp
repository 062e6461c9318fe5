#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "backchain/engine.hpp"
#include "backchain/errors.hpp"
#include "backchain/lm/backend.hpp"
#include "backchain/rng.hpp"
#include "backchain/symbolic.hpp"
#include "golden_fixtures.hpp"
#include "mock_lm.hpp"

using namespace backchain;
using namespace backchain::lm;
using testing::fact;
using testing::MockLm;

namespace {

std::pair<int, std::string> reply(const std::string& text) { return {200, nlohmann::json{{"text", text}}.dump()}; }

std::unique_ptr<LmBackend> backend_for(const MockLm& server) {
  return LmBackend::create(server.config());
}

}  // namespace

TEST_CASE("prompt renderings match the golden files") {
  const bool update = std::getenv("BACKCHAIN_UPDATE_GOLDEN") != nullptr;
  std::map<PromptKind, int> per_kind;
  for (const auto& c : testing::golden_cases()) {
    const std::string rendered = render_prompt(PromptPack::builtin(), c.kind, c.inputs);
    const auto path = testing::golden_path(c.name);
    if (update) {
      std::filesystem::create_directories(path.parent_path());
      std::ofstream(path, std::ios::binary) << rendered;
    }
    INFO(c.name);
    REQUIRE(std::filesystem::exists(path));
    CHECK(testing::read_file(path) == rendered);
    ++per_kind[c.kind];
  }
  for (PromptKind k : kPromptKinds) CHECK(per_kind[k] >= 3);
}

TEST_CASE("rendered prompts end in an open query block that parses back") {
  for (const auto& c : testing::golden_cases()) {
    const std::string p = render_prompt(PromptPack::builtin(), c.kind, c.inputs);
    REQUIRE(p.ends_with("Inference: "));
    const QueryBlock q = parse_query_block(p);
    CHECK(q.kind == c.kind);
    CHECK(q.input_fields == c.inputs);
  }
}

TEST_CASE("the shipped prompt pack equals the built-in one and is self-consistent") {
  std::ifstream in("data/prompt_pack.json");
  REQUIRE(in);
  const auto file = nlohmann::json::parse(in);
  CHECK(file == nlohmann::json(PromptPack::builtin().to_json()));
  const PromptPack loaded = PromptPack::load("data/prompt_pack.json");
  CHECK_NOTHROW(loaded.check());
  for (PromptKind k : kPromptKinds) CHECK(loaded.demonstrations(k).size() >= PromptPack::kDefaultDemonstrations);
}

TEST_CASE("prompt pack errors") {
  CHECK_THROWS_AS(render_prompt(PromptPack::builtin(), PromptKind::RuleImplications,
                                rule_implications_inputs(std::vector<Rule>{})),
                  PromptPackError);
  CHECK_THROWS_AS(render_prompt(PromptPack::builtin(), PromptKind::FactSelection,
                                fact_selection_inputs(fact("Eric is big."), std::vector<Atom>{})),
                  PromptPackError);
  auto j = nlohmann::json(PromptPack::builtin().to_json());
  std::string text = j["sign_agreement"][0]["inference_text"];
  const bool agree = text.find("signs agree") != std::string::npos;
  text.replace(text.find(agree ? "signs agree" : "signs disagree"), agree ? 11 : 14,
               agree ? "signs disagree" : "signs agree");
  j["sign_agreement"][0]["inference_text"] = text;
  CHECK_THROWS_AS(PromptPack::from_json(j).check(), PromptPackError);
  PromptPack empty;
  CHECK_THROWS_AS(empty.demonstrations(PromptKind::SignAgreement), PromptPackError);
  CHECK_THROWS_AS(PromptPack::load("no/such/pack.json"), PromptPackError);
  CHECK_THROWS_AS(prompt_kind_from_string("fact_guessing"), PromptPackError);
}

TEST_CASE("response parsing") {
  CHECK(std::get<Label>(parse_response(PromptKind::FactVerification,
                                       "The fact Fred is green is the negation of the question Fred is not green so "
                                       "the answer is \"no\".")) == Label::Disproved);
  CHECK(std::get<Label>(parse_response(PromptKind::FactVerification, "so the answer is \"yes\"\nignored")) ==
        Label::Proved);
  CHECK(std::get<std::size_t>(parse_response(PromptKind::FactSelection,
                                             "For the question Eric is nice the most relevant fact is Fact2 (x).", 3)) ==
        1);
  CHECK_THROWS_AS(parse_response(PromptKind::FactSelection, "the most relevant fact is Fact4 (x).", 3),
                  CompletionParseError);
  const auto sel = std::get<std::vector<std::size_t>>(parse_response(
      PromptKind::RuleSelection,
      "The question is about (Eric; is; nice): Rule1 (is; rough) not applicable to (Eric; is; nice), Rule2 (is; nice) "
      "is applicable to (Eric; is; nice).",
      2));
  CHECK(sel == std::vector<std::size_t>{1});
  CHECK(std::get<bool>(parse_response(PromptKind::SignAgreement, "... so signs disagree.")) == false);
  CHECK_THROWS_AS(parse_response(PromptKind::GoalDecomposition, "I would rather not."), CompletionParseError);
  CHECK_THROWS_AS(parse_response(PromptKind::SignAgreement, ""), CompletionParseError);
  CHECK_THROWS_AS(parse_response(PromptKind::RuleImplications, "Rule2 implies (is; red)."), CompletionParseError);
}

TEST_CASE("render_inference round-trips through parse_response for every fixture") {
  for (const auto& c : testing::golden_cases()) {
    const std::string text = render_inference(c.kind, c.inputs);
    CHECK_NOTHROW(parse_response(c.kind, text));
  }
}

TEST_CASE("property: the parser is total over arbitrary completions") {
  rng::Engine g(2024);
  const std::string alphabet = "RuleFact0123456789 ()\";:,.applicablesoyesnoagreeiTh\n";
  std::vector<std::string> seeds;
  for (const auto& c : testing::golden_cases()) seeds.push_back(render_inference(c.kind, c.inputs));
  std::size_t parsed = 0, rejected = 0;
  for (int i = 0; i < 4000; ++i) {
    std::string s;
    if (i % 2 == 0) {
      s = seeds[g() % seeds.size()];
      for (int m = 0; m < 3; ++m) {
        if (s.empty()) break;
        const std::size_t at = g() % s.size();
        s[at] = alphabet[g() % alphabet.size()];
      }
      s = s.substr(0, g() % (s.size() + 1));
    } else {
      const std::size_t n = g() % 80;
      for (std::size_t k = 0; k < n; ++k) s += alphabet[g() % alphabet.size()];
    }
    for (PromptKind k : kPromptKinds) {
      try {
        parse_response(k, s, g() % 4);
        ++parsed;
      } catch (const CompletionParseError&) {
        ++rejected;
      }
    }
  }
  CHECK(parsed > 0);
  CHECK(rejected > 0);
}

TEST_CASE("client posts the completion protocol and returns text") {
  std::string seen_body;
  MockLm server([&](const httplib::Request& req) {
    seen_body = req.body;
    return reply("echo:" + nlohmann::json::parse(req.body)["prompt"].get<std::string>());
  });
  CompletionClient client(server.config());
  CHECK(client.complete("ns", "hello") == "echo:hello");
  const auto body = nlohmann::json::parse(seen_body);
  CHECK(body["model"] == "default");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["max_tokens"] == 256);
  CHECK(client.network_requests() == 1);
}

TEST_CASE("response cache answers repeats without a request") {
  MockLm server([](const httplib::Request&) { return reply("same"); });
  CompletionClient client(server.config());
  client.complete("a", "p");
  client.complete("a", "p");
  CHECK(server.requests() == 1);
  CHECK(client.cache_hits() == 1);
  client.complete("b", "p");  // namespaces are separate
  CHECK(server.requests() == 2);
  LmConfig off = server.config();
  off.response_cache = false;
  CompletionClient uncached(off);
  uncached.complete("a", "p");
  uncached.complete("a", "p");
  CHECK(server.requests() == 4);
}

TEST_CASE("server errors are retried, client errors are not") {
  MockLm failing([](const httplib::Request&) { return std::pair{500, std::string("{}")}; });
  CompletionClient client(failing.config());
  CHECK_THROWS_AS(client.complete("ns", "x"), TransportError);
  CHECK(failing.requests() == 3);

  MockLm refusing([](const httplib::Request&) { return std::pair{404, std::string("{}")}; });
  CompletionClient c2(refusing.config());
  CHECK_THROWS_AS(c2.complete("ns", "x"), TransportError);
  CHECK(refusing.requests() == 1);

  MockLm malformed([](const httplib::Request&) { return std::pair{200, std::string("{\"txt\": 1}")}; });
  CompletionClient c3(malformed.config());
  CHECK_THROWS_AS(c3.complete("ns", "x"), TransportError);
  CHECK(malformed.requests() == 1);
}

TEST_CASE("transient failures recover within the retry budget") {
  std::atomic<int> calls{0};
  MockLm flaky([&](const httplib::Request&) {
    return ++calls < 3 ? std::pair{503, std::string("{}")} : reply("ok");
  });
  CompletionClient client(flaky.config());
  CHECK(client.complete("ns", "x") == "ok");
  CHECK(flaky.requests() == 3);
}

TEST_CASE("slow endpoints time out") {
  MockLm slow([](const httplib::Request&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    return reply("late");
  });
  LmConfig c = slow.config();
  c.timeout_ms = 100;
  c.retries = 0;
  CompletionClient client(c);
  CHECK_THROWS_AS(client.complete("ns", "x"), TimeoutError);
}

TEST_CASE("unreachable endpoints raise TransportError") {
  LmConfig c;
  c.endpoint_url = "http://127.0.0.1:1/v1/complete";
  c.retries = 1;
  c.retry_backoff_ms = 1;
  c.timeout_ms = 500;
  CompletionClient client(c);
  CHECK_THROWS_AS(client.complete("ns", "x"), TransportError);
}

TEST_CASE("bearer token comes from the configured environment variable") {
  MockLm server([](const httplib::Request&) { return reply("ok"); });
  LmConfig c = server.config();
  c.api_key_env = "BACKCHAIN_TEST_KEY";
  ::setenv("BACKCHAIN_TEST_KEY", "s3cret", 1);
  CompletionClient(c).complete("ns", "x");
  ::unsetenv("BACKCHAIN_TEST_KEY");
  CompletionClient(c).complete("ns", "y");
  const auto auth = server.auth_headers();
  REQUIRE(auth.size() == 2);
  CHECK(auth[0] == "Bearer s3cret");
  CHECK(auth[1].empty());
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(LmConfig::from_json({{"model_name", "m"}}), SchemaError);
  CHECK_THROWS_AS(LmConfig::from_json({{"endpoint_url", "http://x/y"}, {"retries", -1}}), SchemaError);
  CHECK_THROWS_AS(LmConfig::from_json({{"endpoint_url", "http://x/y"}, {"colour", 1}}), SchemaError);
  CHECK_THROWS_AS(LmConfig::from_json({{"endpoint_url", "http://x/y"}, {"template_pack", "v9"}}), SchemaError);
  const LmConfig c = LmConfig::from_json({{"endpoint_url", "http://x/y"}, {"demonstrations", 3}});
  CHECK(LmConfig::from_json(c.to_json()).demonstrations == 3);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("unparseable fact-check completions degrade to Unknown") {
  MockLm server([](const httplib::Request&) { return reply("no idea, sorry"); });
  auto b = backend_for(server);
  const auto r = b->fact_check(fact("Eric is big."), std::vector<Atom>{fact("Eric is big.")});
  CHECK(r.value.label == Label::Unknown);
  CHECK(r.lm_calls == 1);
  CHECK(b->rule_selection(fact("Eric is big."), testing::eric_theory().rules).value.empty());
}

TEST_CASE("unparseable decomposition and sign completions raise CompletionParseError") {
  MockLm server([](const httplib::Request&) { return reply("no idea, sorry"); });
  auto b = backend_for(server);
  const Rule r = testing::eric_theory().rules[5];
  CHECK_THROWS_AS(b->goal_decomposition(r, fact("Eric is nice.")), CompletionParseError);
  CHECK_THROWS_AS(b->sign_agreement(r, fact("Eric is nice.")), CompletionParseError);
}

TEST_CASE("end to end: the Eric proof through the completion endpoint") {
  MockLm server(MockLm::oracle);
  auto b = backend_for(server);
  const ProofResult r = BackwardChainer().prove({testing::eric_theory(), fact("Eric is nice."), 5}, *b);
  CHECK(r.label == Label::Proved);
  SymbolicBackend sym;
  const ProofResult s = BackwardChainer().prove({testing::eric_theory(), fact("Eric is nice."), 5}, sym);
  CHECK(r.trace == s.trace);
  CHECK(server.requests() > 0);
}

TEST_CASE("an oracle completion endpoint agrees with the symbolic backend") {
  MockLm server(MockLm::oracle);
  const auto data = testing::corpus(4242, 3);
  for (const Example& ex : data) {
    auto b = backend_for(server);
    SymbolicBackend sym;
    const Theory t = materialize(ex.theory);
    const ProofResult viaLm = BackwardChainer().prove({t, ex.goal, 6}, *b);
    const ProofResult viaSym = BackwardChainer().prove({t, ex.goal, 6}, sym);
    REQUIRE(viaLm.label == ex.gold_label);
    REQUIRE(viaLm.trace == viaSym.trace);
  }
}
