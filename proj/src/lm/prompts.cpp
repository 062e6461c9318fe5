#include "backchain/lm/prompts.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "backchain/errors.hpp"
#include "backchain/symbolic.hpp"

namespace backchain::lm {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 6> kKindNames = {"fact_selection",     "fact_verification",
                                                        "rule_implications",  "rule_selection",
                                                        "goal_decomposition", "sign_agreement"};

std::size_t index_of(PromptKind kind) { return static_cast<std::size_t>(kind); }

std::string first_line(std::string_view text) {
  const auto nl = text.find('\n');
  return std::string(nl == std::string_view::npos ? text : text.substr(0, nl));
}

std::string strip_period(std::string s) {
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& text, const std::string& sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + sep.size();
  }
}

const std::string& field_string(const json& fields, const char* name) {
  const auto it = fields.find(name);
  if (it == fields.end() || !it->is_string()) {
    throw PromptPackError(std::string("input field '") + name + "' must be a string");
  }
  return it->get_ref<const std::string&>();
}

std::vector<std::string> field_list(const json& fields, const char* name) {
  const auto it = fields.find(name);
  if (it == fields.end() || !it->is_array()) {
    throw PromptPackError(std::string("input field '") + name + "' must be an array of strings");
  }
  std::vector<std::string> out;
  for (const json& e : *it) {
    if (!e.is_string()) throw PromptPackError(std::string("input field '") + name + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

Atom parse_question(const std::string& question) {
  if (question.empty() || question.back() != '?') throw PromptPackError("question must end with '?': " + question);
  return parse_fact(question.substr(0, question.size() - 1) + ".");
}

std::string clause_of_sentence(const std::string& sentence) { return strip_period(sentence); }

std::string question_clause(const std::string& question) { return question.substr(0, question.size() - 1); }

std::string subject_tuple(const Atom& goal) {
  return "(" + goal.subject.name() + "; " + (goal.object ? goal.predicate + "; " + *goal.object : "is; " + goal.predicate) +
         ")";
}

bool applicable(const std::string& implication, const std::string& question_tuple) {
  auto parts = [](const std::string& t) {
    if (t.size() < 2 || t.front() != '(' || t.back() != ')') return std::vector<std::string>{};
    return split(t.substr(1, t.size() - 2), "; ");
  };
  const auto imp = parts(implication);
  const auto q = parts(question_tuple);
  if (q.size() != 3) return false;
  if (imp.size() == 2) return imp[0] == q[1] && imp[1] == q[2];
  return imp == q;
}

std::string sign_word(Sign s) { return s == Sign::Positive ? "positive" : "negated"; }

[[noreturn]] void fail(PromptKind kind, std::string_view completion) {
  throw CompletionParseError(std::string(to_string(kind)), std::string(completion));
}

Demonstration demo(json fields, std::string inference) { return {std::move(fields), std::move(inference)}; }

PromptPack make_builtin() {
  PromptPack p;
  p.set(PromptKind::FactSelection,
        {demo({{"facts", {"Anne is big.", "Bob is red.", "Anne is nice."}}, {"question", "Anne is nice?"}},
              "For the question Anne is nice the most relevant fact is Fact3 (Anne is nice)."),
         demo({{"facts", {"Dave is kind.", "Charlie is not green.", "Dave is young."}},
               {"question", "Charlie is green?"}},
              "For the question Charlie is green the most relevant fact is Fact2 (Charlie is not green)."),
         demo({{"facts", {"Bob likes the cat.", "Bob chases the dog.", "Erin sees the cat."}},
               {"question", "Bob likes the dog?"}},
              "For the question Bob likes the dog the most relevant fact is Fact1 (Bob likes the cat)."),
         demo({{"facts", {"Fiona is round.", "Gary is blue.", "Fiona is cold.", "Harry is rough."}},
               {"question", "Fiona is rough?"}},
              "For the question Fiona is rough the most relevant fact is Fact1 (Fiona is round).")});
  p.set(PromptKind::FactVerification,
        {demo({{"fact", "Anne is nice."}, {"question", "Anne is nice?"}},
              "The fact Anne is nice is equivalent to the question Anne is nice so the answer is \"yes\"."),
         demo({{"fact", "Charlie is not green."}, {"question", "Charlie is green?"}},
              "The fact Charlie is not green is the negation of the question Charlie is green so the answer is "
              "\"no\"."),
         demo({{"fact", "Bob likes the cat."}, {"question", "Bob likes the dog?"}},
              "The fact Bob likes the cat is neither equivalent nor the negation of the question Bob likes the dog "
              "so the question cannot be inferred from the fact."),
         demo({{"fact", "Erin does not see the cat."}, {"question", "Erin does not see the cat?"}},
              "The fact Erin does not see the cat is equivalent to the question Erin does not see the cat so the "
              "answer is \"yes\".")});
  p.set(PromptKind::RuleImplications,
        {demo({{"rules",
                {"If someone is rough and nice then they are red.", "If Bob chases the dog then Bob sees the dog."}}},
              "Rule1 implies (is; red), Rule2 implies (Bob; see; dog)."),
         demo({{"rules",
                {"If someone is big then they are not kind.", "If someone likes the cat then they chase the cat.",
                 "If someone is young then they are cold."}}},
              "Rule1 implies (is; kind), Rule2 implies (chase; cat), Rule3 implies (is; cold)."),
         demo({{"rules", {"If Fiona is round then Fiona is red."}}}, "Rule1 implies (Fiona; is; red)."),
         demo({{"rules",
                {"If someone is blue and cold then they do not like the dog.",
                 "If someone is green then they are rough."}}},
              "Rule1 implies (like; dog), Rule2 implies (is; rough).")});
  p.set(PromptKind::RuleSelection,
        {demo({{"implications", {"(is; red)", "(Bob; see; dog)", "(is; nice)"}}, {"question", "Anne is red?"}},
              "The question is about (Anne; is; red): Rule1 (is; red) is applicable to (Anne; is; red), Rule2 (Bob; "
              "see; dog) not applicable to (Anne; is; red), Rule3 (is; nice) not applicable to (Anne; is; red)."),
         demo({{"implications", {"(is; kind)", "(chase; cat)"}}, {"question", "Dave is not kind?"}},
              "The question is about (Dave; is; kind): Rule1 (is; kind) is applicable to (Dave; is; kind), Rule2 "
              "(chase; cat) not applicable to (Dave; is; kind)."),
         demo({{"implications", {"(Fiona; is; red)", "(is; red)"}}, {"question", "Gary is red?"}},
              "The question is about (Gary; is; red): Rule1 (Fiona; is; red) not applicable to (Gary; is; red), "
              "Rule2 (is; red) is applicable to (Gary; is; red)."),
         demo({{"implications", {"(like; dog)", "(is; rough)", "(chase; cat)"}}, {"question", "Erin chases the cat?"}},
              "The question is about (Erin; chase; cat): Rule1 (like; dog) not applicable to (Erin; chase; cat), "
              "Rule2 (is; rough) not applicable to (Erin; chase; cat), Rule3 (chase; cat) is applicable to (Erin; "
              "chase; cat).")});
  p.set(PromptKind::GoalDecomposition,
        {demo({{"rule", "If someone is rough and nice then they are red."}, {"question", "Anne is red?"}},
              "The question subject is Anne and the rule premises are someone is rough, someone is nice, so the "
              "question breaks down to Anne is rough, Anne is nice."),
         demo({{"rule", "If someone likes the cat then they chase the cat."}, {"question", "Erin chases the cat?"}},
              "The question subject is Erin and the rule premises are someone likes the cat, so the question breaks "
              "down to Erin likes the cat."),
         demo({{"rule", "If Fiona is round then Fiona is red."}, {"question", "Fiona is red?"}},
              "The question subject is Fiona and the rule premises are Fiona is round, so the question breaks down "
              "to Fiona is round."),
         demo({{"rule", "If someone is big and is not young then they are not kind."}, {"question", "Dave is kind?"}},
              "The question subject is Dave and the rule premises are someone is big, someone is not young, so the "
              "question breaks down to Dave is big, Dave is not young.")});
  p.set(PromptKind::SignAgreement,
        {demo({{"rule", "If someone is rough and nice then they are red."}, {"question", "Anne is red?"}},
              "The rule implication (is; red) is positive, the question (Anne; is; red) is positive, so signs agree."),
         demo({{"rule", "If someone is big then they are not kind."}, {"question", "Dave is kind?"}},
              "The rule implication (is; kind) is negated, the question (Dave; is; kind) is positive, so signs "
              "disagree."),
         demo({{"rule", "If someone is blue and cold then they do not like the dog."},
               {"question", "Gary does not like the dog?"}},
              "The rule implication (like; dog) is negated, the question (Gary; like; dog) is negated, so signs "
              "agree."),
         demo({{"rule", "If Fiona is round then Fiona is red."}, {"question", "Fiona is not red?"}},
              "The rule implication (Fiona; is; red) is positive, the question (Fiona; is; red) is negated, so signs "
              "disagree.")});
  p.check();
  return p;
}

std::vector<std::string> numbered_items(const std::string& line, const std::string& label) {
  // "Fact1: A. Fact2: B." -> {"A.", "B."}
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (std::size_t n = 1;; ++n) {
    const std::string tag = label + std::to_string(n) + ": ";
    if (line.compare(pos, tag.size(), tag) != 0) break;
    pos += tag.size();
    const std::string next = " " + label + std::to_string(n + 1) + ": ";
    const auto end = line.find(next, pos);
    if (end == std::string::npos) {
      out.push_back(line.substr(pos));
      pos = line.size();
      break;
    }
    out.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  if (pos != line.size()) throw PromptPackError("malformed " + label + " list: " + line);
  return out;
}

}  // namespace

std::string_view to_string(PromptKind kind) noexcept { return kKindNames[index_of(kind)]; }

PromptKind prompt_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<PromptKind>(i);
  }
  throw PromptPackError("unknown prompt kind '" + std::string(text) + "'");
}

const PromptPack& PromptPack::builtin() {
  static const PromptPack pack = make_builtin();
  return pack;
}

PromptPack PromptPack::from_json(const json& j, const TemplatePack& text) {
  if (!j.is_object()) throw PromptPackError("prompt pack must be a JSON object");
  PromptPack p;
  for (const auto& [key, list] : j.items()) {
    const PromptKind kind = prompt_kind_from_string(key);
    if (!list.is_array()) throw PromptPackError(key + " must be an array");
    std::vector<Demonstration> demos;
    for (const json& d : list) {
      if (!d.is_object() || d.size() != 2 || !d.contains("input_fields") || !d.contains("inference_text") ||
          !d["inference_text"].is_string() || !d["input_fields"].is_object()) {
        throw PromptPackError(key + ": demonstrations need exactly input_fields (object) and inference_text (string)");
      }
      demos.push_back({d["input_fields"], d["inference_text"].get<std::string>()});
    }
    p.set(kind, std::move(demos));
  }
  p.check(text);
  return p;
}

PromptPack PromptPack::load(const std::filesystem::path& path, const TemplatePack& text) {
  std::ifstream in(path);
  if (!in) throw PromptPackError("cannot open prompt pack " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw PromptPackError("malformed prompt pack " + path.string() + ": " + e.what());
  }
  return from_json(j, text);
}

nlohmann::ordered_json PromptPack::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (PromptKind kind : kPromptKinds) {
    const auto& demos = demos_[index_of(kind)];
    if (demos.empty()) continue;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const Demonstration& d : demos) {
      nlohmann::ordered_json e;
      e["input_fields"] = nlohmann::ordered_json::parse(d.input_fields.dump());
      e["inference_text"] = d.inference_text;
      list.push_back(std::move(e));
    }
    j[std::string(to_string(kind))] = std::move(list);
  }
  return j;
}

const std::vector<Demonstration>& PromptPack::demonstrations(PromptKind kind) const {
  const auto& demos = demos_[index_of(kind)];
  if (demos.empty()) throw PromptPackError("no demonstrations for " + std::string(to_string(kind)));
  return demos;
}

void PromptPack::set(PromptKind kind, std::vector<Demonstration> demos) { demos_[index_of(kind)] = std::move(demos); }

void PromptPack::check(const TemplatePack& text) const {
  for (PromptKind kind : kPromptKinds) {
    const auto& demos = demos_[index_of(kind)];
    for (std::size_t i = 0; i < demos.size(); ++i) {
      const Demonstration& d = demos[i];
      const std::string where = std::string(to_string(kind)) + "[" + std::to_string(i) + "]";
      try {
        const std::string expected = render_inference(kind, d.input_fields, text);
        if (parse_response(kind, d.inference_text, 0, text) != parse_response(kind, expected, 0, text)) {
          throw PromptPackError(where + ": inference text disagrees with its inputs; expected \"" + expected + "\"");
        }
      } catch (const CompletionParseError& e) {
        throw PromptPackError(where + ": " + e.what());
      } catch (const ParseError& e) {
        throw PromptPackError(where + ": " + e.what());
      }
    }
  }
}

std::string question_text(const Atom& goal) { return render_clause(goal) + "?"; }

std::string implication_tuple(const Atom& atom) {
  const std::string body = atom.object ? atom.predicate + "; " + *atom.object : "is; " + atom.predicate;
  if (atom.subject.is_variable()) return "(" + body + ")";
  return "(" + atom.subject.name() + "; " + body + ")";
}

json fact_selection_inputs(const Atom& goal, std::span<const Atom> facts) {
  json list = json::array();
  for (const Atom& f : facts) list.push_back(render_text(f));
  return {{"facts", std::move(list)}, {"question", question_text(goal)}};
}

json fact_verification_inputs(const Atom& fact, const Atom& goal) {
  return {{"fact", render_text(fact)}, {"question", question_text(goal)}};
}

json rule_implications_inputs(std::span<const Rule> rules, const TemplatePack& text) {
  json list = json::array();
  for (const Rule& r : rules) list.push_back(render_text(r, text));
  return {{"rules", std::move(list)}};
}

json rule_selection_inputs(const std::vector<std::string>& implications, const Atom& goal) {
  return {{"implications", implications}, {"question", question_text(goal)}};
}

json goal_decomposition_inputs(const Rule& rule, const Atom& goal, const TemplatePack& text) {
  return {{"rule", render_text(rule, text)}, {"question", question_text(goal)}};
}

json sign_agreement_inputs(const Rule& rule, const Atom& goal, const TemplatePack& text) {
  return goal_decomposition_inputs(rule, goal, text);
}

std::string render_block(PromptKind kind, const json& fields) {
  std::ostringstream out;
  switch (kind) {
    case PromptKind::FactSelection: {
      const auto facts = field_list(fields, "facts");
      if (facts.empty()) throw PromptPackError("fact selection needs at least one fact");
      for (std::size_t i = 0; i < facts.size(); ++i) out << (i ? " " : "") << "Fact" << i + 1 << ": " << facts[i];
      out << "\nQuestion: " << field_string(fields, "question") << "\n";
      break;
    }
    case PromptKind::FactVerification:
      out << "Fact: " << field_string(fields, "fact") << "\nQuestion: " << field_string(fields, "question") << "\n";
      break;
    case PromptKind::RuleImplications: {
      const auto rules = field_list(fields, "rules");
      if (rules.empty()) throw PromptPackError("rule implications need at least one rule");
      for (std::size_t i = 0; i < rules.size(); ++i) out << (i ? " " : "") << "Rule" << i + 1 << ": " << rules[i];
      out << "\n";
      break;
    }
    case PromptKind::RuleSelection: {
      const auto imps = field_list(fields, "implications");
      if (imps.empty()) throw PromptPackError("rule selection needs at least one implication");
      for (std::size_t i = 0; i < imps.size(); ++i) out << (i ? ", " : "") << "Rule" << i + 1 << " implies " << imps[i];
      out << "\nQuestion: " << field_string(fields, "question") << "\n";
      break;
    }
    case PromptKind::GoalDecomposition:
    case PromptKind::SignAgreement:
      out << "Rule: " << field_string(fields, "rule") << "\nQuestion: " << field_string(fields, "question") << "\n";
      break;
  }
  out << "Inference: ";
  return out.str();
}

std::string render_prompt(const PromptPack& pack, PromptKind kind, const json& input_fields, std::size_t k) {
  const auto& demos = pack.demonstrations(kind);
  if (k == 0) throw PromptPackError("at least one demonstration is required");
  if (k > demos.size()) {
    throw PromptPackError(std::string(to_string(kind)) + " has " + std::to_string(demos.size()) +
                          " demonstrations, " + std::to_string(k) + " requested");
  }
  std::string out;
  for (std::size_t i = 0; i < k; ++i) {
    out += "Example " + std::to_string(i + 1) + "\n";
    out += render_block(kind, demos[i].input_fields);
    out += demos[i].inference_text + "\n\n";
  }
  out += "Example " + std::to_string(k + 1) + "\n";
  out += render_block(kind, input_fields);
  return out;
}

ModuleOutput parse_response(PromptKind kind, std::string_view completion, std::size_t expected_items,
                            const TemplatePack& text) {
  const std::string line = first_line(completion);
  std::smatch m;
  switch (kind) {
    case PromptKind::FactSelection: {
      static const std::regex re(R"(the most relevant fact is Fact(\d{1,6})\b)");
      if (!std::regex_search(line, m, re)) fail(kind, completion);
      const std::size_t n = std::stoul(m[1].str());
      if (n == 0 || (expected_items && n > expected_items)) fail(kind, completion);
      return n - 1;
    }
    case PromptKind::FactVerification: {
      if (line.find("the answer is \"yes\"") != std::string::npos) return Label::Proved;
      if (line.find("the answer is \"no\"") != std::string::npos) return Label::Disproved;
      if (line.find("cannot be inferred") != std::string::npos) return Label::Unknown;
      if (line.find("is neither equivalent nor the negation of") != std::string::npos) return Label::Unknown;
      if (line.find("is the negation of") != std::string::npos) return Label::Disproved;
      if (line.find("is equivalent to") != std::string::npos) return Label::Proved;
      fail(kind, completion);
    }
    case PromptKind::RuleImplications: {
      static const std::regex re(R"(Rule(\d{1,6}) implies (\([^()]*\)))");
      std::vector<std::string> tuples;
      for (auto it = std::sregex_iterator(line.begin(), line.end(), re); it != std::sregex_iterator(); ++it) {
        if (std::stoul((*it)[1].str()) != tuples.size() + 1) fail(kind, completion);
        tuples.push_back((*it)[2].str());
      }
      if (tuples.empty() || (expected_items && tuples.size() != expected_items)) fail(kind, completion);
      return tuples;
    }
    case PromptKind::RuleSelection: {
      static const std::regex re(R"(Rule(\d{1,6}) \([^()]*\) (is applicable to|not applicable to) )");
      std::vector<std::size_t> selected;
      std::size_t seen = 0;
      for (auto it = std::sregex_iterator(line.begin(), line.end(), re); it != std::sregex_iterator(); ++it) {
        const std::size_t n = std::stoul((*it)[1].str());
        if (n != seen + 1) fail(kind, completion);
        seen = n;
        if ((*it)[2].str() == "is applicable to") selected.push_back(n - 1);
      }
      if (seen == 0 || (expected_items && seen != expected_items)) fail(kind, completion);
      return selected;
    }
    case PromptKind::GoalDecomposition: {
      static const std::regex re(R"(so the question breaks down to (.+?)\.?$)");
      if (!std::regex_search(line, m, re)) fail(kind, completion);
      std::vector<Atom> subgoals;
      try {
        for (const std::string& clause : split(m[1].str(), ", ")) subgoals.push_back(parse_fact(clause + ".", text));
      } catch (const ParseError&) {
        fail(kind, completion);
      }
      return subgoals;
    }
    case PromptKind::SignAgreement: {
      if (line.find("so signs disagree") != std::string::npos) return false;
      if (line.find("so signs agree") != std::string::npos) return true;
      fail(kind, completion);
    }
  }
  fail(kind, completion);
}

std::string render_inference(PromptKind kind, const json& fields, const TemplatePack& text) {
  switch (kind) {
    case PromptKind::FactSelection: {
      const Atom goal = parse_question(field_string(fields, "question"));
      const auto sentences = field_list(fields, "facts");
      if (sentences.empty()) throw PromptPackError("fact selection needs at least one fact");
      std::size_t best = 0;
      auto best_score = SymbolicBackend::relevance(goal, parse_fact(sentences[0], text));
      for (std::size_t i = 1; i < sentences.size(); ++i) {
        const auto score = SymbolicBackend::relevance(goal, parse_fact(sentences[i], text));
        if (score > best_score) {
          best = i;
          best_score = score;
        }
      }
      return "For the question " + question_clause(field_string(fields, "question")) +
             " the most relevant fact is Fact" + std::to_string(best + 1) + " (" + clause_of_sentence(sentences[best]) +
             ").";
    }
    case PromptKind::FactVerification: {
      const std::string& question = field_string(fields, "question");
      const std::string& sentence = field_string(fields, "fact");
      const Label label = SymbolicBackend::verify_fact(parse_fact(sentence, text), parse_question(question));
      const std::string head = "The fact " + clause_of_sentence(sentence);
      const std::string q = " the question " + question_clause(question);
      switch (label) {
        case Label::Proved:
          return head + " is equivalent to" + q + " so the answer is \"yes\".";
        case Label::Disproved:
          return head + " is the negation of" + q + " so the answer is \"no\".";
        case Label::Unknown:
          break;
      }
      return head + " is neither equivalent nor the negation of" + q + " so the question cannot be inferred from the fact.";
    }
    case PromptKind::RuleImplications: {
      const auto rules = field_list(fields, "rules");
      if (rules.empty()) throw PromptPackError("rule implications need at least one rule");
      std::vector<std::string> parts;
      for (std::size_t i = 0; i < rules.size(); ++i) {
        parts.push_back("Rule" + std::to_string(i + 1) + " implies " +
                        implication_tuple(parse_rule(rules[i], "", text).consequent));
      }
      return join(parts, ", ") + ".";
    }
    case PromptKind::RuleSelection: {
      const auto imps = field_list(fields, "implications");
      if (imps.empty()) throw PromptPackError("rule selection needs at least one implication");
      const std::string q = subject_tuple(parse_question(field_string(fields, "question")));
      std::vector<std::string> parts;
      for (std::size_t i = 0; i < imps.size(); ++i) {
        parts.push_back("Rule" + std::to_string(i + 1) + " " + imps[i] +
                        (applicable(imps[i], q) ? " is applicable to " : " not applicable to ") + q);
      }
      return "The question is about " + q + ": " + join(parts, ", ") + ".";
    }
    case PromptKind::GoalDecomposition: {
      const Rule rule = parse_rule(field_string(fields, "rule"), "", text);
      const Atom goal = parse_question(field_string(fields, "question"));
      std::vector<std::string> premises, subgoals;
      for (const Atom& a : rule.antecedents) {
        premises.push_back(render_clause(a, text));
        subgoals.push_back(render_clause(a.subject.is_variable() ? a.with_subject(goal.subject) : a, text));
      }
      return "The question subject is " + goal.subject.name() + " and the rule premises are " + join(premises, ", ") +
             ", so the question breaks down to " + join(subgoals, ", ") + ".";
    }
    case PromptKind::SignAgreement: {
      const Rule rule = parse_rule(field_string(fields, "rule"), "", text);
      const Atom goal = parse_question(field_string(fields, "question"));
      return "The rule implication " + implication_tuple(rule.consequent) + " is " + sign_word(rule.consequent.sign) +
             ", the question " + subject_tuple(goal) + " is " + sign_word(goal.sign) + ", so signs " +
             (rule.consequent.sign == goal.sign ? "agree." : "disagree.");
    }
  }
  throw PromptPackError("unknown prompt kind");
}

QueryBlock parse_query_block(std::string_view prompt) {
  const std::string text(prompt);
  const auto last = text.rfind("Example ");
  if (last == std::string::npos) throw PromptPackError("prompt has no example blocks");
  const auto body_start = text.find('\n', last);
  if (body_start == std::string::npos) throw PromptPackError("truncated query block");
  std::vector<std::string> lines;
  std::istringstream in(text.substr(body_start + 1));
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  if (lines.size() < 2 || lines.back() != "Inference: ") throw PromptPackError("query block must end in \"Inference: \"");

  auto question = [&](std::size_t i) {
    if (i >= lines.size() || lines[i].rfind("Question: ", 0) != 0) throw PromptPackError("missing Question line");
    return lines[i].substr(10);
  };
  const std::string& head = lines[0];
  if (head.rfind("Fact1: ", 0) == 0) {
    return {PromptKind::FactSelection, {{"facts", numbered_items(head, "Fact")}, {"question", question(1)}}};
  }
  if (head.rfind("Fact: ", 0) == 0) {
    return {PromptKind::FactVerification, {{"fact", head.substr(6)}, {"question", question(1)}}};
  }
  if (head.rfind("Rule1: ", 0) == 0) return {PromptKind::RuleImplications, {{"rules", numbered_items(head, "Rule")}}};
  if (head.rfind("Rule1 implies ", 0) == 0) {
    std::vector<std::string> imps;
    for (const std::string& part : split(head, ", Rule")) {
      const auto at = part.find(" implies ");
      if (at == std::string::npos) throw PromptPackError("malformed implication list");
      imps.push_back(part.substr(at + 9));
    }
    return {PromptKind::RuleSelection, {{"implications", imps}, {"question", question(1)}}};
  }
  if (head.rfind("Rule: ", 0) == 0) {
    const json fields = {{"rule", head.substr(6)}, {"question", question(1)}};
    if (text.find("Inference: The question subject is") != std::string::npos) return {PromptKind::GoalDecomposition, fields};
    if (text.find("Inference: The rule implication") != std::string::npos) return {PromptKind::SignAgreement, fields};
    throw PromptPackError("cannot tell decomposition from sign agreement without demonstrations");
  }
  throw PromptPackError("unrecognised query block");
}

}  // namespace backchain::lm
