#include "backchain/serialize.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "backchain/errors.hpp"

namespace backchain {

namespace {

using nlohmann::json;

void expect_fields(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto name : allowed) known = known || key == name;
    if (!known) throw SchemaError(path + "." + key, "unknown field");
  }
  for (auto name : allowed) {
    if (!j.contains(name)) throw SchemaError(path + "." + std::string(name), "missing field");
  }
}

const std::string& expect_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get_ref<const std::string&>();
}

const json& expect_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  return j;
}

}  // namespace

ordered_json to_json(const Atom& atom) {
  ordered_json j;
  j["subject"] = atom.subject.name();
  j["predicate"] = atom.predicate;
  j["object"] = atom.object ? ordered_json(*atom.object) : ordered_json(nullptr);
  j["sign"] = std::string(to_string(atom.sign));
  return j;
}

ordered_json to_json(const Rule& rule) {
  ordered_json j;
  j["id"] = rule.id;
  ordered_json ants = ordered_json::array();
  for (const Atom& a : rule.antecedents) ants.push_back(to_json(a));
  j["antecedents"] = std::move(ants);
  j["consequent"] = to_json(rule.consequent);
  return j;
}

ordered_json to_json(const Example& example) {
  ordered_json j;
  ordered_json facts = ordered_json::array();
  for (const Atom& f : example.theory.facts) facts.push_back(to_json(f));
  j["facts"] = std::move(facts);
  ordered_json rules = ordered_json::array();
  for (const Rule& r : example.theory.rules) rules.push_back(to_json(r));
  j["rules"] = std::move(rules);
  j["goal"] = to_json(example.goal);
  j["label"] = std::string(to_string(example.gold_label));
  j["depth"] = example.gold_depth ? ordered_json(*example.gold_depth) : ordered_json(nullptr);
  // json (std::map) keeps metadata keys sorted, which keeps the encoding canonical.
  j["metadata"] = ordered_json::parse(example.theory.metadata.dump());
  return j;
}

Atom atom_from_json(const json& j, const std::string& path, bool require_ground) {
  expect_fields(j, path, {"subject", "predicate", "object", "sign"});
  const std::string& subject = expect_string(j["subject"], path + ".subject");
  Atom atom;
  if (!subject.empty() && subject.front() == '?') {
    if (subject != Term::kVariableName) throw SchemaError(path + ".subject", "the only variable is ?x");
    atom.subject = Term::variable();
  } else {
    atom.subject = Term::constant(subject);
  }
  atom.predicate = expect_string(j["predicate"], path + ".predicate");
  if (!j["object"].is_null()) atom.object = expect_string(j["object"], path + ".object");
  const std::string& sign = expect_string(j["sign"], path + ".sign");
  if (sign == "pos") {
    atom.sign = Sign::Positive;
  } else if (sign == "neg") {
    atom.sign = Sign::Negative;
  } else {
    throw SchemaError(path + ".sign", "expected \"pos\" or \"neg\"");
  }
  validate_atom(atom, require_ground, path);
  return atom;
}

Rule rule_from_json(const json& j, const std::string& path) {
  expect_fields(j, path, {"id", "antecedents", "consequent"});
  Rule rule;
  rule.id = expect_string(j["id"], path + ".id");
  const json& ants = expect_array(j["antecedents"], path + ".antecedents");
  for (std::size_t i = 0; i < ants.size(); ++i) {
    rule.antecedents.push_back(atom_from_json(ants[i], path + ".antecedents[" + std::to_string(i) + "]", false));
  }
  rule.consequent = atom_from_json(j["consequent"], path + ".consequent", false);
  validate_rule(rule, path);
  return rule;
}

Example example_from_json(const json& j) {
  expect_fields(j, "$", {"facts", "rules", "goal", "label", "depth", "metadata"});
  Example ex;
  const json& facts = expect_array(j["facts"], "$.facts");
  for (std::size_t i = 0; i < facts.size(); ++i) {
    ex.theory.facts.push_back(atom_from_json(facts[i], "$.facts[" + std::to_string(i) + "]", true));
  }
  const json& rules = expect_array(j["rules"], "$.rules");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    ex.theory.rules.push_back(rule_from_json(rules[i], "$.rules[" + std::to_string(i) + "]"));
  }
  ex.goal = atom_from_json(j["goal"], "$.goal", true);
  try {
    ex.gold_label = label_from_string(expect_string(j["label"], "$.label"));
  } catch (const std::invalid_argument& e) {
    throw SchemaError("$.label", e.what());
  }
  if (!j["depth"].is_null()) {
    if (!j["depth"].is_number_integer()) throw SchemaError("$.depth", "expected an integer or null");
    ex.gold_depth = j["depth"].get<int>();
  }
  if (!j["metadata"].is_object()) throw SchemaError("$.metadata", "expected an object");
  ex.theory.metadata = j["metadata"];
  validate_example(ex);
  return ex;
}

std::string dump_example(const Example& example) { return to_json(example).dump(); }

Example parse_example(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("malformed JSON: ") + e.what());
  }
  return example_from_json(j);
}

Example load_example(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("$", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_example(buf.str());
}

void save_example(const Example& example, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dump_example(example) << '\n';
}

std::vector<Example> read_dataset(std::istream& in) {
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_example(line));
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + " " + e.path(), e.what());
    }
  }
  return out;
}

std::vector<Example> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("$", "cannot open " + path.string());
  return read_dataset(in);
}

void write_dataset(const std::vector<Example>& dataset, std::ostream& out) {
  for (const Example& ex : dataset) out << dump_example(ex) << '\n';
}

void save_dataset(const std::vector<Example>& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset(dataset, out);
}

}  // namespace backchain
