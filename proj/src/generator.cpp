#include "backchain/generator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "backchain/errors.hpp"
#include "backchain/forward.hpp"
#include "backchain/rng.hpp"
#include "backchain/text.hpp"

namespace backchain {

namespace {

using nlohmann::json;

const std::vector<std::string> kNames = {"Anne", "Bob",  "Charlie", "Dave", "Eric", "Erin",
                                         "Fiona", "Fred", "Gary",   "Harry", "Alan", "Bella"};
const std::vector<std::string> kAdjectives = {"big",   "red",   "nice",  "rough", "kind",  "young", "cold",
                                              "green", "blue",  "round", "furry", "smart", "quiet", "white",
                                              "rich",  "tall",  "sad",   "happy", "strong", "shy"};
const std::vector<std::string> kVerbs = {"like", "chase", "see", "need", "visit", "eat"};
const std::vector<std::string> kObjects = {"dog", "cat", "bear", "mouse", "lion", "squirrel", "cow", "tiger", "rabbit"};

constexpr Label kLabels[] = {Label::Proved, Label::Disproved, Label::Unknown};

struct Template {
  std::string predicate;
  std::optional<std::string> object;

  Atom at(Term subject, Sign sign) const { return Atom{std::move(subject), predicate, object, sign}; }
  friend auto operator<=>(const Template&, const Template&) = default;
};

int read_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  return j.get<int>();
}

double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

IntRange read_range(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected {min, max}");
  IntRange r;
  for (const auto& [key, value] : j.items()) {
    if (key == "min") {
      r.min = read_int(value, path + ".min");
    } else if (key == "max") {
      r.max = read_int(value, path + ".max");
    } else {
      throw SchemaError(path + "." + key, "unknown field");
    }
  }
  return r;
}

void check_range(const IntRange& r, int lo, const std::string& path) {
  if (r.min < lo || r.max < r.min) throw SchemaError(path, "invalid range");
}

class ExampleBuilder {
 public:
  ExampleBuilder(const GenConfig& config, rng::Engine& gen) : config_(config), gen_(gen) {}

  std::optional<Example> attempt(Label label) {
    facts_.clear();
    rules_.clear();
    sample_vocabulary();

    const int depth = config_.depth;
    const Term subject = Term::constant(rng::pick(gen_, entities_));
    Atom target;
    if (depth == 0) {
      target = random_atom(subject, config_.negative_fact_prob);
      facts_.push_back(target);
    } else {
      target = plant_chain(subject, depth);
    }
    add_distractors();

    Theory theory;
    rng::shuffle(gen_, facts_);
    rng::shuffle(gen_, rules_);
    theory.facts = facts_;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      rules_[i].id = "Rule" + std::to_string(i + 1);
      theory.rules.push_back(rules_[i]);
    }
    try {
      validate_theory(theory);
    } catch (const SchemaError&) {
      return std::nullopt;
    }
    std::optional<Closure> full;
    try {
      full = closure(theory);
    } catch (const InconsistencyError&) {
      return std::nullopt;
    }

    Example ex;
    ex.gold_label = label;
    if (label == Label::Unknown) {
      auto goal = unknown_goal(theory, *full);
      if (!goal) return std::nullopt;
      ex.goal = *goal;
    } else {
      ex.goal = label == Label::Proved ? target : target.negated();
      if (oracle_label(*full, ex.goal) != label) return std::nullopt;
      const auto found = full->depth_of(target);
      if (!found || *found != depth) return std::nullopt;
      ex.gold_depth = depth;
    }
    if (decoy_count(theory, ex.goal) > 1) return std::nullopt;
    ex.theory = std::move(theory);
    return ex;
  }

 private:
  void sample_vocabulary() {
    std::vector<std::string> names = kNames;
    rng::shuffle(gen_, names);
    names.resize(static_cast<std::size_t>(rng::between(gen_, config_.entities.min, config_.entities.max)));
    entities_ = std::move(names);

    std::vector<std::string> adjectives = kAdjectives;
    rng::shuffle(gen_, adjectives);
    std::set<Template> seen;
    templates_.clear();
    std::size_t next_adjective = 0;
    while (templates_.size() < static_cast<std::size_t>(config_.predicate_pool)) {
      Template t;
      if (rng::chance(gen_, config_.relational_prob)) {
        t = Template{rng::pick(gen_, kVerbs), rng::pick(gen_, kObjects)};
      } else {
        t = Template{adjectives[next_adjective++ % adjectives.size()], std::nullopt};
      }
      if (seen.insert(t).second) templates_.push_back(std::move(t));
    }
  }

  Sign sign_with(double negative_prob) { return rng::chance(gen_, negative_prob) ? Sign::Negative : Sign::Positive; }

  Atom random_atom(const Term& subject, double negative_prob) {
    return rng::pick(gen_, templates_).at(subject, sign_with(negative_prob));
  }

  bool has_fact_either_sign(const Atom& atom) const {
    return std::find(facts_.begin(), facts_.end(), atom) != facts_.end() ||
           std::find(facts_.begin(), facts_.end(), atom.negated()) != facts_.end();
  }

  void add_fact(const Atom& atom) {
    if (!has_fact_either_sign(atom)) facts_.push_back(atom);
  }

  // A chain of `depth` rules ending in the returned ground atom, whose
  // intended minimal depth is exactly `depth`.
  Atom plant_chain(const Term& subject, int depth) {
    std::vector<Template> order = templates_;
    rng::shuffle(gen_, order);
    std::vector<Template> chain(order.begin(), order.begin() + depth + 1);
    std::vector<Template> side(order.begin() + depth + 1, order.end());

    std::vector<Sign> signs;
    signs.push_back(sign_with(config_.negative_fact_prob));
    for (int i = 1; i <= depth; ++i) signs.push_back(sign_with(config_.negative_consequent_prob));

    add_fact(chain[0].at(subject, signs[0]));
    for (int i = 1; i <= depth; ++i) {
      const bool variable = !rng::chance(gen_, 0.2);
      const Term rule_subject = variable ? Term::variable() : subject;
      Rule rule;
      rule.antecedents.push_back(chain[i - 1].at(rule_subject, signs[i - 1]));
      const int extra = rng::between(gen_, config_.antecedents.min, config_.antecedents.max) - 1;
      for (int k = 0; k < extra && !side.empty(); ++k) {
        const Template& t = rng::pick(gen_, side);
        const Sign s = sign_with(config_.negative_fact_prob);
        Atom premise = t.at(rule_subject, s);
        if (std::find(rule.antecedents.begin(), rule.antecedents.end(), premise) != rule.antecedents.end()) continue;
        rule.antecedents.push_back(premise);
        add_fact(t.at(subject, s));
      }
      rng::shuffle(gen_, rule.antecedents);
      rule.consequent = chain[i].at(rule_subject, signs[i]);
      rules_.push_back(std::move(rule));
    }
    return chain[depth].at(subject, signs[depth]);
  }

  void add_distractors() {
    const int nf = rng::between(gen_, config_.facts.min, config_.facts.max);
    for (int i = 0; i < nf; ++i) {
      add_fact(random_atom(Term::constant(rng::pick(gen_, entities_)), config_.negative_fact_prob));
    }
    const int nr = rng::between(gen_, config_.rules.min, config_.rules.max);
    for (int i = 0; i < nr; ++i) {
      const bool variable = !rng::chance(gen_, 0.2);
      const Term subject = variable ? Term::variable() : Term::constant(rng::pick(gen_, entities_));
      std::vector<Template> order = templates_;
      rng::shuffle(gen_, order);
      const int n = std::min<int>(rng::between(gen_, config_.antecedents.min, config_.antecedents.max),
                                  static_cast<int>(order.size()) - 1);
      Rule rule;
      for (int k = 0; k < n; ++k) rule.antecedents.push_back(order[k].at(subject, sign_with(config_.negative_fact_prob)));
      rule.consequent = order[n].at(subject, sign_with(config_.negative_consequent_prob));
      rules_.push_back(std::move(rule));
    }
  }

  // Recombines subjects and predicates that occur in the theory, so an
  // Unknown goal never stands out by an unseen token.
  std::optional<Atom> unknown_goal(const Theory& theory, const Closure& full) {
    std::set<std::string> subjects, predicates;
    auto note = [&](const Atom& a) {
      if (a.ground()) subjects.insert(a.subject.name());
      predicates.insert(a.predicate);
    };
    for (const Atom& f : theory.facts) note(f);
    for (const Rule& r : theory.rules) {
      for (const Atom& a : r.antecedents) note(a);
      note(r.consequent);
    }
    std::vector<Atom> candidates;
    for (const std::string& name : entities_) {
      if (!subjects.contains(name)) continue;
      for (const Template& t : templates_) {
        Atom a = t.at(Term::constant(name), Sign::Positive);
        if (!predicates.contains(a.predicate)) continue;
        if (!full.contains(a) && !full.contains(a.negated())) candidates.push_back(std::move(a));
      }
    }
    if (candidates.empty()) return std::nullopt;
    Atom goal = rng::pick(gen_, candidates);
    if (rng::chance(gen_, config_.negative_fact_prob)) goal.sign = Sign::Negative;
    return goal;
  }

  const GenConfig& config_;
  rng::Engine& gen_;
  std::vector<std::string> entities_;
  std::vector<Template> templates_;
  std::vector<Atom> facts_;
  std::vector<Rule> rules_;
};

std::vector<Label> label_schedule(const GenConfig& config) {
  // Largest-remainder apportionment of num_examples over the label mix.
  std::vector<std::pair<double, Label>> remainders;
  std::vector<Label> labels;
  int assigned = 0;
  for (Label l : kLabels) {
    auto it = config.label_mix.find(l);
    const double share = (it == config.label_mix.end() ? 0.0 : it->second) * config.num_examples;
    const int whole = static_cast<int>(std::floor(share));
    labels.insert(labels.end(), static_cast<std::size_t>(whole), l);
    assigned += whole;
    remainders.emplace_back(share - whole, l);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < config.num_examples; ++i, ++assigned) {
    labels.push_back(remainders[i % remainders.size()].second);
  }
  rng::Engine gen = rng::stream(config.seed, ~0ULL);
  rng::shuffle(gen, labels);
  return labels;
}

// Vocabulary of a dataset, split by role.
struct Vocabulary {
  std::vector<std::string> entities;
  std::vector<std::string> predicates;
  std::vector<std::string> objects;
};

void note(std::vector<std::string>& list, const std::string& token) {
  if (std::find(list.begin(), list.end(), token) == list.end()) list.push_back(token);
}

void collect(Vocabulary& v, const Atom& a) {
  if (!a.subject.is_variable()) note(v.entities, a.subject.name());
  note(v.predicates, a.predicate);
  if (a.object) note(v.objects, *a.object);
}

Vocabulary vocabulary_of(const Example& ex) {
  Vocabulary v;
  for (const Atom& f : ex.theory.facts) collect(v, f);
  for (const Rule& r : ex.theory.rules) {
    for (const Atom& a : r.antecedents) collect(v, a);
    collect(v, r.consequent);
  }
  collect(v, ex.goal);
  return v;
}

std::vector<std::string> novel_tokens(std::string_view suffix, bool capitalize, std::size_t count) {
  static const std::vector<std::string> kSyllables = {"bo", "da", "fi", "gu", "ke", "lo", "mi", "nu",
                                                      "pe", "ri", "tu", "va", "wo", "xe", "yu", "zo"};
  std::vector<std::string> out;
  for (std::size_t i = 0; out.size() < count; ++i) {
    std::string w = kSyllables[(i / kSyllables.size()) % kSyllables.size()] + kSyllables[i % kSyllables.size()];
    w += suffix;
    if (capitalize) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    out.push_back(std::move(w));
  }
  return out;
}

void check_pool(const std::vector<std::string>& pool, const std::set<std::string>& vocabulary, const char* role) {
  std::set<std::string> seen;
  for (const std::string& token : pool) {
    if (vocabulary.contains(token)) {
      throw PoolCollisionError(std::string(role) + " pool token '" + token + "' already occurs in the dataset");
    }
    if (!seen.insert(token).second) {
      throw PoolCollisionError(std::string(role) + " pool lists '" + token + "' twice");
    }
  }
}

std::vector<std::string> read_strings(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

}  // namespace

void GenConfig::validate() const {
  if (num_examples < 0) throw SchemaError("$.num_examples", "must be non-negative");
  if (depth < 0 || depth > 5) throw SchemaError("$.depth", "must lie in 0..5");
  check_range(entities, 1, "$.entities");
  if (entities.max > static_cast<int>(kNames.size())) throw SchemaError("$.entities", "at most 12 entities");
  check_range(facts, 0, "$.facts");
  check_range(rules, 0, "$.rules");
  check_range(antecedents, 1, "$.antecedents");
  if (antecedents.max > 3) throw SchemaError("$.antecedents", "at most 3 antecedents");
  if (predicate_pool < depth + 2 || predicate_pool > static_cast<int>(kAdjectives.size())) {
    throw SchemaError("$.predicate_pool", "must lie in depth+2.." + std::to_string(kAdjectives.size()));
  }
  for (auto [name, p] : {std::pair{"negative_fact_prob", negative_fact_prob},
                         std::pair{"negative_consequent_prob", negative_consequent_prob},
                         std::pair{"relational_prob", relational_prob}}) {
    if (!(p >= 0.0 && p <= 1.0)) throw SchemaError(std::string("$.") + name, "must lie in [0, 1]");
  }
  double total = 0.0;
  for (const auto& [label, share] : label_mix) {
    if (share < 0.0) throw SchemaError("$.label_mix." + std::string(to_string(label)), "negative fraction");
    total += share;
  }
  if (std::abs(total - 1.0) > 1e-9) throw SchemaError("$.label_mix", "fractions must sum to 1");
  if (max_attempts < 1) throw SchemaError("$.max_attempts", "must be positive");
}

GenConfig GenConfig::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  GenConfig c;
  for (const auto& [key, value] : j.items()) {
    const std::string path = "$." + key;
    if (key == "seed") {
      if (!value.is_number_unsigned()) throw SchemaError(path, "expected a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "num_examples") {
      c.num_examples = read_int(value, path);
    } else if (key == "depth") {
      c.depth = read_int(value, path);
    } else if (key == "entities") {
      c.entities = read_range(value, path);
    } else if (key == "predicate_pool") {
      c.predicate_pool = read_int(value, path);
    } else if (key == "facts") {
      c.facts = read_range(value, path);
    } else if (key == "rules") {
      c.rules = read_range(value, path);
    } else if (key == "antecedents") {
      c.antecedents = read_range(value, path);
    } else if (key == "negative_fact_prob") {
      c.negative_fact_prob = read_number(value, path);
    } else if (key == "negative_consequent_prob") {
      c.negative_consequent_prob = read_number(value, path);
    } else if (key == "relational_prob") {
      c.relational_prob = read_number(value, path);
    } else if (key == "label_mix") {
      if (!value.is_object()) throw SchemaError(path, "expected an object");
      c.label_mix.clear();
      for (const auto& [name, share] : value.items()) {
        try {
          c.label_mix[label_from_string(name)] = read_number(share, path + "." + name);
        } catch (const std::invalid_argument&) {
          throw SchemaError(path + "." + name, "unknown label");
        }
      }
    } else if (key == "max_attempts") {
      c.max_attempts = read_int(value, path);
    } else {
      throw SchemaError(path, "unknown field");
    }
  }
  c.validate();
  return c;
}

nlohmann::ordered_json GenConfig::to_json() const {
  auto range = [](const IntRange& r) { return nlohmann::ordered_json{{"min", r.min}, {"max", r.max}}; };
  nlohmann::ordered_json mix;
  for (Label l : kLabels) {
    auto it = label_mix.find(l);
    mix[std::string(to_string(l))] = it == label_mix.end() ? 0.0 : it->second;
  }
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["num_examples"] = num_examples;
  j["depth"] = depth;
  j["entities"] = range(entities);
  j["predicate_pool"] = predicate_pool;
  j["facts"] = range(facts);
  j["rules"] = range(rules);
  j["antecedents"] = range(antecedents);
  j["negative_fact_prob"] = negative_fact_prob;
  j["negative_consequent_prob"] = negative_consequent_prob;
  j["relational_prob"] = relational_prob;
  j["label_mix"] = std::move(mix);
  j["max_attempts"] = max_attempts;
  return j;
}

std::size_t decoy_count(const Theory& theory, const Atom& goal) {
  return static_cast<std::size_t>(std::count_if(theory.facts.begin(), theory.facts.end(), [&](const Atom& f) {
    return f.subject == goal.subject && f.predicate == goal.predicate && f.object != goal.object;
  }));
}

std::vector<Example> generate(const GenConfig& config) {
  config.validate();
  const std::vector<Label> labels = label_schedule(config);
  std::vector<Example> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    rng::Engine gen = rng::stream(config.seed, i);
    ExampleBuilder builder(config, gen);
    std::optional<Example> ex;
    for (int attempt = 0; attempt < config.max_attempts && !ex; ++attempt) ex = builder.attempt(labels[i]);
    if (!ex) {
      throw GenerationExhausted("could not build a " + std::string(to_string(labels[i])) + " example at depth " +
                                std::to_string(config.depth) + " within " + std::to_string(config.max_attempts) +
                                " attempts (example " + std::to_string(i) + ")");
    }
    ex->theory.metadata = json{{"dataset_depth", config.depth}, {"generator_seed", config.seed}, {"index", i}};
    out.push_back(std::move(*ex));
  }
  return out;
}

PerturbSpec PerturbSpec::tokens(std::uint64_t seed) {
  PerturbSpec s;
  s.mode = Mode::Tokens;
  s.seed = seed;
  return s;
}

PerturbSpec PerturbSpec::templates(std::string pack_id) {
  PerturbSpec s;
  s.mode = Mode::Templates;
  s.template_pack = std::move(pack_id);
  return s;
}

PerturbSpec PerturbSpec::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  PerturbSpec s;
  for (const auto& [key, value] : j.items()) {
    const std::string path = "$." + key;
    if (key == "mode") {
      const std::string mode = value.is_string() ? value.get<std::string>() : "";
      if (mode == "tokens") {
        s.mode = Mode::Tokens;
      } else if (mode == "templates") {
        s.mode = Mode::Templates;
      } else {
        throw SchemaError(path, "expected \"tokens\" or \"templates\"");
      }
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw SchemaError(path, "expected a non-negative integer");
      s.seed = value.get<std::uint64_t>();
    } else if (key == "entity_pool") {
      s.entity_pool = read_strings(value, path);
    } else if (key == "predicate_pool") {
      s.predicate_pool = read_strings(value, path);
    } else if (key == "object_pool") {
      s.object_pool = read_strings(value, path);
    } else if (key == "template_pack") {
      if (!value.is_string()) throw SchemaError(path, "expected a string");
      s.template_pack = value.get<std::string>();
    } else {
      throw SchemaError(path, "unknown field");
    }
  }
  return s;
}

nlohmann::ordered_json PerturbSpec::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = mode == Mode::Tokens ? "tokens" : "templates";
  j["seed"] = seed;
  j["entity_pool"] = entity_pool;
  j["predicate_pool"] = predicate_pool;
  j["object_pool"] = object_pool;
  j["template_pack"] = template_pack;
  return j;
}

std::vector<Example> perturb(const std::vector<Example>& dataset, const PerturbSpec& spec) {
  std::vector<Example> out;
  out.reserve(dataset.size());

  if (spec.mode == PerturbSpec::Mode::Templates) {
    const TemplatePack& pack = TemplatePack::by_id(spec.template_pack);
    for (const Example& ex : dataset) {
      Example copy = ex;
      copy.theory.metadata["template_pack"] = pack.id;
      const Theory seen = materialize(copy.theory);
      if (seen.facts != ex.theory.facts || seen.rules != ex.theory.rules) {
        throw std::runtime_error("theory does not round-trip through template pack " + pack.id);
      }
      out.push_back(std::move(copy));
    }
    return out;
  }

  Vocabulary all;
  std::vector<Vocabulary> per_example;
  for (const Example& ex : dataset) {
    per_example.push_back(vocabulary_of(ex));
    for (const auto& t : per_example.back().entities) note(all.entities, t);
    for (const auto& t : per_example.back().predicates) note(all.predicates, t);
    for (const auto& t : per_example.back().objects) note(all.objects, t);
  }
  std::set<std::string> vocabulary(all.entities.begin(), all.entities.end());
  vocabulary.insert(all.predicates.begin(), all.predicates.end());
  vocabulary.insert(all.objects.begin(), all.objects.end());

  auto pool_or_default = [](const std::vector<std::string>& given, std::string_view suffix, bool cap) {
    return given.empty() ? novel_tokens(suffix, cap, 256) : given;
  };
  const std::vector<std::string> entity_pool = pool_or_default(spec.entity_pool, "x", true);
  const std::vector<std::string> predicate_pool = pool_or_default(spec.predicate_pool, "p", false);
  const std::vector<std::string> object_pool = pool_or_default(spec.object_pool, "m", false);
  check_pool(entity_pool, vocabulary, "entity");
  check_pool(predicate_pool, vocabulary, "predicate");
  check_pool(object_pool, vocabulary, "object");
  for (const auto* pool : {&entity_pool, &predicate_pool, &object_pool}) {
    for (const auto* other : {&entity_pool, &predicate_pool, &object_pool}) {
      if (pool == other) continue;
      for (const std::string& t : *pool) {
        if (std::find(other->begin(), other->end(), t) != other->end()) {
          throw PoolCollisionError("token '" + t + "' appears in two pools");
        }
      }
    }
  }

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Vocabulary& v = per_example[i];
    rng::Engine gen = rng::stream(spec.seed, i);
    std::map<std::string, std::string> entity_map, predicate_map, object_map;
    auto assign = [&](const std::vector<std::string>& from, std::vector<std::string> pool,
                      std::map<std::string, std::string>& into, const char* role) {
      if (pool.size() < from.size()) {
        throw PoolCollisionError(std::string(role) + " pool too small: need " + std::to_string(from.size()));
      }
      rng::shuffle(gen, pool);
      for (std::size_t k = 0; k < from.size(); ++k) into[from[k]] = pool[k];
    };
    assign(v.entities, entity_pool, entity_map, "entity");
    assign(v.predicates, predicate_pool, predicate_map, "predicate");
    assign(v.objects, object_pool, object_map, "object");

    auto rename = [&](const Atom& a) {
      Atom b = a;
      if (!a.subject.is_variable()) b.subject = Term::constant(entity_map.at(a.subject.name()));
      b.predicate = predicate_map.at(a.predicate);
      if (a.object) b.object = object_map.at(*a.object);
      return b;
    };
    Example copy = dataset[i];
    for (Atom& f : copy.theory.facts) f = rename(f);
    for (Rule& r : copy.theory.rules) {
      for (Atom& a : r.antecedents) a = rename(a);
      r.consequent = rename(r.consequent);
    }
    copy.goal = rename(copy.goal);
    copy.theory.metadata["perturbation"] = json{{"mode", "tokens"}, {"seed", spec.seed}};
    out.push_back(std::move(copy));
  }
  return out;
}

Theory materialize(const Theory& theory) {
  Theory out = theory;
  auto it = theory.metadata.find("template_pack");
  if (it == theory.metadata.end() || !it->is_string()) return out;
  const TemplatePack& pack = TemplatePack::by_id(it->get<std::string>());
  for (Atom& f : out.facts) f = parse_fact(render_text(f, pack), pack);
  for (Rule& r : out.rules) r = parse_rule(render_text(r, pack), r.id, pack);
  return out;
}

}  // namespace backchain
