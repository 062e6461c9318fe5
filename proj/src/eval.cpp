#include "backchain/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "backchain/errors.hpp"
#include "backchain/generator.hpp"
#include "backchain/lm/client.hpp"
#include "backchain/rng.hpp"
#include "backchain/serialize.hpp"
#include "backchain/symbolic.hpp"
#include "backchain/trace_io.hpp"

namespace backchain {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 5> kViolationNames = {"missing-evidence", "wrong-rule", "bad-decomposition",
                                                             "wrong-sign", "unsupported-label"};

std::size_t label_index(Label l) { return static_cast<std::size_t>(l); }

// ----- validator -------------------------------------------------------------

struct Reject {
  Violation violation;
  std::string where;
  std::string detail;
};

class TraceChecker {
 public:
  explicit TraceChecker(const Theory& theory) : theory_(theory) {}

  Verdict run(const json& trace) {
    const json& root = trace.at("root");
    collect(root, "$.root");
    // Supported (goal, outcome) pairs grow until no further node can be
    // justified; cache-hit nodes lean on this set.
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& [node, path] : decided_) {
        const std::string k = key(*node);
        if (supported_.contains(k)) continue;
        if (!check(*node, path)) {
          supported_.insert(k);
          changed = true;
        }
      }
    }
    const std::string outcome = root.at("outcome").get<std::string>();
    if (outcome != "proved" && outcome != "disproved") return Verdict::accept();
    if (auto r = support(root, "$.root")) return Verdict{false, r->violation, r->where, r->detail};
    return Verdict::accept();
  }

 private:
  static Atom goal_of(const json& node, const std::string& path) {
    return atom_from_json(node.at("goal"), path + ".goal", true);
  }

  static std::string key(const json& node) { return node.at("goal").dump() + "|" + node.at("outcome").get<std::string>(); }

  void collect(const json& node, const std::string& path) {
    const std::string outcome = node.at("outcome").get<std::string>();
    if ((outcome == "proved" || outcome == "disproved") && !node.at("cache_hit").get<bool>()) {
      decided_.emplace_back(&node, path);
    }
    const json& branches = node.at("branches");
    for (std::size_t b = 0; b < branches.size(); ++b) {
      const json& children = branches[b].at("children");
      for (std::size_t c = 0; c < children.size(); ++c) {
        collect(children[c], path + ".branches[" + std::to_string(b) + "].children[" + std::to_string(c) + "]");
      }
    }
  }

  // A node claiming a decided outcome, possibly answered from the cache.
  std::optional<Reject> support(const json& node, const std::string& path) {
    if (node.at("cache_hit").get<bool>()) {
      if (supported_.contains(key(node))) return std::nullopt;
      return Reject{Violation::UnsupportedLabel, path, "cached outcome has no supported derivation in the trace"};
    }
    return check(node, path);
  }

  static bool unifies(const Atom& consequent, const Atom& goal) {
    return consequent.predicate == goal.predicate && consequent.object == goal.object &&
           (consequent.subject.is_variable() || consequent.subject == goal.subject);
  }

  std::optional<Reject> check(const json& node, const std::string& path) {
    const Atom goal = goal_of(node, path);
    const std::string outcome = node.at("outcome").get<std::string>();
    const bool proved = outcome == "proved";
    if (!proved && outcome != "disproved") return Reject{Violation::UnsupportedLabel, path, "outcome is not decided"};

    const json& calls = node.at("module_calls");
    for (std::size_t i = 0; i < calls.size(); ++i) {
      const json& call = calls[i];
      if (call.at("module") != "fact_check" || call.at("label") == "unknown") continue;
      const std::string cpath = path + ".module_calls[" + std::to_string(i) + "]";
      if (call.at("label") != outcome) return Reject{Violation::UnsupportedLabel, cpath, "fact check disagrees with outcome"};
      const json& evidence = call.at("evidence");
      if (!evidence.is_number_unsigned() || evidence.get<std::size_t>() >= theory_.facts.size()) {
        return Reject{Violation::MissingEvidence, cpath, "evidence " + evidence.dump() + " is not a fact of the theory"};
      }
      const Atom& fact = theory_.facts[evidence.get<std::size_t>()];
      if (fact != (proved ? goal : goal.negated())) {
        return Reject{Violation::MissingEvidence, cpath,
                      "fact " + debug_string(fact) + " does not " + (proved ? "entail " : "contradict ") +
                          debug_string(goal)};
      }
      return std::nullopt;
    }

    const json& branches = node.at("branches");
    std::optional<std::size_t> deciding;
    for (std::size_t b = 0; b < branches.size(); ++b) {
      if (!branches[b].at("sign_agrees").is_null()) deciding = b;
    }
    if (!deciding) return Reject{Violation::UnsupportedLabel, path, "no fact or rule supports the outcome"};

    const json& branch = branches[*deciding];
    const std::string bpath = path + ".branches[" + std::to_string(*deciding) + "]";
    const std::string rule_id = branch.at("rule_id").get<std::string>();
    const Rule* rule = theory_.find_rule(rule_id);
    if (!rule) return Reject{Violation::WrongRule, bpath, "rule " + rule_id + " is not in the theory"};
    if (!unifies(rule->consequent, goal)) {
      return Reject{Violation::WrongRule, bpath, "rule " + rule_id + " does not conclude " + debug_string(goal)};
    }

    std::vector<Atom> expected;
    for (const Atom& a : rule->antecedents) expected.push_back(a.subject.is_variable() ? a.with_subject(goal.subject) : a);
    const json& subgoals = branch.at("subgoals");
    std::vector<Atom> claimed;
    for (std::size_t i = 0; i < subgoals.size(); ++i) {
      claimed.push_back(atom_from_json(subgoals[i], bpath + ".subgoals[" + std::to_string(i) + "]", true));
    }
    if (claimed != expected) {
      return Reject{Violation::BadDecomposition, bpath, "sub-goals differ from the substituted antecedents of " + rule_id};
    }

    const json& children = branch.at("children");
    if (children.size() != claimed.size()) {
      return Reject{Violation::UnsupportedLabel, bpath, "not every sub-goal was established"};
    }
    for (std::size_t c = 0; c < children.size(); ++c) {
      const std::string cpath = bpath + ".children[" + std::to_string(c) + "]";
      if (goal_of(children[c], cpath) != claimed[c]) {
        return Reject{Violation::BadDecomposition, cpath, "child goal differs from its sub-goal"};
      }
      if (children[c].at("outcome") != "proved") {
        return Reject{Violation::UnsupportedLabel, cpath, "sub-goal is not proved"};
      }
      if (auto r = support(children[c], cpath)) return r;
    }

    const bool agrees = rule->consequent.sign == goal.sign;
    if (branch.at("sign_agrees").get<bool>() != agrees) {
      return Reject{Violation::WrongSign, bpath, std::string("signs ") + (agrees ? "agree" : "disagree") +
                                                     " but the trace says otherwise"};
    }
    if (agrees != proved) return Reject{Violation::UnsupportedLabel, path, "outcome contradicts the sign decision"};
    return std::nullopt;
  }

  const Theory& theory_;
  std::vector<std::pair<const json*, std::string>> decided_;
  std::set<std::string> supported_;
};

// ----- helpers ----------------------------------------------------------------

int example_depth(const Example& ex, int fallback) {
  auto it = ex.theory.metadata.find("dataset_depth");
  if (it != ex.theory.metadata.end() && it->is_number_integer()) return it->get<int>();
  if (ex.gold_depth) return *ex.gold_depth;
  return fallback;
}

template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

Label collapse(Label l, ScoringMode mode) {
  return mode == ScoringMode::Binary && l == Label::Unknown ? Label::Disproved : l;
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

ExampleOutcome run_one(const Example& ex, const ReasoningBackend* backend, const EvalConfig& config) {
  ExampleOutcome out;
  out.gold = ex.gold_label;
  out.partition = partition_of(ex);
  const auto start = std::chrono::steady_clock::now();
  try {
    const Theory theory = materialize(ex.theory);
    switch (config.prover) {
      case ProverKind::Lambada: {
        if (!backend) throw std::invalid_argument("the lambada prover needs a backend");
        auto instance = backend->fork();
        const ProofResult r = BackwardChainer(config.engine).prove({theory, ex.goal, config.engine.max_depth}, *instance);
        out.predicted = r.label;
        out.calls = r.trace.stats;
        if (config.validate_traces && r.label != Label::Unknown) {
          out.verdict = validate_trace(theory, json::parse(trace_to_json(r.trace).dump()));
        }
        if (config.keep_traces) out.trace = r.trace;
        break;
      }
      case ProverKind::Si: {
        const int steps = config.si_max_steps > 0 ? config.si_max_steps : example_depth(ex, config.engine.max_depth) + 1;
        SiResult r = si_prove(theory, ex.goal, steps, config.si_policy);
        out.predicted = r.label;
        out.si_calls = r.stats.module_calls;
        out.si = std::move(r.stats);
        break;
      }
      case ProverKind::Closure:
        out.predicted = oracle_label(theory, ex.goal);
        break;
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    out.predicted = Label::Unknown;
  }
  out.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

SiPolicy policy_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("$.si_policy", "expected an object");
  SiPolicy p;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      if (value == "deterministic") {
        p.kind = SiPolicy::Kind::Deterministic;
      } else if (value == "noisy") {
        p.kind = SiPolicy::Kind::Noisy;
      } else {
        throw SchemaError("$.si_policy.kind", "expected deterministic or noisy");
      }
    } else if (key == "seed") {
      p.seed = value.get<std::uint64_t>();
    } else if (key == "epsilon") {
      p.epsilon = value.get<double>();
    } else {
      throw SchemaError("$.si_policy." + key, "unknown field");
    }
  }
  if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0)) throw SchemaError("$.si_policy.epsilon", "must lie in [0, 1]");
  return p;
}

}  // namespace

std::string_view to_string(Violation v) noexcept { return kViolationNames[static_cast<std::size_t>(v)]; }

std::string_view to_string(ProverKind p) noexcept {
  switch (p) {
    case ProverKind::Lambada:
      return "lambada";
    case ProverKind::Si:
      return "si";
    case ProverKind::Closure:
      return "closure";
  }
  return "?";
}

Verdict validate_trace(const Theory& theory, const json& trace) {
  try {
    return TraceChecker(theory).run(trace);
  } catch (const std::exception& e) {
    return Verdict{false, Violation::UnsupportedLabel, "$", std::string("malformed trace: ") + e.what()};
  }
}

std::string partition_of(const Example& example) {
  auto it = example.theory.metadata.find("dataset_depth");
  if (it != example.theory.metadata.end() && it->is_number_integer()) return std::to_string(it->get<int>());
  if (example.gold_depth) return std::to_string(*example.gold_depth);
  return "unknown";
}

EvalConfig EvalConfig::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  EvalConfig c;
  for (const auto& [key, value] : j.items()) {
    const std::string path = "$." + key;
    if (key == "prover") {
      if (value == "lambada") {
        c.prover = ProverKind::Lambada;
      } else if (value == "si") {
        c.prover = ProverKind::Si;
      } else if (value == "closure") {
        c.prover = ProverKind::Closure;
      } else {
        throw SchemaError(path, "expected lambada, si or closure");
      }
    } else if (key == "engine") {
      c.engine = EngineConfig::from_json(value);
    } else if (key == "mode") {
      if (value == "tri_state") {
        c.mode = ScoringMode::TriState;
      } else if (value == "binary") {
        c.mode = ScoringMode::Binary;
      } else {
        throw SchemaError(path, "expected tri_state or binary");
      }
    } else if (key == "workers") {
      c.workers = value.get<int>();
    } else if (key == "si_max_steps") {
      c.si_max_steps = value.get<int>();
    } else if (key == "si_policy") {
      c.si_policy = policy_from_json(value);
    } else if (key == "validate_traces") {
      c.validate_traces = value.get<bool>();
    } else if (key == "keep_traces") {
      c.keep_traces = value.get<bool>();
    } else if (key == "thresholds") {
      if (!value.is_object()) throw SchemaError(path, "expected an object");
      for (const auto& [name, v] : value.items()) {
        if (name != "accuracy" && name != "trace_validity") throw SchemaError(path + "." + name, "unknown threshold");
        c.thresholds[name] = v.get<double>();
      }
    } else {
      throw SchemaError(path, "unknown field");
    }
  }
  if (c.workers < 1) throw SchemaError("$.workers", "must be positive");
  if (c.si_max_steps < 0) throw SchemaError("$.si_max_steps", "must be non-negative");
  return c;
}

ordered_json EvalConfig::to_json() const {
  ordered_json j;
  j["prover"] = std::string(to_string(prover));
  j["engine"] = ordered_json::parse(engine.to_json().dump());
  j["mode"] = mode == ScoringMode::TriState ? "tri_state" : "binary";
  j["workers"] = workers;
  j["si_max_steps"] = si_max_steps;
  j["si_policy"] = {{"kind", si_policy.kind == SiPolicy::Kind::Noisy ? "noisy" : "deterministic"},
                    {"seed", si_policy.seed},
                    {"epsilon", si_policy.epsilon}};
  j["validate_traces"] = validate_traces;
  j["keep_traces"] = keep_traces;
  ordered_json t = ordered_json::object();
  for (const auto& [k, v] : thresholds) t[k] = v;
  j["thresholds"] = std::move(t);
  return j;
}

std::string EvalConfig::hash() const {
  // Worker count does not change results.
  ordered_json j = to_json();
  j.erase("workers");
  return lm::sha256_hex(j.dump());
}

Distribution Distribution::of(std::vector<double> values) {
  Distribution d;
  if (values.empty()) return d;
  std::sort(values.begin(), values.end());
  d.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  d.p50 = percentile(values, 0.5);
  d.p90 = percentile(values, 0.9);
  d.max = values.back();
  return d;
}

ordered_json Distribution::to_json() const { return {{"mean", mean}, {"p50", p50}, {"p90", p90}, {"max", max}}; }

EvalReport evaluate(const std::vector<Example>& dataset, const ReasoningBackend* backend, const EvalConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  report.prover = std::string(to_string(config.prover));
  report.mode = config.mode == ScoringMode::TriState ? "tri_state" : "binary";
  report.config_hash = config.hash();
  report.outcomes.resize(dataset.size());
  parallel_for(dataset.size(), config.workers,
               [&](std::size_t i) { report.outcomes[i] = run_one(dataset[i], backend, config); });

  std::array<std::vector<double>, kModuleKinds> fresh, hits;
  std::vector<double> lm, total_fresh;
  for (const ExampleOutcome& o : report.outcomes) {
    const Label gold = collapse(o.gold, config.mode);
    const Label predicted = collapse(o.predicted, config.mode);
    const bool right = gold == predicted;
    ++report.total;
    report.correct += right;
    report.errors += o.error.has_value();
    auto& cell = report.per_depth[o.partition];
    ++cell.total;
    cell.correct += right;
    ++report.confusion[label_index(gold)][label_index(predicted)];
    if (config.prover == ProverKind::Lambada) {
      for (std::size_t k = 0; k < kModuleKinds; ++k) {
        fresh[k].push_back(static_cast<double>(o.calls.fresh[k]));
        hits[k].push_back(static_cast<double>(o.calls.cache_hits[k]));
      }
      lm.push_back(static_cast<double>(o.calls.lm_calls));
      total_fresh.push_back(static_cast<double>(o.calls.total_fresh()));
    } else if (config.prover == ProverKind::Si) {
      lm.push_back(static_cast<double>(o.si_calls));
    }
    if (o.verdict) {
      ++report.traces_checked;
      if (o.verdict->accepted) {
        ++report.traces_accepted;
      } else {
        ++report.violations[std::string(to_string(o.verdict->violation))];
        if (right) ++report.correct_label_invalid_trace;
      }
    }
  }
  for (std::size_t k = 0; k < kModuleKinds; ++k) {
    report.fresh_calls[k] = Distribution::of(std::move(fresh[k]));
    report.cache_hit_calls[k] = Distribution::of(std::move(hits[k]));
  }
  report.lm_calls = Distribution::of(std::move(lm));
  report.total_fresh = Distribution::of(std::move(total_fresh));

  for (const auto& [name, minimum] : config.thresholds) {
    const double value = name == "accuracy" ? report.accuracy() : report.trace_validity();
    if (value < minimum) {
      std::ostringstream msg;
      msg << name << " " << value << " below threshold " << minimum;
      report.threshold_violations.push_back(msg.str());
    }
  }
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ordered_json EvalReport::to_json(bool include_wall_clock) const {
  ordered_json j;
  j["schema"] = std::string(kReportSchemaVersion);
  j["prover"] = prover;
  j["mode"] = mode;
  j["config_hash"] = config_hash;
  j["examples"] = total;
  j["correct"] = correct;
  j["accuracy"] = accuracy();
  j["errors"] = errors;
  ordered_json depth = ordered_json::object();
  for (const auto& [k, cell] : per_depth) {
    depth[k] = {{"correct", cell.correct}, {"total", cell.total}, {"accuracy", cell.accuracy()}};
  }
  j["per_depth"] = std::move(depth);
  j["confusion"] = {{"labels", {"proved", "disproved", "unknown"}}, {"rows", "gold"}, {"matrix", confusion}};
  if (prover == "lambada") {
    ordered_json f, h;
    for (std::size_t k = 0; k < kModuleKinds; ++k) {
      const std::string name(to_string(static_cast<ModuleKind>(k)));
      f[name] = fresh_calls[k].to_json();
      h[name] = cache_hit_calls[k].to_json();
    }
    j["module_calls"] = {{"fresh", std::move(f)}, {"cache_hits", std::move(h)}, {"lm_calls", lm_calls.to_json()},
                         {"total_fresh", total_fresh.to_json()}};
  } else if (prover == "si") {
    j["module_calls"] = {{"lm_calls", lm_calls.to_json()}};
  } else {
    j["module_calls"] = nullptr;
  }
  ordered_json v = ordered_json::object();
  for (const auto& [k, n] : violations) v[k] = n;
  j["trace_validity"] = {{"checked", traces_checked},
                         {"accepted", traces_accepted},
                         {"rate", trace_validity()},
                         {"correct_label_invalid_trace", correct_label_invalid_trace},
                         {"violations", std::move(v)}};
  j["threshold_violations"] = threshold_violations;
  ordered_json failures = ordered_json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].error) failures.push_back({{"index", i}, {"error", *outcomes[i].error}});
  }
  j["failures"] = std::move(failures);
  if (include_wall_clock) {
    j["wall_clock"] = {{"total_ms", wall_ms}, {"mean_ms", total ? wall_ms / static_cast<double>(total) : 0.0}};
  }
  return j;
}

std::string EvalReport::confusion_csv() const {
  static constexpr const char* kNames[] = {"proved", "disproved", "unknown"};
  std::ostringstream out;
  out << "gold,proved,disproved,unknown\n";
  for (std::size_t g = 0; g < 3; ++g) {
    out << kNames[g];
    for (std::size_t p = 0; p < 3; ++p) out << "," << confusion[g][p];
    out << "\n";
  }
  return out.str();
}

// ----- comparison -------------------------------------------------------------

TrendTest cochran_armitage_decreasing(const std::vector<std::size_t>& successes, const std::vector<std::size_t>& totals) {
  if (successes.size() != totals.size()) throw std::invalid_argument("successes and totals differ in length");
  double n = 0, x = 0, snt = 0, snt2 = 0;
  for (std::size_t k = 0; k < totals.size(); ++k) {
    const double t = static_cast<double>(k + 1);
    n += static_cast<double>(totals[k]);
    x += static_cast<double>(successes[k]);
    snt += static_cast<double>(totals[k]) * t;
    snt2 += static_cast<double>(totals[k]) * t * t;
  }
  TrendTest out;
  if (n == 0) return out;
  const double p = x / n;
  double stat = 0;
  for (std::size_t k = 0; k < totals.size(); ++k) {
    stat += static_cast<double>(k + 1) * (static_cast<double>(successes[k]) - static_cast<double>(totals[k]) * p);
  }
  const double var = p * (1 - p) * (snt2 - snt * snt / n);
  if (var <= 0) return out;
  out.z = stat / std::sqrt(var);
  out.p_value = 0.5 * std::erfc(-out.z / std::sqrt(2.0));  // P(Z <= z)
  return out;
}

CompareConfig CompareConfig::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  CompareConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "engine") {
      c.engine = EngineConfig::from_json(value);
    } else if (key == "si_max_steps") {
      c.si_max_steps = value.get<int>();
    } else if (key == "noisy_epsilon") {
      c.noisy_epsilon = value.get<double>();
    } else if (key == "noisy_runs") {
      c.noisy_runs = value.get<int>();
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "include_closure") {
      c.include_closure = value.get<bool>();
    } else if (key == "workers") {
      c.workers = value.get<int>();
    } else {
      throw SchemaError("$." + key, "unknown field");
    }
  }
  if (c.si_max_steps < 0) throw SchemaError("$.si_max_steps", "must be non-negative");
  if (c.noisy_runs < 0) throw SchemaError("$.noisy_runs", "must be non-negative");
  if (!(c.noisy_epsilon >= 0.0 && c.noisy_epsilon <= 1.0)) throw SchemaError("$.noisy_epsilon", "must lie in [0, 1]");
  if (c.workers < 1) throw SchemaError("$.workers", "must be positive");
  return c;
}

ordered_json CompareConfig::to_json() const {
  ordered_json j;
  j["engine"] = ordered_json::parse(engine.to_json().dump());
  j["si_max_steps"] = si_max_steps;
  j["noisy_epsilon"] = noisy_epsilon;
  j["noisy_runs"] = noisy_runs;
  j["seed"] = seed;
  j["include_closure"] = include_closure;
  j["workers"] = workers;
  return j;
}

ComparisonReport compare_strategies(const std::vector<Example>& dataset, const CompareConfig& config) {
  struct Row {
    std::string partition;
    bool decided = false;
    std::uint64_t lambada_calls = 0;
    std::uint64_t si_calls = 0;
    bool lambada_right = false;
    bool si_right = false;
    bool closure_right = false;
    std::vector<ForwardRunStats> noisy;
  };
  std::vector<Row> rows(dataset.size());
  parallel_for(dataset.size(), config.workers, [&](std::size_t i) {
    const Example& ex = dataset[i];
    const Theory theory = materialize(ex.theory);
    Row& row = rows[i];
    row.partition = partition_of(ex);
    row.decided = ex.gold_label != Label::Unknown;

    SymbolicBackend backend;
    const ProofResult lam = BackwardChainer(config.engine).prove({theory, ex.goal, config.engine.max_depth}, backend);
    row.lambada_calls = lam.trace.stats.lm_calls;
    row.lambada_right = lam.label == ex.gold_label;

    const int steps = config.si_max_steps > 0 ? config.si_max_steps : example_depth(ex, config.engine.max_depth) + 1;
    const SiResult si = si_prove(theory, ex.goal, steps, SiPolicy::deterministic());
    row.si_calls = si.stats.module_calls;
    row.si_right = si.label == ex.gold_label;
    if (config.include_closure) row.closure_right = oracle_label(theory, ex.goal) == ex.gold_label;

    if (row.decided) {
      for (int r = 0; r < config.noisy_runs; ++r) {
        rng::Engine seeder = rng::stream(config.seed, i * 1000003ULL + static_cast<std::uint64_t>(r));
        row.noisy.push_back(si_prove(theory, ex.goal, steps, SiPolicy::noisy(seeder(), config.noisy_epsilon)).stats);
      }
    }
  });

  ComparisonReport report;
  std::map<std::string, std::array<double, 2>> sums;
  std::map<std::string, std::array<std::size_t, 3>> right;
  for (const Row& row : rows) {
    auto& p = report.partitions[row.partition];
    ++p.examples;
    p.decided += row.decided;
    sums[row.partition][0] += static_cast<double>(row.lambada_calls);
    sums[row.partition][1] += static_cast<double>(row.si_calls);
    right[row.partition][0] += row.lambada_right;
    right[row.partition][1] += row.si_right;
    right[row.partition][2] += row.closure_right;
    for (const ForwardRunStats& s : row.noisy) {
      ++p.noisy_runs;
      ++p.unique_histogram[s.unique_inferences];
      if (s.unique_inferences < s.inferences.size()) ++p.runs_with_duplicates;
      if (p.on_path.size() < s.on_path.size()) {
        p.on_path.resize(s.on_path.size());
        p.at_step.resize(s.on_path.size());
      }
      for (std::size_t k = 0; k < s.on_path.size(); ++k) {
        ++p.at_step[k];
        p.on_path[k] += s.on_path[k];
      }
    }
  }
  for (auto& [name, p] : report.partitions) {
    const double n = static_cast<double>(p.examples);
    p.lambada_mean_calls = sums[name][0] / n;
    p.si_mean_calls = sums[name][1] / n;
    p.lambada_accuracy = static_cast<double>(right[name][0]) / n;
    p.si_accuracy = static_cast<double>(right[name][1]) / n;
    if (config.include_closure) p.closure_accuracy = static_cast<double>(right[name][2]) / n;
    if (!p.at_step.empty()) p.trend = cochran_armitage_decreasing(p.on_path, p.at_step);
  }
  return report;
}

ordered_json ComparisonReport::to_json() const {
  ordered_json j;
  j["schema"] = "comparison/1";
  ordered_json parts = ordered_json::object();
  for (const auto& [name, p] : partitions) {
    ordered_json e;
    e["examples"] = p.examples;
    e["decided"] = p.decided;
    e["calls"] = {{"lambada_mean", p.lambada_mean_calls},
                  {"si_mean", p.si_mean_calls},
                  {"si_over_lambada", p.si_over_lambada()}};
    ordered_json acc = {{"lambada", p.lambada_accuracy}, {"si", p.si_accuracy}};
    if (p.closure_accuracy) acc["closure"] = *p.closure_accuracy;
    e["accuracy"] = std::move(acc);
    ordered_json hist = ordered_json::object();
    for (const auto& [u, count] : p.unique_histogram) hist[std::to_string(u)] = count;
    std::vector<double> rates;
    for (std::size_t k = 0; k < p.at_step.size(); ++k) {
      rates.push_back(p.at_step[k] ? static_cast<double>(p.on_path[k]) / static_cast<double>(p.at_step[k]) : 0.0);
    }
    e["noisy_si"] = {{"runs", p.noisy_runs},
                     {"runs_with_duplicates", p.runs_with_duplicates},
                     {"unique_inference_histogram", std::move(hist)},
                     {"on_path_rate_by_step", rates},
                     {"trend", {{"z", p.trend.z}, {"p_value", p.trend.p_value}}}};
    parts[name] = std::move(e);
  }
  j["partitions"] = std::move(parts);
  return j;
}

}  // namespace backchain
