#include "backchain/engine.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

#include "backchain/errors.hpp"

namespace backchain {

std::string_view to_string(ModuleKind kind) noexcept {
  switch (kind) {
    case ModuleKind::FactCheck:
      return "fact_check";
    case ModuleKind::RuleSelection:
      return "rule_selection";
    case ModuleKind::GoalDecomposition:
      return "goal_decomposition";
    case ModuleKind::SignAgreement:
      return "sign_agreement";
  }
  return "fact_check";
}

ModuleKind module_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kModuleKinds; ++i) {
    auto kind = static_cast<ModuleKind>(i);
    if (to_string(kind) == text) return kind;
  }
  throw std::invalid_argument("unknown module kind '" + std::string(text) + "'");
}

std::string_view to_string(Outcome outcome) noexcept {
  switch (outcome) {
    case Outcome::Proved:
      return "proved";
    case Outcome::Disproved:
      return "disproved";
    case Outcome::Unknown:
      return "unknown";
    case Outcome::CycleCut:
      return "cycle_cut";
    case Outcome::DepthCut:
      return "depth_cut";
  }
  return "unknown";
}

Outcome outcome_from_string(std::string_view text) {
  for (auto o : {Outcome::Proved, Outcome::Disproved, Outcome::Unknown, Outcome::CycleCut, Outcome::DepthCut}) {
    if (to_string(o) == text) return o;
  }
  throw std::invalid_argument("unknown outcome '" + std::string(text) + "'");
}

Label label_of(Outcome outcome) noexcept {
  if (outcome == Outcome::Proved) return Label::Proved;
  if (outcome == Outcome::Disproved) return Label::Disproved;
  return Label::Unknown;
}

namespace {

Outcome outcome_of(Label label) {
  switch (label) {
    case Label::Proved:
      return Outcome::Proved;
    case Label::Disproved:
      return Outcome::Disproved;
    case Label::Unknown:
      return Outcome::Unknown;
  }
  return Outcome::Unknown;
}

}  // namespace

std::uint64_t ModuleCallStats::total_fresh() const noexcept {
  std::uint64_t sum = 0;
  for (auto v : fresh) sum += v;
  return sum;
}

std::uint64_t ModuleCallStats::total_cache_hits() const noexcept {
  std::uint64_t sum = proof_cache_hits;
  for (auto v : cache_hits) sum += v;
  return sum;
}

ModuleCallStats& ModuleCallStats::operator+=(const ModuleCallStats& other) noexcept {
  for (std::size_t i = 0; i < kModuleKinds; ++i) {
    fresh[i] += other.fresh[i];
    cache_hits[i] += other.cache_hits[i];
  }
  proof_cache_hits += other.proof_cache_hits;
  lm_calls += other.lm_calls;
  return *this;
}

bool operator==(const RuleBranch& a, const RuleBranch& b) {
  return a.rule_id == b.rule_id && a.subgoals == b.subgoals && a.children == b.children &&
         a.sign_agrees == b.sign_agrees;
}

std::size_t TraceNode::subtree_size() const noexcept {
  std::size_t n = 1;
  for (const RuleBranch& b : branches) {
    for (const TraceNode& c : b.children) n += c.subtree_size();
  }
  return n;
}

EngineConfig EngineConfig::from_json(const nlohmann::json& j) {
  EngineConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "max_depth") {
      c.max_depth = value.get<int>();
    } else if (key == "caching") {
      c.caching = value.get<bool>();
    } else if (key == "cycle_check") {
      c.cycle_check = value.get<bool>();
    } else {
      throw SchemaError("$." + key, "unknown engine option");
    }
  }
  if (c.max_depth < 0 || c.max_depth > kGlobalMaxDepth) {
    throw SchemaError("$.max_depth", "must be within 0.." + std::to_string(kGlobalMaxDepth));
  }
  return c;
}

nlohmann::json EngineConfig::to_json() const {
  return {{"max_depth", max_depth}, {"caching", caching}, {"cycle_check", cycle_check}};
}

std::optional<Label> ProofCache::lookup(const Atom& goal, int depth) const {
  auto it = entries_.find(goal);
  if (it == entries_.end()) return std::nullopt;
  const Slot& slot = it->second;
  if (slot.decided_depth && *slot.decided_depth <= depth) return slot.decided;
  if (slot.unknown_depth && *slot.unknown_depth >= depth) return Label::Unknown;
  return std::nullopt;
}

void ProofCache::store(const Entry& entry) {
  Slot& slot = entries_[entry.goal];
  if (entry.label == Label::Unknown) {
    if (!slot.unknown_depth || *slot.unknown_depth < entry.depth) slot.unknown_depth = entry.depth;
  } else if (!slot.decided_depth || *slot.decided_depth > entry.depth) {
    slot.decided_depth = entry.depth;
    slot.decided = entry.label;
  }
}

bool cycle_check(const Atom& goal, std::span<const Atom> path) {
  return std::find(path.begin(), path.end(), goal) != path.end();
}

std::vector<Rule> rerank(std::vector<Rule> rules) {
  std::stable_sort(rules.begin(), rules.end(),
                   [](const Rule& a, const Rule& b) { return a.antecedents.size() < b.antecedents.size(); });
  return rules;
}

namespace {

constexpr std::size_t kNoCut = std::numeric_limits<std::size_t>::max();

struct Evaluation {
  Label label;
  // Smallest open-path index that a cycle cut inside the subtree pointed at,
  // restricted to indices above the subtree root. kNoCut when the result does
  // not depend on the path that led here.
  std::size_t external_cut;
};

class Session {
 public:
  Session(const EngineConfig& config, const Theory& theory, ReasoningBackend& backend, ProofTrace& trace)
      : config_(config), theory_(theory), backend_(backend), trace_(trace) {}

  Evaluation solve(const Atom& goal, int depth, TraceNode& node) {
    node.goal = goal;
    node.depth = depth;
    if (config_.caching) {
      if (auto hit = proof_cache_.lookup(goal, depth)) {
        node.cache_hit = true;
        node.outcome = outcome_of(*hit);
        ++trace_.stats.proof_cache_hits;
        return {*hit, kNoCut};
      }
    }

    const std::size_t index = path_.size();
    path_.push_back(goal);
    struct PopGuard {
      std::vector<Atom>& path;
      ~PopGuard() { path.pop_back(); }
    } guard{path_};

    const ModuleResult fact = fact_check(goal, node);
    if (fact.label != Label::Unknown) {
      return finish(node, fact.label, depth, kNoCut);
    }
    if (depth == 0) {
      node.outcome = Outcome::DepthCut;
      if (config_.caching) proof_cache_.store({goal, Label::Unknown, depth});
      return {Label::Unknown, kNoCut};
    }

    std::vector<Rule> candidates;
    for (const std::string& id : rule_selection(goal, node)) {
      const Rule* rule = theory_.find_rule(id);
      if (!rule) throw BackendError("rule selection returned unknown rule id '" + id + "'");
      candidates.push_back(*rule);
    }

    std::size_t cut = kNoCut;
    for (const Rule& rule : rerank(std::move(candidates))) {
      std::vector<Atom> subgoals = goal_decomposition(rule, goal, node);
      RuleBranch& branch = node.branches.emplace_back();
      branch.rule_id = rule.id;
      branch.subgoals = subgoals;

      bool all_proved = true;
      for (const Atom& sub : subgoals) {
        TraceNode& child = branch.children.emplace_back();
        if (config_.cycle_check && cycle_check(sub, path_)) {
          child.goal = sub;
          child.depth = depth - 1;
          child.outcome = Outcome::CycleCut;
          const auto at = static_cast<std::size_t>(std::find(path_.begin(), path_.end(), sub) - path_.begin());
          cut = std::min(cut, at);
          all_proved = false;
          break;
        }
        const Evaluation ev = solve(sub, depth - 1, child);
        cut = std::min(cut, ev.external_cut);
        if (ev.label != Label::Proved) {
          all_proved = false;
          break;
        }
      }
      if (!all_proved) continue;

      const bool agrees = sign_agreement(rule, goal, node);
      branch.sign_agrees = agrees;
      return finish(node, agrees ? Label::Proved : Label::Disproved, depth, cut);
    }
    return finish(node, Label::Unknown, depth, cut < index ? cut : kNoCut);
  }

 private:
  Evaluation finish(TraceNode& node, Label label, int depth, std::size_t cut) {
    node.outcome = outcome_of(label);
    // A found proof is valid on any path; an Unknown is only reusable when no
    // cycle cut above this node shaped it.
    if (config_.caching && (label != Label::Unknown || cut == kNoCut)) {
      proof_cache_.store({node.goal, label, depth});
    }
    return {label, label == Label::Unknown ? cut : kNoCut};
  }

  void count(ModuleCall& call, std::uint32_t lm_calls) {
    const auto k = static_cast<std::size_t>(call.kind);
    if (call.cache_hit) {
      ++trace_.stats.cache_hits[k];
    } else {
      ++trace_.stats.fresh[k];
      call.lm_calls = lm_calls;
      trace_.stats.lm_calls += lm_calls;
    }
  }

  ModuleResult fact_check(const Atom& goal, TraceNode& node) {
    ModuleCall& call = node.module_calls.emplace_back();
    call.kind = ModuleKind::FactCheck;
    if (config_.caching) {
      if (auto it = fact_cache_.find(goal); it != fact_cache_.end()) {
        call.cache_hit = true;
        call.fact = it->second;
        count(call, 0);
        return call.fact;
      }
    }
    auto out = backend_.fact_check(goal, theory_.facts);
    if (out.value.evidence && *out.value.evidence >= theory_.facts.size()) {
      throw BackendError("fact check cited a fact outside the theory");
    }
    call.fact = out.value;
    count(call, out.lm_calls);
    if (config_.caching) fact_cache_.emplace(goal, out.value);
    return out.value;
  }

  std::vector<std::string> rule_selection(const Atom& goal, TraceNode& node) {
    ModuleCall& call = node.module_calls.emplace_back();
    call.kind = ModuleKind::RuleSelection;
    if (config_.caching) {
      if (auto it = selection_cache_.find(goal); it != selection_cache_.end()) {
        call.cache_hit = true;
        call.selected = it->second;
        count(call, 0);
        return call.selected;
      }
    }
    auto out = backend_.rule_selection(goal, theory_.rules);
    call.selected = out.value;
    count(call, out.lm_calls);
    if (config_.caching) selection_cache_.emplace(goal, out.value);
    return out.value;
  }

  std::vector<Atom> goal_decomposition(const Rule& rule, const Atom& goal, TraceNode& node) {
    ModuleCall& call = node.module_calls.emplace_back();
    call.kind = ModuleKind::GoalDecomposition;
    call.rule_id = rule.id;
    auto key = std::make_pair(rule.id, goal);
    if (config_.caching) {
      if (auto it = decomposition_cache_.find(key); it != decomposition_cache_.end()) {
        call.cache_hit = true;
        call.subgoals = it->second;
        count(call, 0);
        return call.subgoals;
      }
    }
    auto out = backend_.goal_decomposition(rule, goal);
    call.subgoals = out.value;
    count(call, out.lm_calls);
    if (config_.caching) decomposition_cache_.emplace(std::move(key), out.value);
    return out.value;
  }

  bool sign_agreement(const Rule& rule, const Atom& goal, TraceNode& node) {
    ModuleCall& call = node.module_calls.emplace_back();
    call.kind = ModuleKind::SignAgreement;
    call.rule_id = rule.id;
    auto key = std::make_pair(rule.id, goal);
    if (config_.caching) {
      if (auto it = sign_cache_.find(key); it != sign_cache_.end()) {
        call.cache_hit = true;
        call.agrees = it->second;
        count(call, 0);
        return call.agrees;
      }
    }
    auto out = backend_.sign_agreement(rule, goal);
    call.agrees = out.value;
    count(call, out.lm_calls);
    if (config_.caching) sign_cache_.emplace(std::move(key), out.value);
    return out.value;
  }

  const EngineConfig& config_;
  const Theory& theory_;
  ReasoningBackend& backend_;
  ProofTrace& trace_;

  std::vector<Atom> path_;
  ProofCache proof_cache_;
  std::unordered_map<Atom, ModuleResult, AtomHash> fact_cache_;
  std::unordered_map<Atom, std::vector<std::string>, AtomHash> selection_cache_;
  std::map<std::pair<std::string, Atom>, std::vector<Atom>> decomposition_cache_;
  std::map<std::pair<std::string, Atom>, bool> sign_cache_;
};

}  // namespace

BackwardChainer::BackwardChainer(EngineConfig config) : config_(config) {
  if (config_.max_depth < 0 || config_.max_depth > EngineConfig::kGlobalMaxDepth) {
    throw std::invalid_argument("max_depth out of range");
  }
}

ProofResult BackwardChainer::prove(const ProveRequest& request, ReasoningBackend& backend) const {
  if (request.max_depth < 0 || request.max_depth > EngineConfig::kGlobalMaxDepth) {
    throw std::invalid_argument("max_depth must be within 0.." + std::to_string(EngineConfig::kGlobalMaxDepth));
  }
  if (!request.goal.ground()) throw std::invalid_argument("goal must be ground");

  ProofResult result;
  Session session(config_, request.theory, backend, result.trace);
  try {
    result.label = session.solve(request.goal, request.max_depth, result.trace.root).label;
  } catch (BackendError& e) {
    e.attach_trace(std::make_shared<const ProofTrace>(result.trace));
    throw;
  }
  return result;
}

}  // namespace backchain
