#include "backchain/trace_io.hpp"

#include <sstream>

#include "backchain/errors.hpp"
#include "backchain/serialize.hpp"

namespace backchain {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json call_to_json(const ModuleCall& call) {
  ordered_json j;
  j["module"] = std::string(to_string(call.kind));
  j["cache_hit"] = call.cache_hit;
  j["lm_calls"] = call.lm_calls;
  switch (call.kind) {
    case ModuleKind::FactCheck:
      j["label"] = std::string(to_string(call.fact.label));
      j["evidence"] = call.fact.evidence ? ordered_json(*call.fact.evidence) : ordered_json(nullptr);
      break;
    case ModuleKind::RuleSelection:
      j["selected"] = call.selected;
      break;
    case ModuleKind::GoalDecomposition: {
      j["rule_id"] = call.rule_id;
      ordered_json subs = ordered_json::array();
      for (const Atom& a : call.subgoals) subs.push_back(to_json(a));
      j["subgoals"] = std::move(subs);
      break;
    }
    case ModuleKind::SignAgreement:
      j["rule_id"] = call.rule_id;
      j["agrees"] = call.agrees;
      break;
  }
  return j;
}

ordered_json node_to_json(const TraceNode& node) {
  ordered_json j;
  j["goal"] = to_json(node.goal);
  j["depth"] = node.depth;
  j["cache_hit"] = node.cache_hit;
  j["outcome"] = std::string(to_string(node.outcome));
  ordered_json calls = ordered_json::array();
  for (const ModuleCall& c : node.module_calls) calls.push_back(call_to_json(c));
  j["module_calls"] = std::move(calls);
  ordered_json branches = ordered_json::array();
  for (const RuleBranch& b : node.branches) {
    ordered_json bj;
    bj["rule_id"] = b.rule_id;
    ordered_json subs = ordered_json::array();
    for (const Atom& a : b.subgoals) subs.push_back(to_json(a));
    bj["subgoals"] = std::move(subs);
    ordered_json children = ordered_json::array();
    for (const TraceNode& c : b.children) children.push_back(node_to_json(c));
    bj["children"] = std::move(children);
    bj["sign_agrees"] = b.sign_agrees ? ordered_json(*b.sign_agrees) : ordered_json(nullptr);
    branches.push_back(std::move(bj));
  }
  j["branches"] = std::move(branches);
  return j;
}

std::vector<Atom> atoms_from_json(const json& j, const std::string& path) {
  std::vector<Atom> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(atom_from_json(j.at(i), path + "[" + std::to_string(i) + "]", true));
  }
  return out;
}

ModuleCall call_from_json(const json& j, const std::string& path) {
  ModuleCall c;
  c.kind = module_kind_from_string(j.at("module").get<std::string>());
  c.cache_hit = j.at("cache_hit").get<bool>();
  c.lm_calls = j.at("lm_calls").get<std::uint32_t>();
  switch (c.kind) {
    case ModuleKind::FactCheck:
      c.fact.label = label_from_string(j.at("label").get<std::string>());
      if (!j.at("evidence").is_null()) c.fact.evidence = j.at("evidence").get<std::size_t>();
      break;
    case ModuleKind::RuleSelection:
      c.selected = j.at("selected").get<std::vector<std::string>>();
      break;
    case ModuleKind::GoalDecomposition:
      c.rule_id = j.at("rule_id").get<std::string>();
      c.subgoals = atoms_from_json(j.at("subgoals"), path + ".subgoals");
      break;
    case ModuleKind::SignAgreement:
      c.rule_id = j.at("rule_id").get<std::string>();
      c.agrees = j.at("agrees").get<bool>();
      break;
  }
  return c;
}

TraceNode node_from_json(const json& j, const std::string& path) {
  TraceNode n;
  n.goal = atom_from_json(j.at("goal"), path + ".goal", true);
  n.depth = j.at("depth").get<int>();
  n.cache_hit = j.at("cache_hit").get<bool>();
  n.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  const json& calls = j.at("module_calls");
  for (std::size_t i = 0; i < calls.size(); ++i) {
    n.module_calls.push_back(call_from_json(calls.at(i), path + ".module_calls[" + std::to_string(i) + "]"));
  }
  const json& branches = j.at("branches");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const json& bj = branches.at(i);
    const std::string bpath = path + ".branches[" + std::to_string(i) + "]";
    RuleBranch b;
    b.rule_id = bj.at("rule_id").get<std::string>();
    b.subgoals = atoms_from_json(bj.at("subgoals"), bpath + ".subgoals");
    const json& children = bj.at("children");
    for (std::size_t k = 0; k < children.size(); ++k) {
      b.children.push_back(node_from_json(children.at(k), bpath + ".children[" + std::to_string(k) + "]"));
    }
    if (!bj.at("sign_agrees").is_null()) b.sign_agrees = bj.at("sign_agrees").get<bool>();
    n.branches.push_back(std::move(b));
  }
  return n;
}

ModuleCallStats stats_from_json(const json& j) {
  ModuleCallStats s;
  for (std::size_t i = 0; i < kModuleKinds; ++i) {
    const std::string key(to_string(static_cast<ModuleKind>(i)));
    s.fresh[i] = j.at("fresh").at(key).get<std::uint64_t>();
    s.cache_hits[i] = j.at("cache_hits").at(key).get<std::uint64_t>();
  }
  s.proof_cache_hits = j.at("proof_cache_hits").get<std::uint64_t>();
  s.lm_calls = j.at("lm_calls").get<std::uint64_t>();
  return s;
}

class DotWriter {
 public:
  DotWriter(const Theory& theory, const TemplatePack& pack) : theory_(theory), pack_(pack) {}

  std::string write(const TraceNode& root) {
    out_ << "digraph proof {\n  node [shape=ellipse, fontname=\"Helvetica\"];\n";
    visit(root);
    out_ << "}\n";
    return out_.str();
  }

 private:
  std::string visit(const TraceNode& node) {
    const std::string id = "n" + std::to_string(next_node_++);
    out_ << "  " << id << " [label=\"" << render_text(node.goal, pack_) << "\\n" << to_string(node.outcome) << "\"";
    if (node.cache_hit) out_ << ", style=filled, fillcolor=lightblue";
    if (node.outcome == Outcome::CycleCut) out_ << ", style=dashed";
    out_ << "];\n";

    for (const ModuleCall& call : node.module_calls) {
      if (call.kind != ModuleKind::FactCheck || call.fact.label == Label::Unknown || !call.fact.evidence) continue;
      const std::size_t index = *call.fact.evidence;
      const std::string fid = "f" + std::to_string(next_fact_++);
      out_ << "  " << fid << " [shape=box, label=\"Fact" << index + 1 << ": "
           << (index < theory_.facts.size() ? render_text(theory_.facts[index], pack_) : std::string("?")) << "\"";
      if (call.cache_hit) out_ << ", style=filled, fillcolor=lightblue";
      out_ << "];\n";
      out_ << "  " << id << " -> " << fid << " [label=\"fact_check\"];\n";
    }
    for (const RuleBranch& branch : node.branches) {
      for (const TraceNode& child : branch.children) {
        const std::string cid = visit(child);
        out_ << "  " << id << " -> " << cid << " [label=\"" << branch.rule_id << "\"];\n";
      }
    }
    return id;
  }

  const Theory& theory_;
  const TemplatePack& pack_;
  std::ostringstream out_;
  std::size_t next_node_ = 0;
  std::size_t next_fact_ = 0;
};

}  // namespace

ordered_json stats_to_json(const ModuleCallStats& stats) {
  ordered_json fresh, hits;
  for (std::size_t i = 0; i < kModuleKinds; ++i) {
    const std::string key(to_string(static_cast<ModuleKind>(i)));
    fresh[key] = stats.fresh[i];
    hits[key] = stats.cache_hits[i];
  }
  ordered_json j;
  j["fresh"] = std::move(fresh);
  j["cache_hits"] = std::move(hits);
  j["proof_cache_hits"] = stats.proof_cache_hits;
  j["lm_calls"] = stats.lm_calls;
  j["total_fresh"] = stats.total_fresh();
  j["total_cache_hits"] = stats.total_cache_hits();
  return j;
}

ordered_json trace_to_json(const ProofTrace& trace) {
  ordered_json j;
  j["schema"] = std::string(kTraceSchemaVersion);
  j["root"] = node_to_json(trace.root);
  j["stats"] = stats_to_json(trace.stats);
  return j;
}

ProofTrace trace_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kTraceSchemaVersion) throw SchemaError("$.schema", "unsupported version");
    ProofTrace t;
    t.root = node_from_json(j.at("root"), "$.root");
    t.stats = stats_from_json(j.at("stats"));
    return t;
  } catch (const json::exception& e) {
    throw SchemaError("$", std::string("malformed trace: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError("$", std::string("malformed trace: ") + e.what());
  }
}

std::string trace_to_dot(const ProofTrace& trace, const Theory& theory, const TemplatePack& pack) {
  return DotWriter(theory, pack).write(trace.root);
}

std::string export_trace(const ProofTrace& trace, const Theory& theory, TraceFormat format) {
  if (format == TraceFormat::Dot) return trace_to_dot(trace, theory);
  return trace_to_json(trace).dump(2);
}

}  // namespace backchain
