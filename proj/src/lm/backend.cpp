#include "backchain/lm/backend.hpp"

#include <numeric>

#include <spdlog/spdlog.h>

#include "backchain/errors.hpp"

namespace backchain::lm {

namespace {

void warn_parse(PromptKind kind, const CompletionParseError& e) {
  nlohmann::json event = {{"event", "completion_parse_error"},
                          {"prompt_kind", std::string(to_string(kind))},
                          {"completion", e.completion()}};
  spdlog::warn("{}", event.dump());
}

}  // namespace

LmBackend::LmBackend(std::shared_ptr<CompletionClient> client, std::shared_ptr<const PromptPack> pack)
    : client_(std::move(client)),
      pack_(std::move(pack)),
      text_(TemplatePack::by_id(client_->config().template_pack)),
      k_(static_cast<std::size_t>(client_->config().demonstrations)),
      trials_(client_->config().fact_check_trials) {
  for (PromptKind kind : kPromptKinds) {
    if (pack_->demonstrations(kind).size() < k_) {
      throw PromptPackError(std::string(to_string(kind)) + " has fewer than " + std::to_string(k_) +
                            " demonstrations");
    }
  }
}

std::unique_ptr<LmBackend> LmBackend::create(const LmConfig& config) {
  auto client = std::make_shared<CompletionClient>(config);
  std::shared_ptr<const PromptPack> pack =
      config.prompt_pack_path.empty() ? std::make_shared<PromptPack>(PromptPack::builtin())
                                      : std::make_shared<PromptPack>(PromptPack::load(config.prompt_pack_path));
  return std::make_unique<LmBackend>(std::move(client), std::move(pack));
}

std::unique_ptr<ReasoningBackend> LmBackend::fork() const { return std::make_unique<LmBackend>(client_, pack_); }

std::string LmBackend::ask(PromptKind kind, const nlohmann::json& inputs) {
  return client_->complete(to_string(kind), render_prompt(*pack_, kind, inputs, k_));
}

Metered<ModuleResult> LmBackend::fact_check(const Atom& goal, std::span<const Atom> facts) {
  Metered<ModuleResult> out{ModuleResult{}, 0};
  std::vector<std::size_t> remaining(facts.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  for (int trial = 0; trial < trials_ && !remaining.empty(); ++trial) {
    std::vector<Atom> shown;
    for (std::size_t i : remaining) shown.push_back(facts[i]);
    PromptKind stage = PromptKind::FactSelection;
    try {
      ++out.lm_calls;
      const std::string selection = ask(PromptKind::FactSelection, fact_selection_inputs(goal, shown));
      const std::size_t pick =
          std::get<std::size_t>(parse_response(PromptKind::FactSelection, selection, shown.size(), text_));
      stage = PromptKind::FactVerification;
      ++out.lm_calls;
      const std::string verdict =
          ask(PromptKind::FactVerification, fact_verification_inputs(shown[pick], goal));
      const Label label = std::get<Label>(parse_response(PromptKind::FactVerification, verdict, 0, text_));
      if (label != Label::Unknown) {
        out.value = ModuleResult{label, remaining[pick]};
        return out;
      }
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    } catch (const CompletionParseError& e) {
      warn_parse(stage, e);
      out.value = ModuleResult{};
      return out;
    }
  }
  return out;
}

Metered<std::vector<std::string>> LmBackend::rule_selection(const Atom& goal, std::span<const Rule> rules) {
  Metered<std::vector<std::string>> out{{}, 0};
  if (rules.empty()) return out;

  std::string key;
  for (const Rule& r : rules) key += render_text(r, text_) + "\n";
  std::vector<std::string> implications;
  {
    std::lock_guard lock(memo_mutex_);
    if (auto it = implication_memo_.find(key); it != implication_memo_.end()) implications = it->second;
  }
  try {
    if (implications.empty()) {
      ++out.lm_calls;
      const std::string reply = ask(PromptKind::RuleImplications, rule_implications_inputs(rules, text_));
      implications = std::get<std::vector<std::string>>(
          parse_response(PromptKind::RuleImplications, reply, rules.size(), text_));
      std::lock_guard lock(memo_mutex_);
      implication_memo_.emplace(key, implications);
    }
    ++out.lm_calls;
    const std::string reply = ask(PromptKind::RuleSelection, rule_selection_inputs(implications, goal));
    const auto selected =
        std::get<std::vector<std::size_t>>(parse_response(PromptKind::RuleSelection, reply, rules.size(), text_));
    for (std::size_t i : selected) out.value.push_back(rules[i].id);
  } catch (const CompletionParseError& e) {
    warn_parse(PromptKind::RuleSelection, e);
    out.value.clear();
  }
  return out;
}

Metered<std::vector<Atom>> LmBackend::goal_decomposition(const Rule& rule, const Atom& goal) {
  const std::string reply = ask(PromptKind::GoalDecomposition, goal_decomposition_inputs(rule, goal, text_));
  return {std::get<std::vector<Atom>>(parse_response(PromptKind::GoalDecomposition, reply, 0, text_)), 1};
}

Metered<bool> LmBackend::sign_agreement(const Rule& rule, const Atom& goal) {
  const std::string reply = ask(PromptKind::SignAgreement, sign_agreement_inputs(rule, goal, text_));
  return {std::get<bool>(parse_response(PromptKind::SignAgreement, reply, 0, text_)), 1};
}

}  // namespace backchain::lm
