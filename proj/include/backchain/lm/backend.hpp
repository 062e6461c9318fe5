#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "backchain/engine.hpp"
#include "backchain/lm/client.hpp"
#include "backchain/lm/prompts.hpp"

namespace backchain::lm {

/// The four reasoning modules answered by a remote completion endpoint.
/// Unparseable fact-check and rule-selection completions degrade to Unknown
/// and "no rules" with a warning; decomposition and sign failures throw
/// CompletionParseError.
class LmBackend : public ReasoningBackend {
 public:
  LmBackend(std::shared_ptr<CompletionClient> client, std::shared_ptr<const PromptPack> pack);
  /// Builds a client and loads the pack named in the config (built-in if none).
  static std::unique_ptr<LmBackend> create(const LmConfig& config);

  Metered<ModuleResult> fact_check(const Atom& goal, std::span<const Atom> facts) override;
  Metered<std::vector<std::string>> rule_selection(const Atom& goal, std::span<const Rule> rules) override;
  Metered<std::vector<Atom>> goal_decomposition(const Rule& rule, const Atom& goal) override;
  Metered<bool> sign_agreement(const Rule& rule, const Atom& goal) override;

  bool thread_safe() const noexcept override { return true; }
  std::unique_ptr<ReasoningBackend> fork() const override;
  std::string_view name() const noexcept override { return "lm"; }

  CompletionClient& client() noexcept { return *client_; }

 private:
  std::string ask(PromptKind kind, const nlohmann::json& inputs);

  std::shared_ptr<CompletionClient> client_;
  std::shared_ptr<const PromptPack> pack_;
  const TemplatePack& text_;
  std::size_t k_;
  int trials_;
  std::mutex memo_mutex_;
  std::unordered_map<std::string, std::vector<std::string>> implication_memo_;
};

}  // namespace backchain::lm
