#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "backchain/engine.hpp"
#include "backchain/forward.hpp"
#include "backchain/theory.hpp"

namespace backchain {

inline constexpr std::string_view kReportSchemaVersion = "report/1";

// ---------------------------------------------------------------------------
// Trace validation

enum class Violation { MissingEvidence, WrongRule, BadDecomposition, WrongSign, UnsupportedLabel };

std::string_view to_string(Violation v) noexcept;

struct Verdict {
  bool accepted = true;
  Violation violation = Violation::UnsupportedLabel;  // meaningful only when rejected
  std::string where;                                 // JSON path of the offending node
  std::string detail;

  static Verdict accept() { return {}; }
};

/// Re-checks a serialized proof trace against the theory alone. A trace
/// whose root outcome is proved/disproved is accepted iff that outcome is
/// supported by a fact with the right polarity or by a rule that exists,
/// unifies with the goal, decomposes into its substituted antecedents, has
/// every sub-goal supported as proved, and whose sign decision matches the
/// consequent and goal polarities. Nodes answered from the proof cache are
/// supported by any supported node elsewhere in the trace with the same goal
/// and outcome. Unknown roots are accepted.
Verdict validate_trace(const Theory& theory, const nlohmann::json& trace);

// ---------------------------------------------------------------------------
// Evaluation

enum class ProverKind { Lambada, Si, Closure };
enum class ScoringMode { TriState, Binary };

std::string_view to_string(ProverKind p) noexcept;

struct EvalConfig {
  ProverKind prover = ProverKind::Lambada;
  EngineConfig engine;
  ScoringMode mode = ScoringMode::TriState;
  int workers = 1;
  int si_max_steps = 0;  // 0: example depth + 1
  SiPolicy si_policy;
  bool validate_traces = true;
  bool keep_traces = false;
  std::map<std::string, double> thresholds;  // "accuracy", "trace_validity": minimum values

  static EvalConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  /// SHA-256 of the canonical JSON form.
  std::string hash() const;
};

struct ExampleOutcome {
  Label gold = Label::Unknown;
  Label predicted = Label::Unknown;
  std::string partition;
  std::optional<std::string> error;
  ModuleCallStats calls;  // LAMBADA only
  std::uint64_t si_calls = 0;
  std::optional<Verdict> verdict;
  std::optional<ProofTrace> trace;
  ForwardRunStats si;
  double millis = 0.0;
};

struct Distribution {
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double max = 0.0;

  static Distribution of(std::vector<double> values);
  nlohmann::ordered_json to_json() const;
};

struct EvalReport {
  struct Cell {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
  };

  std::string prover;
  std::string mode;
  std::string config_hash;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t errors = 0;
  std::map<std::string, Cell> per_depth;
  std::array<std::array<std::size_t, 3>, 3> confusion{};  // [gold][predicted], Proved/Disproved/Unknown
  std::array<Distribution, kModuleKinds> fresh_calls{};
  std::array<Distribution, kModuleKinds> cache_hit_calls{};
  Distribution lm_calls;
  Distribution total_fresh;
  std::size_t traces_checked = 0;
  std::size_t traces_accepted = 0;
  std::size_t correct_label_invalid_trace = 0;
  std::map<std::string, std::size_t> violations;
  std::vector<std::string> threshold_violations;
  double wall_ms = 0.0;
  std::vector<ExampleOutcome> outcomes;

  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
  double trace_validity() const {
    return traces_checked ? static_cast<double>(traces_accepted) / static_cast<double>(traces_checked) : 1.0;
  }
  nlohmann::ordered_json to_json(bool include_wall_clock = true) const;
  /// gold,proved,disproved,unknown rows.
  std::string confusion_csv() const;
};

/// `backend` is required for the LAMBADA prover and is fork()ed per example.
/// Per-example failures are recorded in the outcome (scored as Unknown) and
/// never abort the run.
EvalReport evaluate(const std::vector<Example>& dataset, const ReasoningBackend* backend, const EvalConfig& config);

/// Partition key: metadata "dataset_depth" if present, else gold depth, else "unknown".
std::string partition_of(const Example& example);

// ---------------------------------------------------------------------------
// LAMBADA vs SI

struct CompareConfig {
  EngineConfig engine;
  int si_max_steps = 0;  // 0: example depth + 1
  double noisy_epsilon = 0.5;
  int noisy_runs = 0;  // seeded noisy SI runs per decided example
  std::uint64_t seed = 0;
  bool include_closure = false;
  int workers = 1;

  static CompareConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

struct TrendTest {
  double z = 0.0;
  double p_value = 1.0;  // one-sided, alternative: proportion decreases with step
};

/// Cochran-Armitage test for a decreasing trend in success proportions
/// over ordered groups scored 1..k.
TrendTest cochran_armitage_decreasing(const std::vector<std::size_t>& successes,
                                      const std::vector<std::size_t>& totals);

struct ComparisonReport {
  struct Partition {
    std::size_t examples = 0;
    std::size_t decided = 0;
    double lambada_mean_calls = 0.0;
    double si_mean_calls = 0.0;
    double lambada_accuracy = 0.0;
    double si_accuracy = 0.0;
    std::optional<double> closure_accuracy;
    std::map<std::size_t, std::size_t> unique_histogram;  // unique inferences -> runs (noisy)
    std::size_t runs_with_duplicates = 0;
    std::size_t noisy_runs = 0;
    std::vector<std::size_t> on_path;  // per step k: on-path inferences
    std::vector<std::size_t> at_step;  // per step k: runs reaching step k
    TrendTest trend;

    /// How many times more calls SI makes than LAMBADA.
    double si_over_lambada() const { return lambada_mean_calls > 0 ? si_mean_calls / lambada_mean_calls : 0.0; }
  };

  std::map<std::string, Partition> partitions;
  nlohmann::ordered_json to_json() const;
};

/// Paired per-example runs of LAMBADA (symbolic backend) and deterministic
/// SI over decided and Unknown examples; noisy SI runs feed the histogram and
/// per-step on-path rates.
ComparisonReport compare_strategies(const std::vector<Example>& dataset, const CompareConfig& config);

}  // namespace backchain
