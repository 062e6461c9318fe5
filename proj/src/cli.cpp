#include "backchain/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "backchain/errors.hpp"
#include "backchain/eval.hpp"
#include "backchain/generator.hpp"
#include "backchain/lm/backend.hpp"
#include "backchain/serialize.hpp"
#include "backchain/symbolic.hpp"
#include "backchain/trace_io.hpp"

namespace backchain {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path, e.what());
  }
}

void write_text(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw SchemaError(path, "cannot write file");
  out << content;
}

// Outputs are always new files; refuse to clobber an input.
void guard_output(const std::string& out, std::initializer_list<std::string> inputs) {
  if (out.empty()) return;
  for (const std::string& in : inputs) {
    if (!in.empty() && fs::exists(in) && fs::exists(out) && fs::equivalent(in, out)) {
      throw UsageError("output " + out + " would overwrite input " + in);
    }
  }
}

// Config files override flags: the file is merge-patched over the flag values.
json overlay(json flags, const std::string& config_path) {
  if (!config_path.empty()) flags.merge_patch(read_json(config_path));
  return flags;
}

struct EngineFlags {
  int max_depth = 5;
  bool no_cache = false;
  bool no_cycle_check = false;

  void add(CLI::App* app) {
    app->add_option("--max-depth", max_depth, "Depth limit of the backward search")->capture_default_str();
    app->add_flag("--no-cache", no_cache, "Disable proof and module caches");
    app->add_flag("--no-cycle-check", no_cycle_check, "Disable cycle cuts");
  }
  json to_json() const { return {{"max_depth", max_depth}, {"caching", !no_cache}, {"cycle_check", !no_cycle_check}}; }
};

struct BackendFlags {
  std::string backend = "symbolic";
  std::string lm_config;

  void add(CLI::App* app) {
    app->add_option("--backend", backend, "Reasoning backend")
        ->check(CLI::IsMember({"symbolic", "lm"}))
        ->capture_default_str();
    app->add_option("--lm-config", lm_config, "LmConfig JSON file (required for --backend lm)");
  }

  std::unique_ptr<ReasoningBackend> make() const {
    if (backend == "symbolic") {
      if (!lm_config.empty()) throw UsageError("--lm-config is only valid with --backend lm");
      return std::make_unique<SymbolicBackend>();
    }
    if (lm_config.empty()) throw UsageError("--backend lm requires --lm-config");
    return lm::LmBackend::create(lm::LmConfig::from_json(read_json(lm_config)));
  }
};

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ----- generate ---------------------------------------------------------------

struct GenerateCmd {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int num_examples = 100;
  int depth = 3;
  int predicate_pool = 12;
  int max_attempts = 500;

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("generate", "Generate a synthetic dataset");
    sub->add_option("--config", config, "GenConfig JSON file");
    sub->add_option("--out", out, "Output dataset (JSON Lines)")->required();
    sub->add_option("--seed", seed)->capture_default_str();
    sub->add_option("--num-examples", num_examples)->capture_default_str();
    sub->add_option("--depth", depth)->capture_default_str();
    sub->add_option("--predicate-pool", predicate_pool)->capture_default_str();
    sub->add_option("--max-attempts", max_attempts)->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    GenConfig defaults;
    defaults.seed = seed;
    defaults.num_examples = num_examples;
    defaults.depth = depth;
    defaults.predicate_pool = predicate_pool;
    defaults.max_attempts = max_attempts;
    const GenConfig cfg = GenConfig::from_json(overlay(json::parse(defaults.to_json().dump()), config));
    guard_output(out, {config});
    const auto data = generate(cfg);
    save_dataset(data, out);
    std::size_t counts[3] = {0, 0, 0};
    for (const Example& e : data) ++counts[static_cast<int>(e.gold_label)];
    std::cout << "generated " << data.size() << " examples at depth " << cfg.depth << " (proved " << counts[0]
              << ", disproved " << counts[1] << ", unknown " << counts[2] << ") -> " << out << "\n";
  }
};

// ----- prove ------------------------------------------------------------------

struct ProveCmd {
  std::string example_path;
  std::string dataset;
  std::size_t index = 0;
  std::string goal;
  std::string trace;
  std::string trace_out;
  EngineFlags engine;
  BackendFlags backend;

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("prove", "Prove one goal against one theory");
    auto* ex = sub->add_option("--example", example_path, "Example JSON file");
    auto* ds = sub->add_option("--dataset", dataset, "Dataset file; pick an example with --index");
    ex->excludes(ds);
    sub->add_option("--index", index, "Example index within --dataset")->needs(ds);
    sub->add_option("--goal", goal, "Goal sentence overriding the example's goal, e.g. \"Anne is nice.\"");
    sub->add_option("--trace", trace, "Export the proof trace")->check(CLI::IsMember({"json", "dot"}));
    sub->add_option("--trace-out", trace_out, "Trace output file (default: standard output)");
    engine.add(sub);
    backend.add(sub);
    sub->callback([this] { run(); });
  }

  void run() {
    if (example_path.empty() == dataset.empty()) throw UsageError("give exactly one of --example or --dataset");
    Example ex;
    if (!example_path.empty()) {
      ex = load_example(example_path);
    } else {
      const auto data = load_dataset(dataset);
      if (index >= data.size()) throw UsageError("--index out of range (dataset has " + std::to_string(data.size()) + ")");
      ex = data[index];
    }
    guard_output(trace_out, {example_path, dataset});
    const Theory theory = materialize(ex.theory);
    const std::string pack = ex.theory.metadata.value("template_pack", std::string("v1"));
    if (!goal.empty()) ex.goal = parse_fact(goal, TemplatePack::by_id(pack));

    const EngineConfig cfg = EngineConfig::from_json(engine.to_json());
    auto instance = backend.make();
    const ProofResult r = BackwardChainer(cfg).prove({theory, ex.goal, cfg.max_depth}, *instance);

    std::cout << render_text(ex.goal, TemplatePack::by_id(pack)) << " -> " << to_string(r.label) << "\n";
    std::cout << "lm calls " << r.trace.stats.lm_calls << ", trace nodes " << r.trace.root.subtree_size() << "\n";
    if (!trace.empty()) {
      const std::string text = trace == "json" ? trace_to_json(r.trace).dump(2) + "\n" : trace_to_dot(r.trace, theory);
      if (trace_out.empty()) {
        std::cout << text;
      } else {
        write_text(trace_out, text);
        std::cout << "trace -> " << trace_out << "\n";
      }
    }
  }
};

// ----- eval -------------------------------------------------------------------

struct EvalCmd {
  std::string dataset;
  std::string config;
  std::string out;
  std::string csv;
  std::string trace_dir;
  std::string prover = "lambada";
  std::string mode = "tri_state";
  int workers = 1;
  int si_max_steps = 0;
  bool no_validate = false;
  double min_accuracy = -1;
  double min_trace_validity = -1;
  EngineFlags engine;
  BackendFlags backend;
  int* exit_code;

  explicit EvalCmd(int* code) : exit_code(code) {}

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("eval", "Evaluate a prover on a dataset");
    sub->add_option("--dataset", dataset)->required();
    sub->add_option("--config", config, "EvalConfig JSON file");
    sub->add_option("--out", out, "Report JSON file");
    sub->add_option("--csv", csv, "Confusion matrix CSV file");
    sub->add_option("--trace-dir", trace_dir, "Write each LAMBADA trace as <index>.json here");
    sub->add_option("--prover", prover)->check(CLI::IsMember({"lambada", "si", "closure"}))->capture_default_str();
    sub->add_option("--mode", mode)->check(CLI::IsMember({"tri_state", "binary"}))->capture_default_str();
    sub->add_option("--workers", workers)->capture_default_str();
    sub->add_option("--si-max-steps", si_max_steps, "0 means example depth + 1")->capture_default_str();
    sub->add_flag("--no-validate", no_validate, "Skip trace validation");
    sub->add_option("--min-accuracy", min_accuracy, "Exit 4 below this accuracy");
    sub->add_option("--min-trace-validity", min_trace_validity, "Exit 4 below this trace validity rate");
    engine.add(sub);
    backend.add(sub);
    sub->callback([this] { run(); });
  }

  void run() {
    json flags = {{"prover", prover},       {"engine", engine.to_json()},         {"mode", mode},
                  {"workers", workers},     {"si_max_steps", si_max_steps},       {"validate_traces", !no_validate},
                  {"keep_traces", !trace_dir.empty()}, {"thresholds", json::object()}};
    if (min_accuracy >= 0) flags["thresholds"]["accuracy"] = min_accuracy;
    if (min_trace_validity >= 0) flags["thresholds"]["trace_validity"] = min_trace_validity;
    const EvalConfig cfg = EvalConfig::from_json(overlay(flags, config));
    guard_output(out, {dataset, config});
    guard_output(csv, {dataset, config});

    const auto data = load_dataset(dataset);
    std::unique_ptr<ReasoningBackend> instance;
    if (cfg.prover == ProverKind::Lambada) instance = backend.make();
    const EvalReport report = evaluate(data, instance.get(), cfg);

    std::cout << "prover " << report.prover << " (" << report.mode << "), " << report.total << " examples\n";
    std::cout << "accuracy " << fixed(report.accuracy()) << " (" << report.correct << "/" << report.total << ")";
    if (report.errors) std::cout << ", " << report.errors << " errored";
    std::cout << "\n";
    for (const auto& [depth, cell] : report.per_depth) {
      std::cout << "  depth " << depth << ": " << fixed(cell.accuracy()) << " (" << cell.correct << "/" << cell.total
                << ")\n";
    }
    if (report.traces_checked) {
      std::cout << "trace validity " << fixed(report.trace_validity()) << " (" << report.traces_accepted << "/"
                << report.traces_checked << ")\n";
    }
    if (report.prover != "closure") std::cout << "mean lm calls " << fixed(report.lm_calls.mean, 2) << "\n";

    if (!out.empty()) write_text(out, report.to_json().dump(2) + "\n");
    if (!csv.empty()) write_text(csv, report.confusion_csv());
    if (!trace_dir.empty()) {
      fs::create_directories(trace_dir);
      for (std::size_t i = 0; i < report.outcomes.size(); ++i) {
        if (report.outcomes[i].trace) {
          write_text((fs::path(trace_dir) / (std::to_string(i) + ".json")).string(),
                     trace_to_json(*report.outcomes[i].trace).dump(2) + "\n");
        }
      }
    }
    for (const std::string& v : report.threshold_violations) std::cout << "threshold violated: " << v << "\n";
    if (!report.threshold_violations.empty()) *exit_code = 4;
  }
};

// ----- compare ----------------------------------------------------------------

struct CompareCmd {
  std::string dataset;
  std::string config;
  std::string out;
  int si_max_steps = 0;
  int noisy_runs = 0;
  double noisy_epsilon = 0.5;
  std::uint64_t seed = 0;
  bool include_closure = false;
  int workers = 1;
  EngineFlags engine;

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("compare", "Compare LAMBADA and SI call counts and SI redundancy");
    sub->add_option("--dataset", dataset)->required();
    sub->add_option("--config", config, "CompareConfig JSON file");
    sub->add_option("--out", out, "Comparison report JSON file");
    sub->add_option("--si-max-steps", si_max_steps, "0 means example depth + 1")->capture_default_str();
    sub->add_option("--noisy-runs", noisy_runs, "Noisy SI runs per decided example")->capture_default_str();
    sub->add_option("--noisy-epsilon", noisy_epsilon)->capture_default_str();
    sub->add_option("--seed", seed)->capture_default_str();
    sub->add_flag("--include-closure", include_closure);
    sub->add_option("--workers", workers)->capture_default_str();
    engine.add(sub);
    sub->callback([this] { run(); });
  }

  void run() {
    json flags = {{"engine", engine.to_json()}, {"si_max_steps", si_max_steps}, {"noisy_epsilon", noisy_epsilon},
                  {"noisy_runs", noisy_runs},   {"seed", seed},                 {"include_closure", include_closure},
                  {"workers", workers}};
    const CompareConfig cfg = CompareConfig::from_json(overlay(flags, config));
    guard_output(out, {dataset, config});
    const ComparisonReport report = compare_strategies(load_dataset(dataset), cfg);
    std::cout << "partition  examples  lambada_calls  si_calls  si/lambada  trend_p\n";
    for (const auto& [name, p] : report.partitions) {
      std::cout << std::left << std::setw(11) << name << std::setw(10) << p.examples << std::setw(15)
                << fixed(p.lambada_mean_calls, 2) << std::setw(10) << fixed(p.si_mean_calls, 2) << std::setw(12)
                << fixed(p.si_over_lambada(), 3) << (p.noisy_runs ? fixed(p.trend.p_value, 4) : "-") << "\n";
    }
    if (!out.empty()) write_text(out, report.to_json().dump(2) + "\n");
  }
};

// ----- perturb ----------------------------------------------------------------

struct PerturbCmd {
  std::string dataset;
  std::string config;
  std::string out;
  std::string mode = "tokens";
  std::uint64_t seed = 0;
  std::string template_pack = "v2";

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("perturb", "Rename tokens or swap sentence templates in a dataset");
    sub->add_option("--dataset", dataset)->required();
    sub->add_option("--config", config, "PerturbSpec JSON file");
    sub->add_option("--out", out)->required();
    sub->add_option("--mode", mode)->check(CLI::IsMember({"tokens", "templates"}))->capture_default_str();
    sub->add_option("--seed", seed)->capture_default_str();
    sub->add_option("--template-pack", template_pack)->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    PerturbSpec defaults = mode == "tokens" ? PerturbSpec::tokens(seed) : PerturbSpec::templates(template_pack);
    defaults.seed = seed;
    const PerturbSpec spec = PerturbSpec::from_json(overlay(json::parse(defaults.to_json().dump()), config));
    guard_output(out, {dataset, config});
    const auto data = perturb(load_dataset(dataset), spec);
    save_dataset(data, out);
    std::cout << "perturbed " << data.size() << " examples (" << mode << ") -> " << out << "\n";
  }
};

// ----- validate-traces --------------------------------------------------------

struct ValidateCmd {
  std::string traces;
  std::string dataset;
  std::string out;
  double min_validity = -1;
  int* exit_code;

  explicit ValidateCmd(int* code) : exit_code(code) {}

  void add(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("validate-traces", "Re-check exported proof traces against their theories");
    sub->add_option("--traces", traces, "Directory of <index>.json trace files")->required()->check(CLI::ExistingDirectory);
    sub->add_option("--dataset", dataset, "Dataset the indices refer to")->required();
    sub->add_option("--out", out, "Verdict summary JSON file");
    sub->add_option("--min-validity", min_validity, "Exit 4 below this acceptance rate");
    sub->callback([this] { run(); });
  }

  void run() {
    guard_output(out, {dataset});
    const auto data = load_dataset(dataset);
    std::vector<std::pair<std::size_t, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(traces)) {
      if (entry.path().extension() != ".json") continue;
      const std::string stem = entry.path().stem().string();
      if (stem.empty() || !std::all_of(stem.begin(), stem.end(), ::isdigit)) {
        throw SchemaError(entry.path().string(), "trace files must be named <index>.json");
      }
      files.emplace_back(std::stoull(stem), entry.path());
    }
    std::sort(files.begin(), files.end());

    std::size_t accepted = 0;
    std::map<std::string, std::size_t> violations;
    nlohmann::ordered_json rejected = nlohmann::ordered_json::array();
    for (const auto& [index, path] : files) {
      if (index >= data.size()) throw SchemaError(path.string(), "index beyond the dataset");
      const json trace = read_json(path.string());
      const Verdict v = validate_trace(materialize(data[index].theory), trace);
      if (v.accepted) {
        ++accepted;
        continue;
      }
      ++violations[std::string(to_string(v.violation))];
      rejected.push_back(
          {{"index", index}, {"violation", std::string(to_string(v.violation))}, {"where", v.where}, {"detail", v.detail}});
    }
    const double rate = files.empty() ? 1.0 : static_cast<double>(accepted) / static_cast<double>(files.size());
    std::cout << "accepted " << accepted << "/" << files.size() << " traces (" << fixed(rate) << ")\n";
    for (const auto& [k, n] : violations) std::cout << "  " << k << ": " << n << "\n";
    if (!out.empty()) {
      nlohmann::ordered_json summary = {{"checked", files.size()}, {"accepted", accepted}, {"rate", rate}};
      summary["rejected"] = std::move(rejected);
      write_text(out, summary.dump(2) + "\n");
    }
    if (min_validity >= 0 && rate < min_validity) *exit_code = 4;
  }
};

}  // namespace

int run_cli(int argc, char** argv) {
  int exit_code = 0;
  CLI::App app{"Backward-chaining reasoning over synthetic theories"};
  app.set_version_flag("--version", std::string("backchain (dataset ") + std::string(kDatasetSchemaVersion) +
                                        ", trace " + std::string(kTraceSchemaVersion) + ", report " +
                                        std::string(kReportSchemaVersion) + ")");
  std::string log_level = "warn";
  app.add_option("--log-level", log_level)
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();
  app.require_subcommand(1);
  app.parse_complete_callback([&] { spdlog::set_level(spdlog::level::from_str(log_level)); });

  GenerateCmd generate_cmd;
  ProveCmd prove_cmd;
  EvalCmd eval_cmd(&exit_code);
  CompareCmd compare_cmd;
  PerturbCmd perturb_cmd;
  ValidateCmd validate_cmd(&exit_code);
  generate_cmd.add(app);
  prove_cmd.add(app);
  eval_cmd.add(app);
  compare_cmd.add(app);
  perturb_cmd.add(app);
  validate_cmd.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    // Schema, parse, generation, pool and file errors.
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

}  // namespace backchain
