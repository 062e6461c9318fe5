#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

namespace backchain::lm {

struct LmConfig {
  std::string endpoint_url;  // e.g. http://127.0.0.1:8080/v1/complete
  std::string model_name = "default";
  double temperature = 0.0;
  int max_output_tokens = 256;
  int timeout_ms = 30000;
  int retries = 2;
  int retry_backoff_ms = 50;
  std::string prompt_pack_path;  // empty: built-in pack
  int demonstrations = 4;
  int fact_check_trials = 2;
  int max_concurrency = 4;
  bool response_cache = true;
  std::string template_pack = "v1";  // wording of rules in queries
  std::string api_key_env = "BACKCHAIN_LM_API_KEY";

  /// Throws SchemaError.
  void validate() const;
  static LmConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Blocking text-completion client for the JSON protocol
///   POST {model, prompt, temperature, max_tokens} -> {text}
/// Thread-safe. Concurrent requests are bounded by max_concurrency.
class CompletionClient {
 public:
  explicit CompletionClient(LmConfig config);

  /// `cache_namespace` separates otherwise identical prompts of different
  /// module kinds in the response cache. Throws TimeoutError or
  /// TransportError once retries are exhausted.
  std::string complete(std::string_view cache_namespace, const std::string& prompt);

  std::uint64_t network_requests() const noexcept { return requests_.load(); }
  std::uint64_t cache_hits() const noexcept { return cache_hits_.load(); }
  const LmConfig& config() const noexcept { return config_; }

 private:
  std::string post_once(const std::string& body, const std::string& prompt_hash);

  LmConfig config_;
  std::string host_;  // scheme://host:port
  std::string path_;
  std::counting_semaphore<1024> slots_;
  std::shared_mutex cache_mutex_;
  std::unordered_map<std::string, std::string> cache_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

}  // namespace backchain::lm
