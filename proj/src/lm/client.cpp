#include "backchain/lm/client.hpp"

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "backchain/errors.hpp"
#include "backchain/text.hpp"

namespace backchain::lm {

namespace {

using nlohmann::json;

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

struct Failure {
  bool retryable;
  bool timeout;
  std::string message;
};

}  // namespace

void LmConfig::validate() const {
  if (!(temperature >= 0.0)) throw SchemaError("$.temperature", "must be >= 0");
  if (retries < 0) throw SchemaError("$.retries", "must be >= 0");
  if (retry_backoff_ms < 0) throw SchemaError("$.retry_backoff_ms", "must be >= 0");
  if (max_output_tokens < 1) throw SchemaError("$.max_output_tokens", "must be positive");
  if (timeout_ms < 1) throw SchemaError("$.timeout_ms", "must be positive");
  if (demonstrations < 1) throw SchemaError("$.demonstrations", "must be positive");
  if (fact_check_trials < 1) throw SchemaError("$.fact_check_trials", "must be positive");
  if (max_concurrency < 1 || max_concurrency > 1024) throw SchemaError("$.max_concurrency", "must lie in 1..1024");
  try {
    TemplatePack::by_id(template_pack);
  } catch (const std::invalid_argument&) {
    throw SchemaError("$.template_pack", "unknown template pack '" + template_pack + "'");
  }
}

LmConfig LmConfig::from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  LmConfig c;
  auto str = [](const json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaError(path, "expected a string");
    return v.get<std::string>();
  };
  auto integer = [](const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
    return v.get<int>();
  };
  for (const auto& [key, value] : j.items()) {
    const std::string path = "$." + key;
    if (key == "endpoint_url") {
      c.endpoint_url = str(value, path);
    } else if (key == "model_name") {
      c.model_name = str(value, path);
    } else if (key == "temperature") {
      if (!value.is_number()) throw SchemaError(path, "expected a number");
      c.temperature = value.get<double>();
    } else if (key == "max_output_tokens") {
      c.max_output_tokens = integer(value, path);
    } else if (key == "timeout_ms") {
      c.timeout_ms = integer(value, path);
    } else if (key == "retries") {
      c.retries = integer(value, path);
    } else if (key == "retry_backoff_ms") {
      c.retry_backoff_ms = integer(value, path);
    } else if (key == "prompt_pack_path") {
      c.prompt_pack_path = str(value, path);
    } else if (key == "demonstrations") {
      c.demonstrations = integer(value, path);
    } else if (key == "fact_check_trials") {
      c.fact_check_trials = integer(value, path);
    } else if (key == "max_concurrency") {
      c.max_concurrency = integer(value, path);
    } else if (key == "response_cache") {
      if (!value.is_boolean()) throw SchemaError(path, "expected a boolean");
      c.response_cache = value.get<bool>();
    } else if (key == "template_pack") {
      c.template_pack = str(value, path);
    } else if (key == "api_key_env") {
      c.api_key_env = str(value, path);
    } else {
      throw SchemaError(path, "unknown field");
    }
  }
  if (c.endpoint_url.empty()) throw SchemaError("$.endpoint_url", "missing field");
  c.validate();
  return c;
}

nlohmann::ordered_json LmConfig::to_json() const {
  nlohmann::ordered_json j;
  j["endpoint_url"] = endpoint_url;
  j["model_name"] = model_name;
  j["temperature"] = temperature;
  j["max_output_tokens"] = max_output_tokens;
  j["timeout_ms"] = timeout_ms;
  j["retries"] = retries;
  j["retry_backoff_ms"] = retry_backoff_ms;
  j["prompt_pack_path"] = prompt_pack_path;
  j["demonstrations"] = demonstrations;
  j["fact_check_trials"] = fact_check_trials;
  j["max_concurrency"] = max_concurrency;
  j["response_cache"] = response_cache;
  j["template_pack"] = template_pack;
  j["api_key_env"] = api_key_env;
  return j;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

CompletionClient::CompletionClient(LmConfig config)
    : config_(std::move(config)), slots_(config_.max_concurrency) {
  config_.validate();
  const auto scheme_end = config_.endpoint_url.find("://");
  if (scheme_end == std::string::npos) throw SchemaError("$.endpoint_url", "expected scheme://host[:port]/path");
  const auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
  host_ = config_.endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint_url.substr(path_start);
}

std::string CompletionClient::complete(std::string_view cache_namespace, const std::string& prompt) {
  const std::string hash = sha256_hex(prompt);
  const std::string key = std::string(cache_namespace) + ":" + hash;
  if (config_.response_cache) {
    std::shared_lock lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++cache_hits_;
      spdlog::debug("lm cache hit ns={} prompt_sha256={}", cache_namespace, hash);
      return it->second;
    }
  }

  const json body = {{"model", config_.model_name},
                     {"prompt", prompt},
                     {"temperature", config_.temperature},
                     {"max_tokens", config_.max_output_tokens}};
  const std::string payload = body.dump();
  std::string text;
  for (int attempt = 0;; ++attempt) {
    try {
      text = post_once(payload, hash);
      break;
    } catch (const Failure& f) {
      spdlog::warn("lm request failed ns={} prompt_sha256={} attempt={} error=\"{}\"", cache_namespace, hash,
                   attempt + 1, f.message);
      if (!f.retryable || attempt >= config_.retries) {
        const std::string message = "completion request failed after " + std::to_string(attempt + 1) +
                                    " attempt(s): " + f.message;
        if (f.timeout) throw TimeoutError(message);
        throw TransportError(message);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms << attempt));
    }
  }
  spdlog::debug("lm response ns={} prompt_sha256={} response_sha256={}", cache_namespace, hash, sha256_hex(text));

  if (config_.response_cache) {
    std::unique_lock lock(cache_mutex_);
    cache_.emplace(key, text);
  }
  return text;
}

std::string CompletionClient::post_once(const std::string& body, const std::string& prompt_hash) {
  SlotGuard slot(slots_);
  ++requests_;
  httplib::Client client(host_);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  spdlog::debug("lm request {}{} prompt_sha256={}", host_, path_, prompt_hash);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - start;
    const bool timed_out = res.error() == httplib::Error::ConnectionTimeout || elapsed >= timeout;
    throw Failure{true, timed_out, httplib::to_string(res.error())};
  }
  if (res->status >= 500) throw Failure{true, false, "HTTP " + std::to_string(res->status)};
  if (res->status != 200) throw Failure{false, false, "HTTP " + std::to_string(res->status)};
  try {
    const json reply = json::parse(res->body);
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
      throw Failure{false, false, "response lacks a string field \"text\""};
    }
    return reply["text"].get<std::string>();
  } catch (const json::exception& e) {
    throw Failure{false, false, std::string("malformed response body: ") + e.what()};
  }
}

}  // namespace backchain::lm
