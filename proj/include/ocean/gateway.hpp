#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocean/inventory.hpp"
#include "ocean/prompting.hpp"
#include "ocean/traits.hpp"

namespace ocean::gateway {

inline constexpr const char* kApiKeyEnvVar = "OCEAN_API_KEY";

struct BackendConfig {
    enum class Kind { remote, simulator };
    Kind kind = Kind::simulator;
    std::string endpoint_url;  // remote: base url, e.g. https://host:8000/v1
    std::string model_name = "simulator";
    double temperature = 0.0;
    int max_retries = 3;
    double request_timeout_s = 60.0;
    int max_in_flight = 4;
    std::optional<std::filesystem::path> cache_dir;
};

// per-session materialized simulator profile
struct SimProfile {
    TraitScores latent;
    double noise_sd = 0.0;
    double refusal_rate = 0.0;
    std::uint64_t seed = 42;
};

struct SimulatorOptions {
    double noise_sd = 0.0;
    double refusal_rate = 0.0;
    std::uint64_t seed = 42;
    // scales noise by 1/sqrt(granularity): less context, noisier answers
    bool length_dependent_noise = false;
    std::string salt_suffix;  // reliability tries vary this
};

struct Completion {
    std::string text;
    std::string model_name;
    bool cached = false;
    double latency_s = 0.0;
};

class GatewayError : public std::runtime_error {
  public:
    GatewayError(const std::string& why, bool transient_)
        : std::runtime_error(why), transient(transient_) {}
    bool transient;
};

class Timeout : public GatewayError {
  public:
    explicit Timeout(const std::string& why) : GatewayError("timeout: " + why, true) {}
};

class HttpStatus : public GatewayError {
  public:
    HttpStatus(int code_, const std::string& body_excerpt_)
        : GatewayError("http status " + std::to_string(code_) + ": " + body_excerpt_,
                       code_ == 408 || code_ == 429 || code_ >= 500),
          code(code_),
          body_excerpt(body_excerpt_) {}
    int code;
    std::string body_excerpt;
};

class MissingCredential : public GatewayError {
  public:
    MissingCredential()
        : GatewayError(std::string("missing credential: set ") + kApiKeyEnvVar, false) {}
};

class CacheCorrupt : public GatewayError {
  public:
    explicit CacheCorrupt(const std::string& path)
        : GatewayError("cache entry corrupt: " + path, false) {}
};

class Backend {
  public:
    virtual ~Backend() = default;
    virtual Completion complete_once(const prompting::PromptBundle& bundle) = 0;
    virtual const BackendConfig& config() const = 0;
    // extra material folded into cache keys (simulator parameters)
    // extra material folded into the cache key; backends whose output depends
    // on more than (messages, model, temperature) must include that here
    virtual std::string cache_key_extra(const prompting::PromptBundle&) const { return ""; }
};

class RemoteBackend : public Backend {
  public:
    explicit RemoteBackend(BackendConfig config);
    Completion complete_once(const prompting::PromptBundle& bundle) override;
    const BackendConfig& config() const override { return config_; }

  private:
    BackendConfig config_;
};

class SimulatorBackend : public Backend {
  public:
    SimulatorBackend(BackendConfig config, SimulatorOptions options,
                     std::map<std::string, TraitScores> latents_by_session);
    Completion complete_once(const prompting::PromptBundle& bundle) override;
    const BackendConfig& config() const override { return config_; }
    std::string cache_key_extra(const prompting::PromptBundle& bundle) const override;

    void set_salt_suffix(const std::string& suffix) { options_.salt_suffix = suffix; }
    const SimulatorOptions& options() const { return options_; }
    SimProfile profile_for(const std::string& session_id, double granularity) const;

  private:
    BackendConfig config_;
    SimulatorOptions options_;
    std::map<std::string, TraitScores> latents_;
};

// deterministic in (profile, item, session_salt)
Completion simulate_item_answer(const inventory::Item& item, const SimProfile& profile,
                                const std::string& session_salt,
                                const std::string& model_name = "simulator");

// the phrasing/digit-width combinations the simulator draws from
std::string render_item_answer(int choice, int phrasing, bool fullwidth);
inline constexpr int kSimulatorPhrasings = 3;

struct BatchItem {
    std::optional<Completion> completion;
    std::string error;  // set when the slot failed
    bool ok() const { return completion.has_value(); }
};

// retry + cache wrapper around a backend
class Gateway {
  public:
    explicit Gateway(std::shared_ptr<Backend> backend);

    Completion complete(const prompting::PromptBundle& bundle);
    std::vector<BatchItem> run_batch(const std::vector<prompting::PromptBundle>& bundles);

    std::string cache_key(const prompting::PromptBundle& bundle) const;

    std::uint64_t backend_calls() const { return backend_calls_.load(); }
    std::uint64_t cache_hits() const { return cache_hits_.load(); }
    std::uint64_t cache_warnings() const { return cache_warnings_.load(); }
    int batch_high_water() const { return high_water_.load(); }

    Backend& backend() { return *backend_; }

    // test hooks
    std::function<void(std::chrono::milliseconds)> sleeper;
    double backoff_base_s = 1.0;

  private:
    Completion complete_with_retries(const prompting::PromptBundle& bundle);
    std::optional<Completion> cache_lookup(const std::string& key);
    void cache_store(const std::string& key, const Completion& completion);

    std::shared_ptr<Backend> backend_;
    std::atomic<std::uint64_t> backend_calls_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
    std::atomic<std::uint64_t> cache_warnings_{0};
    std::atomic<int> high_water_{0};
};

}  // namespace ocean::gateway
