#include "ocean/gateway.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>

#include "ocean/util.hpp"

using nlohmann::json;

namespace ocean::gateway {

// ---------------------------------------------------------------- remote

RemoteBackend::RemoteBackend(BackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint_url.empty())
        throw std::invalid_argument("remote backend needs an endpoint url");
}

namespace {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path_prefix;
};

SplitUrl split_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) throw std::invalid_argument("endpoint url needs a scheme: " + url);
    std::size_t slash = url.find('/', scheme + 3);
    SplitUrl out;
    if (slash == std::string::npos) {
        out.base = url;
    } else {
        out.base = url.substr(0, slash);
        out.path_prefix = url.substr(slash);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
            out.path_prefix.pop_back();
    }
    return out;
}

}  // namespace

Completion RemoteBackend::complete_once(const prompting::PromptBundle& bundle) {
    const char* key = std::getenv(kApiKeyEnvVar);
    if (key == nullptr || *key == '\0') throw MissingCredential();

    json body;
    body["model"] = config_.model_name;
    body["temperature"] = config_.temperature;
    body["messages"] = json::array();
    for (const prompting::ChatMessage& m : bundle.messages)
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});

    SplitUrl url = split_url(config_.endpoint_url);
    httplib::Client client(url.base);
    auto seconds = static_cast<time_t>(config_.request_timeout_s);
    auto micros = static_cast<time_t>((config_.request_timeout_s - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
    auto start = std::chrono::steady_clock::now();
    httplib::Result res =
        client.Post(url.path_prefix + "/chat/completions", headers, body.dump(), "application/json");
    double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!res) throw Timeout(httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw HttpStatus(res->status, res->body.substr(0, 200));

    try {
        json parsed = json::parse(res->body);
        Completion out;
        out.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        out.model_name = config_.model_name;
        out.latency_s = latency;
        return out;
    } catch (const json::exception& e) {
        throw HttpStatus(res->status, std::string("unexpected response body: ") + e.what());
    }
}

// ---------------------------------------------------------------- gateway

Gateway::Gateway(std::shared_ptr<Backend> backend) : backend_(std::move(backend)) {
    sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string Gateway::cache_key(const prompting::PromptBundle& bundle) const {
    json canonical;
    canonical["messages"] = json::array();
    for (const prompting::ChatMessage& m : bundle.messages)
        canonical["messages"].push_back({{"role", m.role}, {"content", m.content}});
    canonical["model"] = backend_->config().model_name;
    canonical["temperature"] = backend_->config().temperature;
    return util::sha256_hex(canonical.dump() + backend_->cache_key_extra(bundle));
}

std::optional<Completion> Gateway::cache_lookup(const std::string& key) {
    const auto& dir = backend_->config().cache_dir;
    if (!dir) return std::nullopt;
    std::filesystem::path path = *dir / (key + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        json j = json::parse(util::read_file(path));
        Completion out;
        out.text = j.at("text").get<std::string>();
        out.model_name = j.at("model_name").get<std::string>();
        out.cached = true;
        return out;
    } catch (const std::exception&) {
        ++cache_warnings_;
        std::cerr << "warning: " << CacheCorrupt(path.string()).what() << ", refetching\n";
        return std::nullopt;
    }
}

void Gateway::cache_store(const std::string& key, const Completion& completion) {
    const auto& dir = backend_->config().cache_dir;
    if (!dir) return;
    json j;
    j["text"] = completion.text;
    j["model_name"] = completion.model_name;
    util::write_file_atomic(*dir / (key + ".json"), j.dump());
}

Completion Gateway::complete_with_retries(const prompting::PromptBundle& bundle) {
    static thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
    int max_retries = backend_->config().max_retries;
    for (int attempt = 0;; ++attempt) {
        try {
            ++backend_calls_;
            return backend_->complete_once(bundle);
        } catch (const GatewayError& e) {
            if (!e.transient || attempt >= max_retries) throw;
            double cap = backoff_base_s * std::pow(2.0, attempt);
            double wait = cap * ((jitter_rng() >> 11) * 0x1.0p-53);
            sleeper(std::chrono::milliseconds(static_cast<long>(wait * 1000.0)));
        }
    }
}

Completion Gateway::complete(const prompting::PromptBundle& bundle) {
    std::string key;
    if (backend_->config().cache_dir) {
        key = cache_key(bundle);
        if (auto hit = cache_lookup(key)) {
            ++cache_hits_;
            return *hit;
        }
    }
    Completion out = complete_with_retries(bundle);
    if (!key.empty()) cache_store(key, out);
    return out;
}

std::vector<BatchItem> Gateway::run_batch(const std::vector<prompting::PromptBundle>& bundles) {
    std::vector<BatchItem> results(bundles.size());
    if (bundles.empty()) return results;

    int workers = std::max(1, std::min<int>(backend_->config().max_in_flight,
                                            static_cast<int>(bundles.size())));
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> completed{0};
    std::atomic<int> in_flight{0};
    std::mutex log_mutex;

    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= bundles.size()) return;
            int now = ++in_flight;
            int seen = high_water_.load();
            while (now > seen && !high_water_.compare_exchange_weak(seen, now)) {
            }
            try {
                results[i].completion = complete(bundles[i]);
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
            --in_flight;
            std::size_t done = ++completed;
            if (done % 100 == 0 || done == bundles.size()) {
                std::lock_guard<std::mutex> lock(log_mutex);
                std::cerr << "progress: " << done << "/" << bundles.size() << " completions\n";
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
    return results;
}

}  // namespace ocean::gateway
