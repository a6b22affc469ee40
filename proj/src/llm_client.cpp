#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "dgen/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <random>
#include <thread>

#include <json.hpp>

#include "dgen/errors.hpp"

namespace dgen {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

const char* to_string(FinishReason reason) {
    switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
    }
    return "stop";
}

FinishReason finish_reason_from_string(const std::string& s) {
    if (s == "length") return FinishReason::Length;
    if (s == "error") return FinishReason::Error;
    return FinishReason::Stop;
}

RateLimiter::RateLimiter(int limit, std::chrono::milliseconds window)
    : limit_(limit), window_(window) {}

void RateLimiter::acquire() {
    for (;;) {
        auto now = Clock::now();
        std::unique_lock<std::mutex> lock(mutex_);
        auto cutoff = now - window_;
        recent_.erase(std::remove_if(recent_.begin(), recent_.end(),
                                     [&](const Clock::time_point& t) { return t <= cutoff; }),
                      recent_.end());
        if (static_cast<int>(recent_.size()) < limit_) {
            recent_.push_back(now);
            return;
        }
        auto wake_at = *std::min_element(recent_.begin(), recent_.end()) + window_;
        lock.unlock();
        std::this_thread::sleep_until(wake_at);
    }
}

namespace {

class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int count_;
};

struct SemaphoreGuard {
    explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
    Semaphore& sem;
};

// host part ("http://host:port") and path prefix ("/v1") of a base URL.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("base_url must include a scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string host = base_url.substr(0, path_start);
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {host, prefix};
}

bool is_retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

class HttpCompletionClient : public CompletionClient {
public:
    explicit HttpCompletionClient(ProviderConfig config)
        : config_(std::move(config)),
          in_flight_(std::max(1, config_.max_concurrent)),
          limiter_(config_.requests_per_minute
                       ? std::make_unique<RateLimiter>(*config_.requests_per_minute,
                                                       config_.rate_window)
                       : nullptr) {
        std::tie(host_, path_prefix_) = split_base_url(config_.base_url);
    }

    CompletionResponse complete(const CompletionRequest& request) override {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw AuthFailure("environment variable " + config_.api_key_env + " is not set");

        json body = {
            {"model", config_.model},
            {"messages", json::array({{{"role", "user"}, {"content", request.prompt_text}}})},
            {"max_tokens", request.max_tokens.value_or(config_.max_tokens)},
            {"temperature", request.temperature.value_or(config_.temperature)},
        };
        std::string payload = body.dump();
        httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

        auto started = Clock::now();
        int last_status = 0;
        std::string last_detail;
        for (int attempt = 1; attempt <= config_.max_retries + 1; ++attempt) {
            if (limiter_) limiter_->acquire();

            httplib::Result result;
            {
                SemaphoreGuard guard(in_flight_);
                httplib::Client cli(host_);
                cli.set_connection_timeout(config_.request_timeout);
                cli.set_read_timeout(config_.request_timeout);
                cli.set_write_timeout(config_.request_timeout);
                result = cli.Post(path_prefix_ + "/chat/completions", headers, payload,
                                  "application/json");
            }

            if (!result) {
                last_status = 0;
                last_detail = httplib::to_string(result.error());
            } else if (result->status == 401 || result->status == 403) {
                throw AuthFailure("authentication rejected with status " +
                                  std::to_string(result->status));
            } else if (result->status == 200) {
                return parse_response(result->body, attempt, started);
            } else {
                last_status = result->status;
                last_detail = result->body.substr(0, 200);
                if (!is_retryable_status(result->status))
                    throw RetriesExhausted(last_status, "non-retryable status");
            }

            if (attempt <= config_.max_retries) backoff(attempt);
        }
        throw RetriesExhausted(last_status, last_detail);
    }

private:
    CompletionResponse parse_response(const std::string& body, int attempt,
                                      Clock::time_point started) const {
        json parsed = json::parse(body, nullptr, false);
        if (parsed.is_discarded()) throw MalformedResponse("response body is not JSON");
        if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
            parsed["choices"].empty())
            throw MalformedResponse("response has no choices");
        const json& choice = parsed["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content") ||
            !choice["message"]["content"].is_string())
            throw MalformedResponse("choice has no message content");

        CompletionResponse response;
        response.text = choice["message"]["content"].get<std::string>();
        response.finish_reason =
            finish_reason_from_string(choice.value("finish_reason", "stop"));
        response.attempt_count = attempt;
        response.latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);
        return response;
    }

    // Exponential backoff with full jitter: the k-th retry sleeps a uniform
    // time in [0, base * 2^(k-1)].
    void backoff(int retry_number) const {
        double ceiling_ms = static_cast<double>(config_.retry_backoff_base.count()) *
                            std::pow(2.0, retry_number - 1);
        thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
        std::uniform_real_distribution<double> dist(0.0, ceiling_ms);
        std::this_thread::sleep_for(
            std::chrono::duration<double, std::milli>(dist(jitter_rng)));
    }

    ProviderConfig config_;
    std::string host_;
    std::string path_prefix_;
    Semaphore in_flight_;
    std::unique_ptr<RateLimiter> limiter_;
};

} // namespace

MockClient::MockClient(ProviderConfig config) : config_(std::move(config)) {}

CompletionResponse MockClient::complete(const CompletionRequest& request) {
    std::size_t count;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        prompts_.push_back(request.prompt_text);
        count = prompts_.size();
    }
    if (config_.mock_fail_after_calls > 0 &&
        count > static_cast<std::size_t>(config_.mock_fail_after_calls))
        throw RetriesExhausted(0, "mock provider failure injection");
    if (config_.mock_latency.count() > 0) std::this_thread::sleep_for(config_.mock_latency);

    CompletionResponse response;
    response.finish_reason = FinishReason::Stop;
    response.text = config_.mock_default_reply;
    for (const auto& rule : config_.mock_rules) {
        if (request.prompt_text.find(rule.contains) != std::string::npos) {
            response.text = rule.reply;
            break;
        }
    }
    return response;
}

std::vector<std::string> MockClient::prompts() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return prompts_;
}

std::size_t MockClient::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return prompts_.size();
}

std::shared_ptr<CompletionClient> make_client(const ProviderConfig& config) {
    if (config.kind == "mock") return std::make_shared<MockClient>(config);
    if (config.kind == "openai") return std::make_shared<HttpCompletionClient>(config);
    throw ConfigError("unknown provider kind: " + config.kind);
}

} // namespace dgen
