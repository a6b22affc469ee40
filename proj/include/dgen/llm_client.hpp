#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dgen {

struct MockRule {
    std::string contains; // substring pattern; first match wins
    std::string reply;
};

// Everything needed to reach one completion provider. The API key itself is
// read from the environment at call time and never stored or serialized.
struct ProviderConfig {
    std::string kind = "openai"; // "openai" (HTTP wire) or "mock"
    std::string base_url;
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    int max_tokens = 256;
    double temperature = 1.0;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff_base{1000};
    int max_concurrent = 4;
    std::optional<int> requests_per_minute;
    std::chrono::milliseconds rate_window{60000};

    // Mock provider behaviour.
    std::vector<MockRule> mock_rules;
    std::string mock_default_reply;
    std::chrono::milliseconds mock_latency{0};
    int mock_fail_after_calls = 0; // >0: fail every call after the N-th (interruption testing)
};

struct CompletionRequest {
    std::string prompt_text;
    std::string request_id; // content hash, see generator cache
    std::optional<int> max_tokens;
    std::optional<double> temperature;
};

enum class FinishReason { Stop, Length, Error };

const char* to_string(FinishReason reason);
FinishReason finish_reason_from_string(const std::string& s);

struct CompletionResponse {
    std::string text; // model output, whitespace preserved
    FinishReason finish_reason = FinishReason::Stop;
    std::chrono::milliseconds latency{0};
    int attempt_count = 1;
};

class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// Deterministic offline provider: first matching substring rule wins, no rule
// matches -> default reply. Records every received prompt.
class MockClient : public CompletionClient {
public:
    explicit MockClient(ProviderConfig config);

    CompletionResponse complete(const CompletionRequest& request) override;

    std::vector<std::string> prompts() const;
    std::size_t call_count() const;

private:
    ProviderConfig config_;
    mutable std::mutex mutex_;
    std::vector<std::string> prompts_;
};

// Builds the client matching config.kind ("openai" -> HTTP, "mock" -> MockClient).
std::shared_ptr<CompletionClient> make_client(const ProviderConfig& config);

// Sliding-window limiter: at most `limit` acquisitions in any window.
// acquire() blocks until admission is allowed.
class RateLimiter {
public:
    RateLimiter(int limit, std::chrono::milliseconds window);
    void acquire();

private:
    int limit_;
    std::chrono::milliseconds window_;
    std::mutex mutex_;
    std::vector<std::chrono::steady_clock::time_point> recent_;
};

} // namespace dgen
