#pragma once

#include "chardial/clock.hpp"
#include "chardial/dialogue.hpp"
#include "chardial/error.hpp"
#include "chardial/profile.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace chardial {

/// Defaults applied when neither the request nor the provider config sets them.
inline constexpr double kDefaultTemperature = 0.7;
inline constexpr int kDefaultMaxOutputTokens = 512;

struct GenerationParams {
    double temperature = kDefaultTemperature;
    int max_output_tokens = kDefaultMaxOutputTokens;

    bool operator==(const GenerationParams&) const = default;
};

/// Field-name mapping for an OpenAI-style chat endpoint. Every provider is
/// described by configuration; there is no per-provider code.
struct AdapterMapping {
    std::string messages_field = "messages";
    std::string model_field = "model";
    std::string temperature_field = "temperature";
    std::string max_tokens_field = "max_tokens";
    std::string role_field = "role";
    std::string content_field = "content";
    std::string system_role = "system";
    std::string character_role = "assistant";
    std::string player_role = "user";
    /// Slash-separated path to the reply text, numeric parts index arrays.
    std::string response_text_path = "choices/0/message/content";
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";

    bool operator==(const AdapterMapping&) const = default;
};

struct MockBehavior {
    enum class Mode { Echo, Canned };
    Mode mode = Mode::Echo;
    std::vector<std::string> replies;  // Canned: cycled in order

    bool operator==(const MockBehavior&) const = default;
};

struct ProviderConfig {
    std::string name;
    std::string endpoint;
    std::string model;
    std::string credential_env;  // environment variable holding the API key
    double timeout_seconds = 60;
    int max_retries = 2;
    int requests_per_minute = 0;  // 0 disables the cap
    std::chrono::milliseconds backoff_initial{500};
    GenerationParams defaults;
    AdapterMapping adapter;
    std::optional<MockBehavior> mock;  // set for "local-mock" style providers

    bool operator==(const ProviderConfig&) const = default;
};

std::vector<Violation> validate_config(const ProviderConfig& cfg);

/// Reads {"providers":[{...}]} (see README for fields).
std::vector<ProviderConfig> load_provider_configs(const std::string& path);
std::vector<ProviderConfig> parse_provider_configs(std::string_view json_text);

struct ChatTurn {
    Speaker speaker = Speaker::Player;
    std::string text;
    bool operator==(const ChatTurn&) const = default;
};

struct ChatRequest {
    std::string system_prompt;
    std::vector<ChatTurn> history;
    std::optional<GenerationParams> params;  // unset: provider defaults

    bool operator==(const ChatRequest&) const = default;
};

/// History follows dialogue rules: character first, strict alternation, and
/// (when non-empty) ends on a player turn awaiting the character's reply.
std::vector<Violation> validate_request(const ChatRequest& req);

struct ChatResponse {
    std::string text;
    std::string provider;
    std::int64_t latency_ms = 0;
    std::string raw_payload;
    int attempt_count = 1;

    bool operator==(const ChatResponse&) const = default;
};

enum class ProviderErrorKind { Auth, Timeout, Rejected, EmptyCompletion, Transport, CacheMiss, Config };
std::string_view to_string(ProviderErrorKind k) noexcept;

class ProviderError : public Error {
  public:
    ProviderError(ProviderErrorKind kind, std::string provider, const std::string& detail);

    ProviderErrorKind kind() const noexcept { return kind_; }
    const std::string& provider() const noexcept { return provider_; }
    bool retryable() const noexcept;

  private:
    ProviderErrorKind kind_;
    std::string provider_;
};

/// Canonical JSON of (provider, system_prompt, history, params); the cassette key
/// is its SHA-256.
std::string request_fingerprint(std::string_view provider, const ChatRequest& req);
std::string request_key(std::string_view provider, const ChatRequest& req);

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

/// One generation attempt against one provider. No retry logic.
class ChatBackend {
  public:
    virtual ~ChatBackend() = default;
    virtual std::string name() const = 0;
    virtual ChatResponse generate(const ChatRequest& req, const GenerationParams& params) = 0;
};

struct HttpResult {
    int status = 0;
    std::string body;
    bool timed_out = false;
    std::string error;  // transport-level failure text
};

class Transport {
  public:
    virtual ~Transport() = default;
    virtual HttpResult post(const std::string& url, const std::vector<std::pair<std::string, std::string>>& headers,
                            const std::string& body, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib transport; counts issued requests.
class HttpTransport final : public Transport {
  public:
    HttpResult post(const std::string& url, const std::vector<std::pair<std::string, std::string>>& headers,
                    const std::string& body, std::chrono::milliseconds timeout) override;
    std::size_t requests() const noexcept { return requests_.load(); }

  private:
    std::atomic<std::size_t> requests_{0};
};

class HttpChatBackend final : public ChatBackend {
  public:
    HttpChatBackend(ProviderConfig cfg, std::shared_ptr<Transport> transport, Clock& clock);

    std::string name() const override { return cfg_.name; }
    ChatResponse generate(const ChatRequest& req, const GenerationParams& params) override;

    /// Request body in the configured field names; exposed for tests.
    std::string build_body(const ChatRequest& req, const GenerationParams& params) const;

  private:
    ProviderConfig cfg_;
    std::shared_ptr<Transport> transport_;
    Clock& clock_;
};

/// Deterministic in-process model.
class MockChatBackend final : public ChatBackend {
  public:
    MockChatBackend(std::string name, MockBehavior behavior);

    std::string name() const override { return name_; }
    ChatResponse generate(const ChatRequest& req, const GenerationParams& params) override;

    /// Queue failures raised on the next calls, before normal behavior resumes.
    void fail_next(ProviderErrorKind kind, int times = 1);
    /// Next call returns an empty completion.
    void empty_next(int times = 1);
    std::size_t calls() const;

  private:
    std::string name_;
    MockBehavior behavior_;
    mutable std::mutex mutex_;
    std::deque<std::optional<ProviderErrorKind>> script_;  // nullopt = empty completion
    std::size_t calls_ = 0;
    std::size_t canned_index_ = 0;
};

/// Backend answering from a callable; handy for canned multi-stage scripts.
class FunctionChatBackend final : public ChatBackend {
  public:
    using Fn = std::function<std::string(const ChatRequest&)>;
    FunctionChatBackend(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

    std::string name() const override { return name_; }
    ChatResponse generate(const ChatRequest& req, const GenerationParams& params) override;

  private:
    std::string name_;
    Fn fn_;
};

// ---------------------------------------------------------------------------
// Record / replay
// ---------------------------------------------------------------------------

enum class CassetteMode { Record, Replay };

/// Line-delimited {"key","request","response"} records. Record appends (serialized)
/// and flushes each entry; Replay loads the file once and never touches the inner backend.
class Cassette {
  public:
    Cassette(CassetteMode mode, std::string path);

    CassetteMode mode() const noexcept { return mode_; }
    std::optional<ChatResponse> lookup(const std::string& key) const;
    void store(const std::string& key, std::string_view provider, const ChatRequest& req, const ChatResponse& resp);
    std::size_t size() const;

  private:
    CassetteMode mode_;
    std::string path_;
    mutable std::mutex mutex_;
    std::map<std::string, ChatResponse> entries_;
};

class CassetteBackend final : public ChatBackend {
  public:
    /// Replay mode: `inner` may be null.
    CassetteBackend(std::string name, std::shared_ptr<Cassette> cassette, std::shared_ptr<ChatBackend> inner);

    std::string name() const override { return name_; }
    ChatResponse generate(const ChatRequest& req, const GenerationParams& params) override;

  private:
    std::string name_;
    std::shared_ptr<Cassette> cassette_;
    std::shared_ptr<ChatBackend> inner_;
};

/// Wraps `inner` for recording, or builds a pure replay backend (inner ignored).
std::shared_ptr<ChatBackend> record_replay(CassetteMode mode, std::shared_ptr<Cassette> cassette,
                                           std::string provider_name, std::shared_ptr<ChatBackend> inner = nullptr);

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

/// Sliding 60-second window limiter. acquire() sleeps on the clock until a slot frees.
class RateLimiter {
  public:
    RateLimiter(int per_minute, Clock& clock) : per_minute_(per_minute), clock_(clock) {}
    void acquire();
    /// Issue timestamps still inside the window; for tests.
    std::vector<Clock::time_point> history() const;

  private:
    int per_minute_;
    Clock& clock_;
    mutable std::mutex mutex_;
    std::deque<Clock::time_point> issued_;
    std::vector<Clock::time_point> all_;
};

/// Uniform entry point over registered providers: retries transient failures with
/// exponential backoff and enforces per-provider rate caps. Shareable across threads.
class Gateway {
  public:
    explicit Gateway(Clock& clock) : clock_(clock) {}

    void add_provider(ProviderConfig cfg, std::shared_ptr<ChatBackend> backend);
    bool has_provider(std::string_view name) const;
    const ProviderConfig& config(std::string_view name) const;
    std::vector<std::string> providers() const;

    /// Retry rules: Timeout/Transport retry up to max_retries; an empty completion
    /// is retried at most once; Auth, Rejected and CacheMiss are surfaced immediately.
    ChatResponse generate_reply(std::string_view provider, const ChatRequest& req);

    Clock& clock() noexcept { return clock_; }

  private:
    struct Entry {
        ProviderConfig cfg;
        std::shared_ptr<ChatBackend> backend;
        std::unique_ptr<RateLimiter> limiter;
    };
    const Entry& entry(std::string_view name) const;

    Clock& clock_;
    mutable std::mutex mutex_;
    std::map<std::string, std::unique_ptr<Entry>, std::less<>> entries_;
};

/// Builds backends from configs: mock configs get MockChatBackend, others HttpChatBackend.
/// With a cassette, every backend is wrapped for record or replay.
void populate_gateway(Gateway& gateway, const std::vector<ProviderConfig>& configs,
                      std::shared_ptr<Transport> transport, std::shared_ptr<Cassette> cassette = nullptr);

/// Adapts a gateway provider into a prompt transformer (summarize/paraphrase/stylize).
class GatewayTransformer final : public TextTransformer {
  public:
    GatewayTransformer(Gateway& gateway, std::string provider) : gateway_(gateway), provider_(std::move(provider)) {}

    std::string name() const override { return provider_; }
    std::string transform(std::string_view text, VariantKind kind, std::string_view style) override;

    /// Instruction sent as the system prompt for a given kind.
    static std::string instruction(VariantKind kind, std::string_view style);

  private:
    Gateway& gateway_;
    std::string provider_;
};

}  // namespace chardial
