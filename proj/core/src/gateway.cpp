#include "chardial/gateway.hpp"

#include "chardial/sft.hpp"
#include "chardial/text.hpp"
#include "json_util.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <filesystem>

namespace chardial {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

std::vector<Violation> validate_config(const ProviderConfig& cfg) {
    std::vector<Violation> out;
    if (trim(cfg.name).empty()) out.push_back({"name", "name empty"});
    if (!cfg.mock && trim(cfg.endpoint).empty()) out.push_back({"endpoint", "endpoint empty"});
    if (!(cfg.timeout_seconds > 0)) out.push_back({"timeout_seconds", "timeout must be positive"});
    if (cfg.max_retries < 0) out.push_back({"max_retries", "retries must be non-negative"});
    if (cfg.requests_per_minute < 0) out.push_back({"requests_per_minute", "rate cap must be non-negative"});
    if (cfg.backoff_initial.count() < 0) out.push_back({"backoff_initial_ms", "backoff must be non-negative"});
    if (cfg.defaults.temperature < 0) out.push_back({"temperature", "temperature must be non-negative"});
    if (cfg.defaults.max_output_tokens <= 0) out.push_back({"max_output_tokens", "max output tokens must be positive"});
    if (cfg.mock && cfg.mock->mode == MockBehavior::Mode::Canned && cfg.mock->replies.empty())
        out.push_back({"mock.replies", "canned mock needs replies"});
    return out;
}

namespace {

ProviderConfig config_from_json(const detail::json& j) {
    ProviderConfig c;
    c.name = detail::get_field<std::string>(j, "name", "provider");
    c.endpoint = detail::field_or<std::string>(j, "endpoint", "");
    c.model = detail::field_or<std::string>(j, "model", c.name);
    c.credential_env = detail::field_or<std::string>(j, "credential_env", "");
    c.timeout_seconds = detail::field_or<double>(j, "timeout_seconds", c.timeout_seconds);
    c.max_retries = detail::field_or<int>(j, "max_retries", c.max_retries);
    c.requests_per_minute = detail::field_or<int>(j, "requests_per_minute", c.requests_per_minute);
    c.backoff_initial = std::chrono::milliseconds(
        detail::field_or<std::int64_t>(j, "backoff_initial_ms", c.backoff_initial.count()));
    c.defaults.temperature = detail::field_or<double>(j, "temperature", c.defaults.temperature);
    c.defaults.max_output_tokens = detail::field_or<int>(j, "max_output_tokens", c.defaults.max_output_tokens);

    if (const auto it = j.find("adapter"); it != j.end()) {
        auto& a = c.adapter;
        const auto& aj = *it;
        a.messages_field = detail::field_or(aj, "messages_field", a.messages_field);
        a.model_field = detail::field_or(aj, "model_field", a.model_field);
        a.temperature_field = detail::field_or(aj, "temperature_field", a.temperature_field);
        a.max_tokens_field = detail::field_or(aj, "max_tokens_field", a.max_tokens_field);
        a.role_field = detail::field_or(aj, "role_field", a.role_field);
        a.content_field = detail::field_or(aj, "content_field", a.content_field);
        a.system_role = detail::field_or(aj, "system_role", a.system_role);
        a.character_role = detail::field_or(aj, "character_role", a.character_role);
        a.player_role = detail::field_or(aj, "player_role", a.player_role);
        a.response_text_path = detail::field_or(aj, "response_text_path", a.response_text_path);
        a.auth_header = detail::field_or(aj, "auth_header", a.auth_header);
        a.auth_prefix = detail::field_or(aj, "auth_prefix", a.auth_prefix);
    }
    if (const auto it = j.find("mock"); it != j.end() && !it->is_null()) {
        MockBehavior m;
        const auto mode = detail::field_or<std::string>(*it, "mode", "echo");
        if (mode == "echo") {
            m.mode = MockBehavior::Mode::Echo;
        } else if (mode == "canned") {
            m.mode = MockBehavior::Mode::Canned;
        } else {
            throw ParseError("provider '" + c.name + "': unknown mock mode '" + mode + "'", 0);
        }
        m.replies = detail::field_or<std::vector<std::string>>(*it, "replies", {});
        c.mock = std::move(m);
    }
    return c;
}

}  // namespace

std::vector<ProviderConfig> parse_provider_configs(std::string_view json_text) {
    const auto j = detail::parse_json(json_text, "provider config");
    const auto list = detail::get_field<detail::json>(j, "providers", "provider config");
    if (!list.is_array()) throw ParseError("provider config: 'providers' must be an array", 0);
    std::vector<ProviderConfig> out;
    for (const auto& item : list) {
        ProviderConfig c;
        try {
            c = config_from_json(item);
        } catch (const detail::json::exception& e) {
            throw ParseError(std::string("provider config: ") + e.what(), 0);
        }
        if (auto v = validate_config(c); !v.empty())
            throw ValidationError("provider '" + c.name + "' is misconfigured", std::move(v));
        for (const auto& prev : out)
            if (prev.name == c.name) throw ValidationError(Violation{"name", "duplicate provider '" + c.name + "'"});
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ProviderConfig> load_provider_configs(const std::string& path) {
    return parse_provider_configs(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Requests and errors
// ---------------------------------------------------------------------------

std::vector<Violation> validate_request(const ChatRequest& req) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < req.history.size(); ++i) {
        const auto field = "history[" + std::to_string(i) + "]";
        const Speaker expected = i % 2 == 0 ? Speaker::Character : Speaker::Player;
        if (req.history[i].speaker != expected)
            out.push_back({field, i == 0 ? "first turn not by character" : "alternation broken at index " + std::to_string(i)});
        if (trim(req.history[i].text).empty()) out.push_back({field, "empty text at index " + std::to_string(i)});
    }
    if (!req.history.empty() && req.history.back().speaker != Speaker::Player)
        out.push_back({"history", "history must end on a player turn"});
    if (req.params && req.params->max_output_tokens <= 0)
        out.push_back({"params.max_output_tokens", "max output tokens must be positive"});
    if (req.params && req.params->temperature < 0)
        out.push_back({"params.temperature", "temperature must be non-negative"});
    return out;
}

std::string_view to_string(ProviderErrorKind k) noexcept {
    switch (k) {
        case ProviderErrorKind::Auth: return "auth";
        case ProviderErrorKind::Timeout: return "timeout";
        case ProviderErrorKind::Rejected: return "rejected";
        case ProviderErrorKind::EmptyCompletion: return "empty-completion";
        case ProviderErrorKind::Transport: return "transport";
        case ProviderErrorKind::CacheMiss: return "cache-miss";
        case ProviderErrorKind::Config: return "config";
    }
    return "unknown";
}

ProviderError::ProviderError(ProviderErrorKind kind, std::string provider, const std::string& detail)
    : Error(provider + ": " + std::string(to_string(kind)) + (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      provider_(std::move(provider)) {}

bool ProviderError::retryable() const noexcept {
    return kind_ == ProviderErrorKind::Timeout || kind_ == ProviderErrorKind::Transport ||
           kind_ == ProviderErrorKind::EmptyCompletion;
}

namespace {

detail::json params_json(const GenerationParams& p) {
    detail::json j;
    j["max_output_tokens"] = p.max_output_tokens;
    j["temperature"] = p.temperature;
    return j;
}

detail::json request_json(const ChatRequest& req) {
    detail::json j;
    auto history = detail::json::array();
    for (const auto& t : req.history) {
        detail::json h;
        h["speaker"] = to_string(t.speaker);
        h["text"] = t.text;
        history.push_back(std::move(h));
    }
    j["history"] = std::move(history);
    j["params"] = req.params ? params_json(*req.params) : detail::json(nullptr);
    j["system_prompt"] = req.system_prompt;
    return j;
}

detail::json response_json(const ChatResponse& r) {
    detail::json j;
    j["text"] = r.text;
    j["provider"] = r.provider;
    j["latency_ms"] = r.latency_ms;
    j["raw_payload"] = r.raw_payload;
    j["attempt_count"] = r.attempt_count;
    return j;
}

ChatResponse response_from_json(const detail::json& j) {
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    r.provider = j.at("provider").get<std::string>();
    r.latency_ms = j.at("latency_ms").get<std::int64_t>();
    r.raw_payload = j.at("raw_payload").get<std::string>();
    r.attempt_count = j.at("attempt_count").get<int>();
    return r;
}

}  // namespace

std::string request_fingerprint(std::string_view provider, const ChatRequest& req) {
    // Keys sorted so that the text is canonical.
    nlohmann::json j = nlohmann::json::parse(detail::dump_line(request_json(req)));
    j["provider"] = provider;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

std::string request_key(std::string_view provider, const ChatRequest& req) {
    return sha256_hex(request_fingerprint(provider, req));
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

HttpResult HttpTransport::post(const std::string& url, const std::vector<std::pair<std::string, std::string>>& headers,
                               const std::string& body, std::chrono::milliseconds timeout) {
    ++requests_;
    HttpResult out;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        out.error = "malformed URL '" + url + "'";
        return out;
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    if (!res) {
        const auto err = res.error();
        out.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
        out.error = httplib::to_string(err);
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

HttpChatBackend::HttpChatBackend(ProviderConfig cfg, std::shared_ptr<Transport> transport, Clock& clock)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), clock_(clock) {
    if (!transport_) throw Error("HttpChatBackend needs a transport");
}

std::string HttpChatBackend::build_body(const ChatRequest& req, const GenerationParams& params) const {
    const auto& a = cfg_.adapter;
    auto messages = detail::json::array();
    const auto message = [&](const std::string& role, const std::string& content) {
        detail::json m;
        m[a.role_field] = role;
        m[a.content_field] = content;
        return m;
    };
    if (!req.system_prompt.empty()) messages.push_back(message(a.system_role, req.system_prompt));
    for (const auto& t : req.history)
        messages.push_back(message(t.speaker == Speaker::Character ? a.character_role : a.player_role, t.text));
    detail::json body;
    body[a.model_field] = cfg_.model;
    body[a.messages_field] = std::move(messages);
    body[a.temperature_field] = params.temperature;
    body[a.max_tokens_field] = params.max_output_tokens;
    return detail::dump_line(body);
}

namespace {

std::optional<std::string> extract_path(const detail::json& root, const std::string& path) {
    const detail::json* cur = &root;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto slash = path.find('/', start);
        const auto part = path.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
        if (cur->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(part);
            } catch (const std::exception&) {
                return std::nullopt;
            }
            if (idx >= cur->size()) return std::nullopt;
            cur = &(*cur)[idx];
        } else if (cur->is_object()) {
            const auto it = cur->find(part);
            if (it == cur->end()) return std::nullopt;
            cur = &*it;
        } else {
            return std::nullopt;
        }
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
    if (!cur->is_string()) return std::nullopt;
    return cur->get<std::string>();
}

}  // namespace

ChatResponse HttpChatBackend::generate(const ChatRequest& req, const GenerationParams& params) {
    std::vector<std::pair<std::string, std::string>> headers;
    if (!cfg_.credential_env.empty()) {
        const char* key = std::getenv(cfg_.credential_env.c_str());
        if (!key || !*key)
            throw ProviderError(ProviderErrorKind::Auth, cfg_.name,
                                "credential variable " + cfg_.credential_env + " is not set");
        headers.emplace_back(cfg_.adapter.auth_header, cfg_.adapter.auth_prefix + key);
    }
    const auto started = clock_.now();
    const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(cfg_.timeout_seconds * 1000)));
    const HttpResult res = transport_->post(cfg_.endpoint, headers, build_body(req, params), timeout);
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(clock_.now() - started).count();

    if (res.timed_out) throw ProviderError(ProviderErrorKind::Timeout, cfg_.name, res.error);
    if (res.status == 0) throw ProviderError(ProviderErrorKind::Transport, cfg_.name, res.error);
    if (res.status == 401 || res.status == 403)
        throw ProviderError(ProviderErrorKind::Auth, cfg_.name, "HTTP " + std::to_string(res.status));
    if (res.status == 408 || res.status == 504)
        throw ProviderError(ProviderErrorKind::Timeout, cfg_.name, "HTTP " + std::to_string(res.status));
    if (res.status == 429 || res.status >= 500)
        throw ProviderError(ProviderErrorKind::Transport, cfg_.name, "HTTP " + std::to_string(res.status));
    if (res.status < 200 || res.status >= 300)
        throw ProviderError(ProviderErrorKind::Rejected, cfg_.name, "HTTP " + std::to_string(res.status));

    detail::json payload;
    try {
        payload = detail::json::parse(res.body);
    } catch (const detail::json::exception&) {
        throw ProviderError(ProviderErrorKind::Rejected, cfg_.name, "response is not JSON");
    }
    const auto text = extract_path(payload, cfg_.adapter.response_text_path);
    if (!text || trim(*text).empty()) throw ProviderError(ProviderErrorKind::EmptyCompletion, cfg_.name, "");

    ChatResponse r;
    r.text = *text;
    r.provider = cfg_.name;
    r.latency_ms = latency;
    r.raw_payload = res.body;
    return r;
}

// ---------------------------------------------------------------------------
// Mock backends
// ---------------------------------------------------------------------------

MockChatBackend::MockChatBackend(std::string name, MockBehavior behavior)
    : name_(std::move(name)), behavior_(std::move(behavior)) {
    if (behavior_.mode == MockBehavior::Mode::Canned && behavior_.replies.empty())
        throw ValidationError(Violation{"mock.replies", "canned mock needs replies"});
}

ChatResponse MockChatBackend::generate(const ChatRequest& req, const GenerationParams&) {
    std::lock_guard lock(mutex_);
    ++calls_;
    if (!script_.empty()) {
        const auto step = script_.front();
        script_.pop_front();
        if (step) throw ProviderError(*step, name_, "scripted failure");
        throw ProviderError(ProviderErrorKind::EmptyCompletion, name_, "scripted empty completion");
    }
    ChatResponse r;
    r.provider = name_;
    if (behavior_.mode == MockBehavior::Mode::Echo) {
        r.text = req.system_prompt;
        for (auto it = req.history.rbegin(); it != req.history.rend(); ++it) {
            if (it->speaker == Speaker::Player) {
                r.text = it->text;
                break;
            }
        }
    } else {
        r.text = behavior_.replies[canned_index_++ % behavior_.replies.size()];
    }
    detail::json raw;
    raw["mock"] = r.text;
    r.raw_payload = detail::dump_line(raw);
    return r;
}

void MockChatBackend::fail_next(ProviderErrorKind kind, int times) {
    std::lock_guard lock(mutex_);
    for (int i = 0; i < times; ++i) script_.push_back(kind);
}

void MockChatBackend::empty_next(int times) {
    std::lock_guard lock(mutex_);
    for (int i = 0; i < times; ++i) script_.push_back(std::nullopt);
}

std::size_t MockChatBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

ChatResponse FunctionChatBackend::generate(const ChatRequest& req, const GenerationParams&) {
    ChatResponse r;
    r.text = fn_(req);
    r.provider = name_;
    if (trim(r.text).empty()) throw ProviderError(ProviderErrorKind::EmptyCompletion, name_, "");
    return r;
}

// ---------------------------------------------------------------------------
// Cassette
// ---------------------------------------------------------------------------

Cassette::Cassette(CassetteMode mode, std::string path) : mode_(mode), path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) {
        if (mode_ == CassetteMode::Replay) throw IoError("cassette '" + path_ + "' does not exist");
        return;
    }
    std::size_t line_no = 0;
    const auto content = detail::read_file(path_);
    for (auto line : split_lines(content)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = detail::parse_json(line, "cassette");
            entries_[j.at("key").get<std::string>()] = response_from_json(j.at("response"));
        } catch (const detail::json::exception& e) {
            throw ParseError("cassette line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
}

std::optional<ChatResponse> Cassette::lookup(const std::string& key) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void Cassette::store(const std::string& key, std::string_view provider, const ChatRequest& req,
                     const ChatResponse& resp) {
    if (mode_ != CassetteMode::Record) throw StateError("cassette is read-only in replay mode");
    detail::json j;
    j["key"] = key;
    j["provider"] = provider;
    j["request"] = request_json(req);
    j["response"] = response_json(resp);
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << detail::dump_line(j) << '\n';
    out.flush();
    if (!out) throw IoError("cannot write cassette '" + path_ + "'");
    entries_[key] = resp;
}

std::size_t Cassette::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

CassetteBackend::CassetteBackend(std::string name, std::shared_ptr<Cassette> cassette,
                                 std::shared_ptr<ChatBackend> inner)
    : name_(std::move(name)), cassette_(std::move(cassette)), inner_(std::move(inner)) {
    if (!cassette_) throw Error("CassetteBackend needs a cassette");
    if (cassette_->mode() == CassetteMode::Record && !inner_) throw Error("recording needs an inner backend");
}

ChatResponse CassetteBackend::generate(const ChatRequest& req, const GenerationParams& params) {
    ChatRequest keyed = req;
    keyed.params = params;
    const auto key = request_key(name_, keyed);
    if (cassette_->mode() == CassetteMode::Replay) {
        auto hit = cassette_->lookup(key);
        if (!hit) throw ProviderError(ProviderErrorKind::CacheMiss, name_, "no recording for key " + key);
        return *hit;
    }
    auto resp = inner_->generate(req, params);
    cassette_->store(key, name_, keyed, resp);
    return resp;
}

std::shared_ptr<ChatBackend> record_replay(CassetteMode mode, std::shared_ptr<Cassette> cassette,
                                           std::string provider_name, std::shared_ptr<ChatBackend> inner) {
    if (!cassette) throw Error("record_replay needs a cassette");
    if (cassette->mode() != mode) throw StateError("cassette mode does not match the requested mode");
    if (mode == CassetteMode::Replay) inner.reset();
    return std::make_shared<CassetteBackend>(std::move(provider_name), std::move(cassette), std::move(inner));
}

// ---------------------------------------------------------------------------
// Rate limiting and the gateway
// ---------------------------------------------------------------------------

void RateLimiter::acquire() {
    constexpr auto kWindow = std::chrono::seconds(60);
    for (;;) {
        Clock::duration wait{};
        {
            std::lock_guard lock(mutex_);
            const auto now = clock_.now();
            while (!issued_.empty() && issued_.front() + kWindow <= now) issued_.pop_front();
            if (per_minute_ <= 0 || issued_.size() < static_cast<std::size_t>(per_minute_)) {
                issued_.push_back(now);
                all_.push_back(now);
                return;
            }
            wait = issued_.front() + kWindow - now;
        }
        clock_.sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(wait));
    }
}

std::vector<Clock::time_point> RateLimiter::history() const {
    std::lock_guard lock(mutex_);
    return all_;
}

void Gateway::add_provider(ProviderConfig cfg, std::shared_ptr<ChatBackend> backend) {
    if (auto v = validate_config(cfg); !v.empty())
        throw ValidationError("provider '" + cfg.name + "' is misconfigured", std::move(v));
    if (!backend) throw Error("provider '" + cfg.name + "' has no backend");
    auto e = std::make_unique<Entry>();
    e->limiter = std::make_unique<RateLimiter>(cfg.requests_per_minute, clock_);
    e->cfg = std::move(cfg);
    e->backend = std::move(backend);
    std::lock_guard lock(mutex_);
    if (entries_.count(e->cfg.name)) throw ConflictError("provider '" + e->cfg.name + "' already registered");
    const auto name = e->cfg.name;
    entries_[name] = std::move(e);
}

bool Gateway::has_provider(std::string_view name) const {
    std::lock_guard lock(mutex_);
    return entries_.find(name) != entries_.end();
}

const Gateway::Entry& Gateway::entry(std::string_view name) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw NotFoundError("unknown provider '" + std::string(name) + "'");
    return *it->second;
}

const ProviderConfig& Gateway::config(std::string_view name) const { return entry(name).cfg; }

std::vector<std::string> Gateway::providers() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

ChatResponse Gateway::generate_reply(std::string_view provider, const ChatRequest& req) {
    if (auto v = validate_request(req); !v.empty()) throw ValidationError("invalid chat request", std::move(v));
    const Entry& e = entry(provider);
    const GenerationParams params = req.params.value_or(e.cfg.defaults);

    int attempts = 0;
    int retries_used = 0;
    bool empty_retried = false;
    for (;;) {
        e.limiter->acquire();
        ++attempts;
        try {
            ChatResponse r = e.backend->generate(req, params);
            if (trim(r.text).empty()) throw ProviderError(ProviderErrorKind::EmptyCompletion, e.cfg.name, "");
            r.provider = e.cfg.name;
            r.attempt_count = attempts;
            return r;
        } catch (const ProviderError& err) {
            if (err.kind() == ProviderErrorKind::EmptyCompletion) {
                if (empty_retried) throw;
                empty_retried = true;
                continue;
            }
            if (!err.retryable() || retries_used >= e.cfg.max_retries) throw;
            const auto delay = e.cfg.backoff_initial * (std::int64_t{1} << std::min(retries_used, 20));
            ++retries_used;
            clock_.sleep_for(delay);
        }
    }
}

void populate_gateway(Gateway& gateway, const std::vector<ProviderConfig>& configs,
                      std::shared_ptr<Transport> transport, std::shared_ptr<Cassette> cassette) {
    for (const auto& cfg : configs) {
        std::shared_ptr<ChatBackend> backend;
        if (cassette && cassette->mode() == CassetteMode::Replay) {
            backend = record_replay(CassetteMode::Replay, cassette, cfg.name);
        } else {
            if (cfg.mock) {
                backend = std::make_shared<MockChatBackend>(cfg.name, *cfg.mock);
            } else {
                if (!transport) throw ProviderError(ProviderErrorKind::Config, cfg.name, "no transport available");
                backend = std::make_shared<HttpChatBackend>(cfg, transport, gateway.clock());
            }
            if (cassette) backend = record_replay(CassetteMode::Record, cassette, cfg.name, backend);
        }
        gateway.add_provider(cfg, std::move(backend));
    }
}

// ---------------------------------------------------------------------------
// Transformer adapter
// ---------------------------------------------------------------------------

std::string GatewayTransformer::instruction(VariantKind kind, std::string_view style) {
    switch (kind) {
        case VariantKind::Summarized:
            return "Summarize the following character description. Keep every fact needed to play the character "
                   "and reply with the summary only.";
        case VariantKind::Paraphrased:
            return "Rewrite the following character description in different words without adding or removing "
                   "facts. Reply with the rewritten description only.";
        case VariantKind::Stylized: {
            std::string out = "Rewrite the following character description";
            if (!style.empty()) {
                out += " in this style: ";
                out += style;
                out += ".";
            } else {
                out += " in a distinctive personal voice.";
            }
            out += " Keep every fact. Reply with the rewritten description only.";
            return out;
        }
        case VariantKind::Canonical: break;
    }
    throw ValidationError(Violation{"kind", "no instruction for canonical variants"});
}

std::string GatewayTransformer::transform(std::string_view text, VariantKind kind, std::string_view style) {
    ChatRequest req;
    req.system_prompt = instruction(kind, style) + "\n\n" + std::string(text);
    return gateway_.generate_reply(provider_, req).text;
}

}  // namespace chardial
