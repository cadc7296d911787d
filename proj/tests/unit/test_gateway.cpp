#include "doctest.h"
#include "httplib.h"

#include "chardial/gateway.hpp"
#include "chardial/sft.hpp"
#include "helpers.hpp"
#include "json.hpp"

#include <cstdlib>
#include <thread>

using namespace chardial;
using namespace std::chrono_literals;

namespace {

ProviderConfig mock_config(const std::string& name) {
    ProviderConfig c;
    c.name = name;
    c.mock = MockBehavior{};
    return c;
}

ChatRequest simple_request(std::string user = "hello") {
    ChatRequest r;
    r.system_prompt = "You are Aria.";
    r.history = {{Speaker::Character, "Welcome."}, {Speaker::Player, std::move(user)}};
    return r;
}

struct MockGateway {
    ManualClock clock;
    Gateway gateway{clock};
    std::shared_ptr<MockChatBackend> backend;

    explicit MockGateway(ProviderConfig cfg = mock_config("m")) {
        backend = std::make_shared<MockChatBackend>(cfg.name, *cfg.mock);
        gateway.add_provider(cfg, backend);
    }
};

/// Local chat endpoint; behavior chosen by request path.
class FakeProvider {
  public:
    FakeProvider() {
        server_.Post("/ok", [this](const httplib::Request& req, httplib::Response& res) {
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            const auto j = nlohmann::json::parse(req.body);
            nlohmann::json out;
            out["choices"][0]["message"]["content"] = "echo: " + j["messages"].back()["content"].get<std::string>();
            res.set_content(out.dump(), "application/json");
        });
        server_.Post("/custom", [](const httplib::Request& req, httplib::Response& res) {
            const auto j = nlohmann::json::parse(req.body);
            nlohmann::json out;
            out["output"]["text"] = j["dialog"].back()["says"].get<std::string>();
            res.set_content(out.dump(), "application/json");
        });
        server_.Post("/flaky", [this](const httplib::Request&, httplib::Response& res) {
            if (++flaky_calls_ <= 2) {
                res.status = 503;
                return;
            }
            res.set_content(R"({"choices":[{"message":{"content":"recovered"}}]})", "application/json");
        });
        server_.Post("/status/(\\d+)", [](const httplib::Request& req, httplib::Response& res) {
            res.status = std::stoi(req.matches[1]);
            res.set_content("{}", "application/json");
        });
        server_.Post("/notjson", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("<html>", "text/html");
        });
        server_.Post("/blank", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"choices":[{"message":{"content":"  "}}]})", "application/json");
        });
        server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
            std::this_thread::sleep_for(400ms);
            res.set_content(R"({"choices":[{"message":{"content":"late"}}]})", "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeProvider() {
        server_.stop();
        thread_.join();
    }

    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
    std::string last_body_;
    std::string last_auth_;
    int flaky_calls_ = 0;

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ProviderConfig http_config(const std::string& name, const std::string& endpoint) {
    ProviderConfig c;
    c.name = name;
    c.endpoint = endpoint;
    c.model = "fake-1";
    c.timeout_seconds = 5;
    c.backoff_initial = 100ms;
    return c;
}

ProviderErrorKind http_failure(FakeProvider& fake, const std::string& path, double timeout = 5) {
    ManualClock clock;
    Gateway g(clock);
    auto cfg = http_config("h", fake.url(path));
    cfg.max_retries = 0;
    cfg.timeout_seconds = timeout;
    g.add_provider(cfg, std::make_shared<HttpChatBackend>(cfg, std::make_shared<HttpTransport>(), clock));
    try {
        g.generate_reply("h", simple_request());
    } catch (const ProviderError& e) {
        return e.kind();
    }
    FAIL("expected ProviderError");
    return ProviderErrorKind::Config;
}

}  // namespace

TEST_SUITE("gateway") {
    TEST_CASE("provider config parsing") {
        const auto configs = parse_provider_configs(R"({"providers":[
            {"name":"alpha","endpoint":"http://x/v1","model":"a-1","credential_env":"ALPHA_KEY",
             "timeout_seconds":10,"max_retries":4,"requests_per_minute":30,"backoff_initial_ms":250,
             "temperature":0.2,"max_output_tokens":64,
             "adapter":{"messages_field":"dialog","response_text_path":"output/text"}},
            {"name":"local","mock":{"mode":"canned","replies":["one","two"]}}]})");
        REQUIRE(configs.size() == 2);
        const auto& a = configs[0];
        CHECK(a.model == "a-1");
        CHECK(a.max_retries == 4);
        CHECK(a.requests_per_minute == 30);
        CHECK(a.backoff_initial == 250ms);
        CHECK(a.defaults.temperature == 0.2);
        CHECK(a.adapter.messages_field == "dialog");
        CHECK(a.adapter.content_field == "content");
        CHECK(configs[1].model == "local");
        CHECK(configs[1].mock->replies.size() == 2);

        CHECK_THROWS_AS(parse_provider_configs(R"({"providers":[{"name":"x"}]})"), ValidationError);
        CHECK_THROWS_AS(parse_provider_configs(R"({"providers":[{"name":"x","mock":{}},{"name":"x","mock":{}}]})"),
                        ValidationError);
        CHECK_THROWS_AS(parse_provider_configs(R"({"providers":{}})"), ParseError);
        CHECK_THROWS_AS(parse_provider_configs(R"({"providers":[{"name":"x","mock":{"mode":"magic"}}]})"),
                        ParseError);
        CHECK_THROWS_AS(parse_provider_configs("nope"), ParseError);
    }

    TEST_CASE("request validation") {
        CHECK(validate_request(simple_request()).empty());
        ChatRequest player_first;
        player_first.history = {{Speaker::Player, "hi"}};
        CHECK_FALSE(validate_request(player_first).empty());
        ChatRequest opening;
        opening.system_prompt = "Generate a character.";
        CHECK(validate_request(opening).empty());
        ChatRequest ends_on_character;
        ends_on_character.history = {{Speaker::Character, "hi"}};
        CHECK_FALSE(validate_request(ends_on_character).empty());
        ChatRequest repeated;
        repeated.history = {{Speaker::Player, "a"}, {Speaker::Player, "b"}};
        CHECK_FALSE(validate_request(repeated).empty());
    }

    TEST_CASE("request keys") {
        const auto r = simple_request();
        CHECK(request_key("a", r) == request_key("a", r));
        CHECK(request_key("a", r).size() == 64);
        CHECK(request_key("a", r) != request_key("b", r));
        auto hot = r;
        hot.params = GenerationParams{1.0, 10};
        CHECK(request_key("a", r) != request_key("a", hot));
        CHECK(request_fingerprint("a", r).find("\"provider\":\"a\"") != std::string::npos);
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    TEST_CASE("echo and canned mocks") {
        MockGateway m;
        const auto r = m.gateway.generate_reply("m", simple_request("ping"));
        CHECK(r.text == "ping");
        CHECK(r.provider == "m");
        CHECK(r.attempt_count == 1);

        ProviderConfig canned = mock_config("c");
        canned.mock = MockBehavior{MockBehavior::Mode::Canned, {"x", "y"}};
        MockGateway c(canned);
        CHECK(c.gateway.generate_reply("c", simple_request()).text == "x");
        CHECK(c.gateway.generate_reply("c", simple_request()).text == "y");
        CHECK(c.gateway.generate_reply("c", simple_request()).text == "x");
        CHECK_THROWS_AS(MockChatBackend("bad", MockBehavior{MockBehavior::Mode::Canned, {}}), ValidationError);
    }

    TEST_CASE("unknown provider and invalid request") {
        MockGateway m;
        CHECK_THROWS_AS(m.gateway.generate_reply("nope", simple_request()), NotFoundError);
        ChatRequest bad;
        bad.history = {{Speaker::Character, "hi"}};
        CHECK_THROWS_AS(m.gateway.generate_reply("m", bad), ValidationError);
        CHECK(m.backend->calls() == 0);
        CHECK_THROWS_AS(m.gateway.add_provider(mock_config("m"), m.backend), ConflictError);
        CHECK(m.gateway.has_provider("m"));
        CHECK(m.gateway.providers() == std::vector<std::string>{"m"});
    }

    TEST_CASE("transient failures retry with exponential backoff") {
        auto cfg = mock_config("m");
        cfg.max_retries = 3;
        cfg.backoff_initial = 500ms;
        MockGateway m(cfg);
        m.backend->fail_next(ProviderErrorKind::Timeout, 2);
        m.backend->fail_next(ProviderErrorKind::Transport, 1);
        const auto r = m.gateway.generate_reply("m", simple_request());
        CHECK(r.attempt_count == 4);
        CHECK(m.backend->calls() == 4);
        CHECK(m.clock.total_slept() == 500ms + 1000ms + 2000ms);
    }

    TEST_CASE("retries are bounded") {
        auto cfg = mock_config("m");
        cfg.max_retries = 2;
        MockGateway m(cfg);
        m.backend->fail_next(ProviderErrorKind::Timeout, 5);
        try {
            m.gateway.generate_reply("m", simple_request());
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK(e.kind() == ProviderErrorKind::Timeout);
            CHECK(e.provider() == "m");
        }
        CHECK(m.backend->calls() == 3);
    }

    TEST_CASE("auth and rejection are not retried") {
        for (auto kind : {ProviderErrorKind::Auth, ProviderErrorKind::Rejected, ProviderErrorKind::CacheMiss}) {
            MockGateway m;
            m.backend->fail_next(kind, 1);
            CHECK_THROWS_AS(m.gateway.generate_reply("m", simple_request()), ProviderError);
            CHECK(m.backend->calls() == 1);
            CHECK(m.clock.total_slept() == 0ms);
        }
    }

    TEST_CASE("empty completion is retried once") {
        MockGateway once;
        once.backend->empty_next(1);
        CHECK(once.gateway.generate_reply("m", simple_request()).attempt_count == 2);
        CHECK(once.clock.total_slept() == 0ms);

        MockGateway twice;
        twice.backend->empty_next(2);
        try {
            twice.gateway.generate_reply("m", simple_request());
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK(e.kind() == ProviderErrorKind::EmptyCompletion);
        }
        CHECK(twice.backend->calls() == 2);
    }

    TEST_CASE("rate limiter spaces requests over a sliding minute") {
        auto cfg = mock_config("m");
        cfg.requests_per_minute = 3;
        MockGateway m(cfg);
        const auto t0 = m.clock.now();
        for (int i = 0; i < 7; ++i) {
            m.gateway.generate_reply("m", simple_request());
            m.clock.advance(1s);
        }
        // Three per window: requests at 0,1,2 s, then 60,61,62 s, then 120 s.
        CHECK(m.clock.now() - t0 == 121s);
        CHECK(m.backend->calls() == 7);

        ManualClock clock;
        RateLimiter limiter(2, clock);
        for (int i = 0; i < 5; ++i) limiter.acquire();
        const auto h = limiter.history();
        REQUIRE(h.size() == 5);
        CHECK(h[1] - h[0] == 0ms);
        CHECK(h[2] - h[0] == 60s);
        CHECK(h[4] - h[0] == 120s);
    }

    TEST_CASE("concurrent calls share the limiter") {
        auto cfg = mock_config("m");
        cfg.requests_per_minute = 1000;
        MockGateway m(cfg);
        std::vector<std::thread> threads;
        for (int t = 0; t < 4; ++t)
            threads.emplace_back([&] {
                for (int i = 0; i < 50; ++i) m.gateway.generate_reply("m", simple_request());
            });
        for (auto& t : threads) t.join();
        CHECK(m.backend->calls() == 200);
    }

    TEST_CASE("cassette record then replay") {
        test::TempDir dir;
        const auto path = dir.file("cassette.jsonl");
        std::vector<ProviderConfig> configs{mock_config("m")};
        std::string recorded;
        {
            ManualClock clock;
            Gateway g(clock);
            populate_gateway(g, configs, nullptr, std::make_shared<Cassette>(CassetteMode::Record, path));
            recorded = g.generate_reply("m", simple_request("one")).text;
            g.generate_reply("m", simple_request("two"));
        }
        ManualClock clock;
        Gateway g(clock);
        auto cassette = std::make_shared<Cassette>(CassetteMode::Replay, path);
        CHECK(cassette->size() == 2);
        populate_gateway(g, configs, nullptr, cassette);
        CHECK(g.generate_reply("m", simple_request("one")).text == recorded);
        try {
            g.generate_reply("m", simple_request("three"));
            FAIL("expected CacheMiss");
        } catch (const ProviderError& e) {
            CHECK(e.kind() == ProviderErrorKind::CacheMiss);
        }
        CHECK_THROWS_AS(cassette->store("k", "m", simple_request(), ChatResponse{}), StateError);
        CHECK_THROWS_AS(Cassette(CassetteMode::Replay, dir.file("missing.jsonl")), IoError);
        test::spit(dir.file("broken.jsonl"), "{\"key\":1}\n");
        CHECK_THROWS_AS(Cassette(CassetteMode::Replay, dir.file("broken.jsonl")), ParseError);
        CHECK_THROWS_AS(record_replay(CassetteMode::Record, cassette, "m"), StateError);
    }

    TEST_CASE("http provider without transport is a config error") {
        ManualClock clock;
        Gateway g(clock);
        try {
            populate_gateway(g, {http_config("h", "http://127.0.0.1:1/x")}, nullptr);
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK(e.kind() == ProviderErrorKind::Config);
        }
    }

    TEST_CASE("http backend body uses the adapter mapping") {
        ManualClock clock;
        auto cfg = http_config("h", "http://unused");
        cfg.adapter.messages_field = "dialog";
        cfg.adapter.content_field = "says";
        cfg.adapter.character_role = "bot";
        HttpChatBackend backend(cfg, std::make_shared<HttpTransport>(), clock);
        const auto body = nlohmann::json::parse(backend.build_body(simple_request(), GenerationParams{0.5, 99}));
        CHECK(body["model"] == "fake-1");
        CHECK(body["temperature"] == 0.5);
        CHECK(body["max_tokens"] == 99);
        REQUIRE(body["dialog"].size() == 3);
        CHECK(body["dialog"][0]["role"] == "system");
        CHECK(body["dialog"][1]["role"] == "bot");
        CHECK(body["dialog"][2]["says"] == "hello");
    }

    TEST_CASE("http backend against a local endpoint") {
        FakeProvider fake;
        ManualClock clock;
        Gateway g(clock);
        auto transport = std::make_shared<HttpTransport>();
        auto ok = http_config("ok", fake.url("/ok"));
        ok.credential_env = "CHARDIAL_TEST_KEY";
        ::setenv("CHARDIAL_TEST_KEY", "sekret", 1);
        auto custom = http_config("custom", fake.url("/custom"));
        custom.adapter.messages_field = "dialog";
        custom.adapter.content_field = "says";
        custom.adapter.response_text_path = "output/text";
        auto flaky = http_config("flaky", fake.url("/flaky"));
        flaky.max_retries = 2;
        populate_gateway(g, {ok, custom, flaky}, transport);

        const auto r = g.generate_reply("ok", simple_request("ping"));
        CHECK(r.text == "echo: ping");
        CHECK(fake.last_auth_ == "Bearer sekret");
        CHECK(nlohmann::json::parse(fake.last_body_)["temperature"] == kDefaultTemperature);
        CHECK(g.generate_reply("custom", simple_request("pong")).text == "pong");

        const auto f = g.generate_reply("flaky", simple_request());
        CHECK(f.text == "recovered");
        CHECK(f.attempt_count == 3);
        CHECK(clock.total_slept() == 300ms);
        CHECK(transport->requests() == 5);

        ::unsetenv("CHARDIAL_TEST_KEY");
        try {
            g.generate_reply("ok", simple_request());
            FAIL("expected auth failure");
        } catch (const ProviderError& e) {
            CHECK(e.kind() == ProviderErrorKind::Auth);
        }
        CHECK(transport->requests() == 5);
    }

    TEST_CASE("http status mapping") {
        FakeProvider fake;
        CHECK(http_failure(fake, "/status/401") == ProviderErrorKind::Auth);
        CHECK(http_failure(fake, "/status/403") == ProviderErrorKind::Auth);
        CHECK(http_failure(fake, "/status/400") == ProviderErrorKind::Rejected);
        CHECK(http_failure(fake, "/status/404") == ProviderErrorKind::Rejected);
        CHECK(http_failure(fake, "/status/429") == ProviderErrorKind::Transport);
        CHECK(http_failure(fake, "/status/500") == ProviderErrorKind::Transport);
        CHECK(http_failure(fake, "/status/504") == ProviderErrorKind::Timeout);
        CHECK(http_failure(fake, "/notjson") == ProviderErrorKind::Rejected);
        CHECK(http_failure(fake, "/blank") == ProviderErrorKind::EmptyCompletion);
        CHECK(http_failure(fake, "/slow", 0.1) == ProviderErrorKind::Timeout);
    }

    TEST_CASE("unreachable endpoint is a transport error") {
        ManualClock clock;
        HttpChatBackend backend(http_config("h", "http://127.0.0.1:1/x"), std::make_shared<HttpTransport>(), clock);
        try {
            backend.generate(simple_request(), {});
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK(e.retryable());
        }
        HttpChatBackend malformed(http_config("h", "no-scheme"), std::make_shared<HttpTransport>(), clock);
        CHECK_THROWS_AS(malformed.generate(simple_request(), {}), ProviderError);
    }
}
