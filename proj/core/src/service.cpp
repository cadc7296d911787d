#include "chardial/service.hpp"

#include "chardial/report.hpp"
#include "chardial/text.hpp"
#include "json_util.hpp"

#include <httplib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

namespace chardial {

std::string_view to_string(SessionMode m) noexcept {
    switch (m) {
        case SessionMode::Single: return "single";
        case SessionMode::Pairwise: return "pairwise";
        case SessionMode::Prototype: return "prototype";
    }
    return "unknown";
}

namespace {

std::optional<SessionMode> parse_mode(std::string_view s) {
    if (s == "single") return SessionMode::Single;
    if (s == "pairwise") return SessionMode::Pairwise;
    if (s == "prototype") return SessionMode::Prototype;
    return std::nullopt;
}

}  // namespace

ServiceConfig load_service_config(const std::string& path) {
    const auto j = detail::parse_json(detail::read_file(path), "service config");
    ServiceConfig c;
    try {
        c.host = detail::field_or<std::string>(j, "host", c.host);
        c.port = detail::field_or<int>(j, "port", c.port);
        c.storage_dir = detail::get_field<std::string>(j, "storage_dir", "service config");
        c.providers_path = detail::field_or<std::string>(j, "providers", "");
        c.seed = detail::field_or<std::uint64_t>(j, "seed", 0);
        c.shared_token = detail::field_or<std::string>(j, "shared_token", "");
        c.token_ttl = std::chrono::seconds(detail::field_or<std::int64_t>(j, "token_ttl_seconds", c.token_ttl.count()));
        c.cassette_path = detail::opt_field<std::string>(j, "cassette");
        const auto mode = detail::field_or<std::string>(j, "cassette_mode", "replay");
        if (mode == "replay") {
            c.cassette_mode = CassetteMode::Replay;
        } else if (mode == "record") {
            c.cassette_mode = CassetteMode::Record;
        } else {
            throw ParseError("service config: cassette_mode must be 'record' or 'replay'", 0);
        }
    } catch (const detail::json::exception& e) {
        throw ParseError(std::string("service config: ") + e.what(), 0);
    }
    // Relative paths are resolved against the config file's directory.
    const auto base = std::filesystem::path(path).parent_path();
    const auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
    };
    resolve(c.storage_dir);
    resolve(c.providers_path);
    if (c.cassette_path) resolve(*c.cassette_path);
    return c;
}

// ---------------------------------------------------------------------------
// Service core
// ---------------------------------------------------------------------------

namespace {

using detail::json;

/// Raised inside handlers and mapped to an HTTP status.
struct HttpError {
    int status;
    std::string code;
    std::string message;
    std::vector<Violation> violations;
};

[[noreturn]] void fail(int status, std::string code, std::string message) {
    throw HttpError{status, std::move(code), std::move(message), {}};
}

std::string url_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') {
            out += ' ';
        } else if (s[i] == '%' && i + 2 < s.size() + 0 && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
                   std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
            i += 2;
        } else {
            out += s[i];
        }
    }
    return out;
}

struct Target {
    std::vector<std::string> segments;
    std::map<std::string, std::string> query;
};

Target parse_target(const std::string& raw) {
    Target t;
    const auto q = raw.find('?');
    const std::string_view path = std::string_view(raw).substr(0, q);
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto slash = path.find('/', start);
        const auto seg = path.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
        if (!seg.empty()) t.segments.push_back(url_decode(seg));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    if (q != std::string::npos) {
        const std::string_view query = std::string_view(raw).substr(q + 1);
        std::size_t pos = 0;
        while (pos <= query.size()) {
            const auto amp = query.find('&', pos);
            const auto pair = query.substr(pos, amp == std::string_view::npos ? std::string_view::npos : amp - pos);
            if (!pair.empty()) {
                const auto eq = pair.find('=');
                if (eq == std::string_view::npos) {
                    t.query[url_decode(pair)] = "";
                } else {
                    t.query[url_decode(pair.substr(0, eq))] = url_decode(pair.substr(eq + 1));
                }
            }
            if (amp == std::string_view::npos) break;
            pos = amp + 1;
        }
    }
    return t;
}

std::string random_token() {
    std::random_device rd;
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < 32; ++i) out += kHex[rd() & 0xF];
    return out;
}

json violations_json(const std::vector<Violation>& v) {
    auto arr = json::array();
    for (const auto& x : v) arr.push_back(json{{"field", x.field}, {"rule", x.rule}});
    return arr;
}

json session_json(const DialogueSession& s) { return detail::parse_json(session_to_json_line(s), "session"); }

std::int64_t to_ms(Clock::time_point t) { return t.time_since_epoch().count(); }

template <typename T>
T body_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) fail(400, "bad_request", std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        fail(400, "bad_request", std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T body_field_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        fail(400, "bad_request", std::string("field '") + key + "' has the wrong type");
    }
}

std::optional<GenerationParams> params_from(const json& j) {
    const auto it = j.find("params");
    if (it == j.end() || it->is_null()) return std::nullopt;
    GenerationParams p;
    p.temperature = body_field_or<double>(*it, "temperature", p.temperature);
    p.max_output_tokens = body_field_or<int>(*it, "max_output_tokens", p.max_output_tokens);
    return p;
}

json params_json(const std::optional<GenerationParams>& p) {
    if (!p) return nullptr;
    return json{{"temperature", p->temperature}, {"max_output_tokens", p->max_output_tokens}};
}

json pending_json(const PendingTurn& p) {
    return json{{"turn_index", p.turn_index},
                {"user_text", p.user_text},
                {"a", {{"model", p.a.model}, {"text", p.a.text}}},
                {"b", {{"model", p.b.model}, {"text", p.b.text}}},
                {"position_draw", p.position_draw}};
}

PendingTurn pending_from(const json& j) {
    PendingTurn p;
    p.turn_index = j.at("turn_index").get<int>();
    p.user_text = j.at("user_text").get<std::string>();
    p.a = {j.at("a").at("model").get<std::string>(), j.at("a").at("text").get<std::string>()};
    p.b = {j.at("b").at("model").get<std::string>(), j.at("b").at("text").get<std::string>()};
    p.position_draw = j.at("position_draw").get<int>();
    return p;
}

std::string verdict_label(const PairwiseChoice& c) {
    return c.verdict == Verdict::AWins ? "A" : c.verdict == Verdict::BWins ? "B" : "Tie";
}

}  // namespace

struct AnnotationService::Impl {
    struct Session {
        SessionMode mode = SessionMode::Single;
        std::string annotator;
        std::string token;
        Clock::time_point expiry;
        std::string model;  // single / prototype
        std::optional<GenerationParams> params;
        DialogueSession dialogue;                 // single / prototype transcript
        std::unique_ptr<PairwiseState> pairwise;  // pairwise only
        std::unique_ptr<DeterministicRng> rng;
        std::mutex write_mutex;  // serializes slow writes (gateway calls) per session
    };

    ServiceConfig config;
    Gateway& gateway;
    Clock& clock;
    std::string log_path;
    std::unique_ptr<EventLog> log;

    mutable std::mutex mutex;
    std::map<std::string, std::unique_ptr<Session>> sessions;
    std::size_t session_counter = 0;
    std::vector<PointwiseRating> ratings;
    std::vector<FineGrainedTag> tags;
    std::set<std::tuple<std::string, std::string, int>> tag_keys;
    ColloquializationQueue colloquialization;
    std::vector<std::string> colloquialization_ids;
    RefinementLedger refinements;

    Impl(ServiceConfig cfg, Gateway& gw, Clock& clk) : config(std::move(cfg)), gateway(gw), clock(clk) {
        if (config.storage_dir.empty() || !std::filesystem::is_directory(config.storage_dir))
            throw IoError("storage directory '" + config.storage_dir + "' does not exist");
        log_path = (std::filesystem::path(config.storage_dir) / "events.jsonl").string();
        log = std::make_unique<EventLog>(log_path);
        const auto lines = log->lines();
        for (std::size_t i = 0; i < lines.size(); ++i) {
            try {
                apply_event(detail::parse_json(lines[i], "event"));
            } catch (const std::exception& e) {
                throw ParseError("event log line " + std::to_string(i + 1) + ": " + e.what(), i + 1);
            }
        }
    }

    // -- events ---------------------------------------------------------------

    void record(json event) { log->append(detail::dump_line(event)); }

    /// Applies one event to in-memory state. Shared by live requests and replay so
    /// both paths produce the same state.
    void apply_event(const json& e) {
        const auto type = e.at("event").get<std::string>();
        if (type == "session-created") {
            auto s = std::make_unique<Session>();
            s->mode = *parse_mode(e.at("mode").get<std::string>());
            s->annotator = e.at("annotator").get<std::string>();
            s->token = e.at("token").get<std::string>();
            s->expiry = Clock::time_point(Clock::duration(e.at("expiry_ms").get<std::int64_t>()));
            s->params = e.at("params").is_null()
                            ? std::nullopt
                            : std::optional<GenerationParams>(GenerationParams{
                                  e.at("params").at("temperature").get<double>(),
                                  e.at("params").at("max_output_tokens").get<int>()});
            const auto seed = e.at("seed").get<std::uint64_t>();
            s->rng = std::make_unique<DeterministicRng>(seed);
            const auto id = e.at("session_id").get<std::string>();
            if (s->mode == SessionMode::Pairwise) {
                PairwiseSessionConfig pc;
                pc.session_id = id;
                pc.character_id = e.at("character_id").get<std::string>();
                pc.category = *parse_category(e.at("category").get<std::string>());
                pc.topic = *parse_topic(e.at("topic").get<std::string>());
                pc.system_prompt = e.at("system_prompt").get<std::string>();
                pc.greeting = e.at("greeting").get<std::string>();
                pc.models = {e.at("models").at(0).get<std::string>(), e.at("models").at(1).get<std::string>()};
                pc.seed = seed;
                pc.params = s->params;
                s->pairwise = std::make_unique<PairwiseState>(std::move(pc));
            } else {
                s->model = e.at("model").get<std::string>();
            }
            s->dialogue.id = id;
            s->dialogue.character_id = e.at("character_id").get<std::string>();
            s->dialogue.player_id = s->annotator;
            s->dialogue.topic = *parse_topic(e.at("topic").get<std::string>());
            s->dialogue.provenance =
                s->mode == SessionMode::Prototype ? Provenance::PrototypeInteraction : Provenance::RolePlay;
            s->dialogue.prompt_variant_id = e.value("prompt_variant_id", "");
            s->dialogue = append_turn(std::move(s->dialogue),
                                      Utterance{Speaker::Character, e.at("greeting").get<std::string>(), {}, 0});
            // system prompt for single/prototype modes is kept on the event only
            system_prompts[id] = e.at("system_prompt").get<std::string>();
            sessions[id] = std::move(s);
            ++session_counter;
        } else if (type == "turn-proposed") {
            auto& s = session(e.at("session_id").get<std::string>());
            s.rng->coin();  // the position draw made when the turn was proposed
            restore_proposal(*s.pairwise, pending_from(e.at("pending")));
        } else if (type == "choice-submitted") {
            auto& s = session(e.at("session_id").get<std::string>());
            const auto c = choice_from_json_line(detail::dump_line(e.at("choice")));
            if (c.rng_draw) s.rng->coin();
            restore_choice(*s.pairwise, c);
        } else if (type == "turn-completed") {
            auto& s = session(e.at("session_id").get<std::string>());
            const auto ts = e.at("timestamp_ms").get<std::int64_t>();
            s.dialogue = append_turn(std::move(s.dialogue),
                                     Utterance{Speaker::Player, e.at("user_text").get<std::string>(), {}, ts});
            s.dialogue =
                append_turn(std::move(s.dialogue), Utterance{Speaker::Character, e.at("reply").get<std::string>(), {}, ts});
        } else if (type == "session-closed") {
            auto& s = session(e.at("session_id").get<std::string>());
            s.dialogue = close_session(std::move(s.dialogue));
        } else if (type == "rating-submitted") {
            ratings.push_back(rating_from_json_line(detail::dump_line(e.at("rating"))));
        } else if (type == "tags-submitted") {
            auto t = tag_from_json_line(detail::dump_line(e.at("tag")));
            tag_keys.emplace(t.model, t.session_id, t.turn_index);
            tags.push_back(std::move(t));
        } else if (type == "colloquialization-enqueued") {
            ColloquializationTask t;
            t.id = e.at("task_id").get<std::string>();
            auto session_value = session_from_json_line(detail::dump_line(e.at("session")));
            t.session_id = session_value.id;
            t.drafts = e.value("drafts", std::vector<std::string>{});
            colloquialization.enqueue(std::move(t), std::move(session_value));
            colloquialization_ids.push_back(e.at("task_id").get<std::string>());
        } else if (type == "colloquialization-claimed") {
            colloquialization.claim(e.at("task_id").get<std::string>(), e.at("worker").get<std::string>());
        } else if (type == "colloquialization-submitted") {
            std::vector<TurnRework> turns;
            for (const auto& t : e.at("turns")) turns.push_back(rework_from(t));
            colloquialization.submit(e.at("task_id").get<std::string>(), e.at("worker").get<std::string>(),
                                     std::move(turns));
        } else if (type == "turn-refined") {
            auto& s = session(e.at("session_id").get<std::string>());
            prototype_refine(s.dialogue, e.at("turn_index").get<std::size_t>(), decision_from(e.at("decision")),
                             refinements, e.at("timestamp_ms").get<std::int64_t>());
        } else {
            throw ParseError("unknown event type '" + type + "'", 0);
        }
    }

    std::map<std::string, std::string> system_prompts;

    static TurnRework rework_from(const json& t) {
        const auto mode = t.at("mode").get<std::string>();
        if (mode == "keep") return {TurnRework::Mode::Keep, {}};
        if (mode == "rewrite") return {TurnRework::Mode::Rewrite, t.value("text", "")};
        fail(400, "bad_request", "rework mode must be 'keep' or 'rewrite'");
    }

    static json rework_json(const TurnRework& r) {
        if (r.mode == TurnRework::Mode::Rewrite) return json{{"mode", "rewrite"}, {"text", r.text}};
        return json{{"mode", "keep"}};
    }

    static RefineDecision decision_from(const json& d) {
        const auto action = d.at("action").get<std::string>();
        if (action == "accept") return RefineDecision::accept();
        if (action == "reject") return RefineDecision::reject();
        if (action == "edit") return RefineDecision::edit(d.value("text", ""));
        fail(400, "bad_request", "action must be 'accept', 'edit' or 'reject'");
    }

    // -- lookup and auth ------------------------------------------------------

    Session& session(const std::string& id) {
        const auto it = sessions.find(id);
        if (it == sessions.end()) throw NotFoundError("session '" + id + "' not found");
        return *it->second;
    }

    static std::string bearer(const std::string& authorization) {
        constexpr std::string_view prefix = "Bearer ";
        if (starts_with(authorization, prefix)) return std::string(trim(authorization.substr(prefix.size())));
        return {};
    }

    bool is_shared(const std::string& token) const {
        return !config.shared_token.empty() && token == config.shared_token;
    }

    void require_service(const std::string& authorization) const {
        if (config.shared_token.empty()) return;
        if (!is_shared(bearer(authorization))) fail(401, "unauthorized", "a valid service token is required");
    }

    void require_session(const Session& s, const std::string& authorization) const {
        const auto token = bearer(authorization);
        if (is_shared(token)) return;
        if (token.empty()) fail(401, "unauthorized", "a session token is required");
        if (token != s.token) fail(403, "forbidden", "token does not grant access to this session");
        if (clock.now() >= s.expiry) fail(401, "token_expired", "session token has expired");
    }

    /// Any unexpired session token or the shared token.
    std::string require_any(const std::string& authorization) const {
        const auto token = bearer(authorization);
        if (is_shared(token)) return {};
        if (config.shared_token.empty() && token.empty()) return {};
        for (const auto& [id, s] : sessions) {
            if (s->token != token) continue;
            if (clock.now() >= s->expiry) fail(401, "token_expired", "session token has expired");
            return id;
        }
        fail(401, "unauthorized", "a valid token is required");
    }

    // -- views ----------------------------------------------------------------

    static int completed_turns(const Session& s) {
        if (s.pairwise) return s.pairwise->next_turn - 1;
        int n = 0;
        for (const auto& u : s.dialogue.turns)
            if (u.speaker == Speaker::Player) ++n;
        return n;
    }

    json session_view(const std::string& id, const Session& s) const {
        json v;
        v["session_id"] = id;
        v["mode"] = to_string(s.mode);
        v["annotator"] = s.annotator;
        v["status"] = to_string(s.dialogue.status);
        v["completed_turns"] = completed_turns(s);
        v["rating_unlocked"] = completed_turns(s) >= kMinRatedTurns;
        auto transcript = json::array();
        if (s.pairwise) {
            for (const auto& t : s.pairwise->history)
                transcript.push_back(json{{"speaker", to_string(t.speaker)}, {"text", t.text}});
            v["transcript"] = std::move(transcript);
            if (s.pairwise->pending) {
                const auto& p = *s.pairwise->pending;
                v["pending"] = json{{"turn_index", p.turn_index},
                                    {"user_text", p.user_text},
                                    {"candidates", {{"A", p.a.text}, {"B", p.b.text}}}};
            } else {
                v["pending"] = nullptr;
            }
            auto decided = json::array();
            for (const auto& c : s.pairwise->choices)
                decided.push_back(json{{"turn_index", c.turn_index},
                                       {"verdict", verdict_label(c)},
                                       {"continued", c.continued_with == c.a.model ? "A" : "B"}});
            v["choices"] = std::move(decided);
        } else {
            for (std::size_t i = 0; i < s.dialogue.turns.size(); ++i) {
                const auto& u = s.dialogue.turns[i];
                json t{{"index", i}, {"speaker", to_string(u.speaker)}, {"text", u.text}};
                if (s.mode == SessionMode::Prototype && u.speaker == Speaker::Character && i > 0) {
                    const bool decided = !refinements_for_turn(id, i).empty();
                    t["refined"] = decided;
                    t["accepted"] = refinements.turn_accepted(id, i);
                }
                transcript.push_back(std::move(t));
            }
            v["transcript"] = std::move(transcript);
            v["model"] = s.model;
        }
        return v;
    }

    std::vector<RefinementRecord> refinements_for_turn(const std::string& id, std::size_t turn) const {
        std::vector<RefinementRecord> out;
        for (const auto& r : refinements.records_for(id))
            if (r.turn_index == turn) out.push_back(r);
        return out;
    }

    // -- handlers -------------------------------------------------------------

    ApiResponse create_session(const json& body, const std::string& auth) {
        require_service(auth);
        const auto mode_name = body_field<std::string>(body, "mode");
        const auto mode = parse_mode(mode_name);
        if (!mode) fail(400, "bad_request", "mode must be 'single', 'pairwise' or 'prototype'");
        const auto annotator = body_field<std::string>(body, "annotator");
        const auto greeting = body_field<std::string>(body, "greeting");
        const auto character_id = body_field_or<std::string>(body, "character_id", "character");
        const auto category_name = body_field_or<std::string>(body, "category", "DailyLife");
        const auto topic_name = body_field_or<std::string>(body, "topic", "Unrestricted");
        if (!parse_category(category_name)) fail(400, "bad_request", "unknown category '" + category_name + "'");
        if (!parse_topic(topic_name)) fail(400, "bad_request", "unknown topic '" + topic_name + "'");
        if (trim(greeting).empty()) throw ValidationError(Violation{"greeting", "greeting empty"});
        if (trim(annotator).empty()) throw ValidationError(Violation{"annotator", "annotator empty"});

        json e;
        e["event"] = "session-created";
        std::lock_guard lock(mutex);
        char id_buf[32];
        std::snprintf(id_buf, sizeof id_buf, "s-%04zu", session_counter + 1);
        const std::string id = id_buf;
        e["session_id"] = id;
        e["mode"] = to_string(*mode);
        e["annotator"] = annotator;
        e["character_id"] = character_id;
        e["category"] = category_name;
        e["topic"] = topic_name;
        e["system_prompt"] = body_field_or<std::string>(body, "system_prompt", "");
        e["prompt_variant_id"] = body_field_or<std::string>(body, "prompt_variant_id", "");
        e["greeting"] = greeting;
        if (*mode == SessionMode::Pairwise) {
            const auto models = body_field<std::vector<std::string>>(body, "models");
            if (models.size() != 2 || models[0] == models[1])
                throw ValidationError(Violation{"models", "pairwise sessions need two different models"});
            for (const auto& m : models)
                if (!gateway.has_provider(m)) throw ValidationError(Violation{"models", "unknown model '" + m + "'"});
            e["models"] = models;
        } else {
            const auto model = body_field<std::string>(body, "model");
            if (!gateway.has_provider(model)) throw ValidationError(Violation{"model", "unknown model '" + model + "'"});
            e["model"] = model;
        }
        e["params"] = params_json(params_from(body));
        e["seed"] = DeterministicRng(config.seed).derive(session_counter + 1).seed();
        e["token"] = random_token();
        e["expiry_ms"] = to_ms(clock.now()) + std::chrono::duration_cast<Clock::duration>(config.token_ttl).count();

        apply_event(e);
        record(e);
        auto view = session_view(id, *sessions.at(id));
        view["token"] = e["token"];
        view["expires_at_ms"] = e["expiry_ms"];
        return {201, detail::dump_line(view)};
    }

    ApiResponse get_session(const std::string& id, const std::string& auth) {
        std::lock_guard lock(mutex);
        auto& s = session(id);
        require_session(s, auth);
        return {200, detail::dump_line(session_view(id, s))};
    }

    ApiResponse post_turn(const std::string& id, const json& body, const std::string& auth) {
        Session* sp = nullptr;
        {
            std::lock_guard lock(mutex);
            sp = &session(id);
            require_session(*sp, auth);
        }
        Session& s = *sp;
        std::lock_guard write(s.write_mutex);
        const auto text = body_field<std::string>(body, "text");
        if (trim(text).empty()) throw ValidationError(Violation{"text", "user text is empty"});

        if (s.mode == SessionMode::Pairwise) {
            PairwiseState draft(s.pairwise->config);
            DeterministicRng rng = *s.rng;
            {
                std::lock_guard lock(mutex);
                if (s.dialogue.status == SessionStatus::Closed)
                    throw ProtocolError(ProtocolError::Kind::ClosedSession, "session is closed");
                draft = *s.pairwise;
            }
            const PendingTurn p = propose_turn(draft, gateway, text, rng);  // gateway calls, no lock held
            json e{{"event", "turn-proposed"}, {"session_id", id}, {"pending", pending_json(p)}};
            std::lock_guard lock(mutex);
            apply_event(e);
            record(e);
            return {200, detail::dump_line(json{{"turn_index", p.turn_index},
                                                {"candidates", {{"A", p.a.text}, {"B", p.b.text}}}})};
        }

        ChatRequest req;
        {
            std::lock_guard lock(mutex);
            if (s.dialogue.status == SessionStatus::Closed)
                throw ProtocolError(ProtocolError::Kind::ClosedSession, "session is closed");
            if (s.mode == SessionMode::Prototype) {
                for (std::size_t i = 1; i < s.dialogue.turns.size(); ++i) {
                    if (s.dialogue.turns[i].speaker == Speaker::Character && !refinements.turn_accepted(id, i))
                        throw StateError("turn " + std::to_string(i) + " must be accepted or edited first");
                }
            }
            req.system_prompt = system_prompts.at(id);
            for (const auto& u : s.dialogue.turns) req.history.push_back({u.speaker, u.text});
            req.history.push_back({Speaker::Player, text});
            req.params = s.params;
        }
        const auto reply = gateway.generate_reply(s.model, req);
        json e{{"event", "turn-completed"},
               {"session_id", id},
               {"user_text", text},
               {"reply", reply.text},
               {"timestamp_ms", to_ms(clock.now())}};
        std::lock_guard lock(mutex);
        apply_event(e);
        record(e);
        return {200, detail::dump_line(json{{"turn_index", completed_turns(s)},
                                            {"reply", reply.text},
                                            {"index", s.dialogue.turns.size() - 1}})};
    }

    ApiResponse post_choice(const std::string& id, const json& body, const std::string& auth) {
        std::lock_guard lock(mutex);
        auto& s = session(id);
        require_session(s, auth);
        if (s.mode != SessionMode::Pairwise) fail(409, "wrong_mode", "choices are only accepted in pairwise sessions");
        const int turn_index = body_field<int>(body, "turn_index");
        const auto verdict_name = body_field<std::string>(body, "verdict");
        Verdict verdict;
        if (verdict_name == "A") {
            verdict = Verdict::AWins;
        } else if (verdict_name == "B") {
            verdict = Verdict::BWins;
        } else if (verdict_name == "Tie") {
            verdict = Verdict::Tie;
        } else {
            fail(400, "bad_request", "verdict must be 'A', 'B' or 'Tie'");
        }
        std::optional<DimVerdicts> dims;
        if (const auto it = body.find("dimensions"); it != body.end() && !it->is_null()) {
            DimVerdicts d{};
            for (std::size_t i = 0; i < kPairwiseDimensionCount; ++i) {
                const auto name = std::string(to_string(static_cast<PairwiseDimension>(i)));
                const auto v = parse_dim_verdict(body_field<std::string>(*it, name.c_str()));
                if (!v) fail(400, "bad_request", "dimension '" + name + "' must be 'A', 'B' or 'Tie'");
                d[i] = *v;
            }
            dims = d;
        }
        PairwiseState draft = *s.pairwise;
        DeterministicRng rng = *s.rng;
        const auto choice = submit_choice(draft, turn_index, verdict, dims, rng);
        json e{{"event", "choice-submitted"},
               {"session_id", id},
               {"choice", detail::parse_json(choice_to_json_line(choice), "choice")}};
        apply_event(e);
        record(e);
        const bool continued_a = choice.continued_with == choice.a.model;
        return {200, detail::dump_line(json{{"turn_index", turn_index},
                                            {"verdict", verdict_label(choice)},
                                            {"continued", continued_a ? "A" : "B"},
                                            {"text", continued_a ? choice.a.text : choice.b.text}})};
    }

    ApiResponse close(const std::string& id, const std::string& auth) {
        std::lock_guard lock(mutex);
        auto& s = session(id);
        require_session(s, auth);
        json e{{"event", "session-closed"}, {"session_id", id}};
        close_session(s.dialogue);  // validates before recording
        apply_event(e);
        record(e);
        return {200, detail::dump_line(session_view(id, s))};
    }

    ApiResponse post_rating(const json& body, const std::string& auth) {
        std::lock_guard lock(mutex);
        const auto session_id = body_field<std::string>(body, "session_id");
        auto& s = session(session_id);
        require_session(s, auth);
        if (s.mode == SessionMode::Pairwise)
            fail(409, "wrong_mode", "pointwise ratings apply to single-model sessions");
        PointwiseRating r;
        r.annotator = s.annotator;
        r.model = s.model;
        r.character = s.dialogue.character_id;
        r.session_id = session_id;
        r.session_turns = completed_turns(s);
        const auto scores = body_field<json>(body, "scores");
        for (std::size_t i = 0; i < kRatingDimensionCount; ++i) {
            const auto name = std::string(to_string(static_cast<RatingDimension>(i)));
            r.scores[i] = body_field<int>(scores, name.c_str());
        }
        r.overall = body_field<int>(body, "overall");
        if (auto v = validate_rating(r, true); !v.empty()) throw ValidationError("invalid rating", std::move(v));
        for (const auto& prev : ratings)
            if (prev.session_id == session_id && prev.annotator == r.annotator)
                throw ConflictError("session '" + session_id + "' is already rated");
        json e{{"event", "rating-submitted"}, {"rating", detail::parse_json(rating_to_json_line(r), "rating")}};
        apply_event(e);
        record(e);
        return {201, detail::dump_line(e["rating"])};
    }

    ApiResponse post_tags(const json& body, const std::string& auth) {
        std::lock_guard lock(mutex);
        const auto session_id = body_field<std::string>(body, "session_id");
        auto& s = session(session_id);
        require_session(s, auth);
        if (s.mode == SessionMode::Pairwise)
            fail(409, "wrong_mode", "fine-grained tags apply to single-model sessions");
        FineGrainedTag t;
        t.model = s.model;
        t.session_id = session_id;
        t.turn_index = body_field<int>(body, "turn_index");
        if (t.turn_index < 1 || t.turn_index > completed_turns(s))
            throw ValidationError(Violation{"turn_index", "no completed turn " + std::to_string(t.turn_index)});
        for (const auto& name : body_field<std::vector<std::string>>(body, "tags")) {
            const auto tag = parse_error_tag(name);
            if (!tag) throw ValidationError(Violation{"tags", "unknown tag '" + name + "'"});
            t.flags[static_cast<std::size_t>(*tag)] = true;
        }
        if (tag_keys.count({t.model, t.session_id, t.turn_index}))
            throw ConflictError("turn " + std::to_string(t.turn_index) + " is already tagged");
        json e{{"event", "tags-submitted"}, {"tag", detail::parse_json(tag_to_json_line(t), "tag")}};
        apply_event(e);
        record(e);
        return {201, detail::dump_line(e["tag"])};
    }

    static json task_json(const ColloquializationTask& t, const DialogueSession& s) {
        auto turns = json::array();
        for (std::size_t i = 0; i < s.turns.size(); ++i) {
            json tj{{"index", i}, {"speaker", to_string(s.turns[i].speaker)}, {"text", s.turns[i].text}};
            if (i < t.drafts.size()) tj["draft"] = t.drafts[i];
            turns.push_back(std::move(tj));
        }
        return json{{"task_id", t.id},
                    {"session_id", t.session_id},
                    {"status", t.status == TaskStatus::Pending ? "Pending" : "Reworked"},
                    {"turns", std::move(turns)}};
    }

    ApiResponse list_colloquialization(const std::string& auth) {
        require_service(auth);
        std::lock_guard lock(mutex);
        auto items = json::array();
        for (const auto& t : colloquialization.pending()) items.push_back(task_json(t, colloquialization.session(t.id)));
        return {200, detail::dump_line(json{{"tasks", std::move(items)}})};
    }

    ApiResponse enqueue_colloquialization(const json& body, const std::string& auth) {
        require_service(auth);
        std::lock_guard lock(mutex);
        const auto session_value = body_field<json>(body, "session");
        DialogueSession ds;
        try {
            ds = session_from_json_line(detail::dump_line(session_value));
        } catch (const ParseError& e) {
            fail(400, "bad_request", e.what());
        }
        if (auto v = validate_session(ds); !v.empty()) throw ValidationError("invalid session", std::move(v));
        const auto task_id = body_field_or<std::string>(body, "task_id", "colloq-" + ds.id);
        json e{{"event", "colloquialization-enqueued"},
               {"task_id", task_id},
               {"session", session_json(ds)},
               {"drafts", body_field_or<std::vector<std::string>>(body, "drafts", {})}};
        apply_event(e);
        record(e);
        return {201, detail::dump_line(task_json(colloquialization.task(task_id), ds))};
    }

    ApiResponse claim_colloquialization(const std::string& task_id, const json& body, const std::string& auth) {
        require_service(auth);
        std::lock_guard lock(mutex);
        const auto worker = body_field<std::string>(body, "worker");
        json e{{"event", "colloquialization-claimed"}, {"task_id", task_id}, {"worker", worker}};
        apply_event(e);
        record(e);
        return {200, detail::dump_line(task_json(colloquialization.task(task_id), colloquialization.session(task_id)))};
    }

    ApiResponse submit_colloquialization(const std::string& task_id, const json& body, const std::string& auth) {
        require_service(auth);
        std::lock_guard lock(mutex);
        const auto worker = body_field<std::string>(body, "worker");
        auto turns = json::array();
        for (const auto& t : body_field<json>(body, "turns")) turns.push_back(rework_json(rework_from(t)));
        json e{{"event", "colloquialization-submitted"}, {"task_id", task_id}, {"worker", worker}, {"turns", turns}};
        apply_event(e);
        record(e);
        const auto reworked = colloquialization.session(task_id);
        return {200, detail::dump_line(json{{"task_id", task_id}, {"status", "Reworked"},
                                            {"session", session_json(reworked)}})};
    }

    ApiResponse list_refinement(const std::string& auth) {
        const auto scope = require_any(auth);
        std::lock_guard lock(mutex);
        auto items = json::array();
        for (const auto& [id, s] : sessions) {
            if (s->mode != SessionMode::Prototype || s->dialogue.status == SessionStatus::Closed) continue;
            if (!scope.empty() && scope != id) continue;
            for (std::size_t i = 1; i < s->dialogue.turns.size(); ++i) {
                const auto& u = s->dialogue.turns[i];
                if (u.speaker != Speaker::Character || !refinements_for_turn(id, i).empty()) continue;
                items.push_back(json{{"session_id", id}, {"turn_index", i}, {"text", u.text}});
            }
        }
        return {200, detail::dump_line(json{{"items", std::move(items)}})};
    }

    ApiResponse refine(const std::string& id, const json& body, const std::string& auth) {
        std::lock_guard lock(mutex);
        auto& s = session(id);
        require_session(s, auth);
        const auto turn_index = body_field<std::size_t>(body, "turn_index");
        json decision{{"action", body_field<std::string>(body, "action")}};
        if (decision["action"] == "edit") decision["text"] = body_field<std::string>(body, "text");
        const auto parsed = decision_from(decision);
        // Dry run on a copy so a rejected request leaves no trace.
        DialogueSession copy = s.dialogue;
        RefinementLedger scratch;
        for (const auto& r : refinements.records_for(id)) scratch.append(r);
        const auto ts = to_ms(clock.now());
        const auto preview = prototype_refine(copy, turn_index, parsed, scratch, ts);
        json e{{"event", "turn-refined"},
               {"session_id", id},
               {"turn_index", turn_index},
               {"decision", decision},
               {"timestamp_ms", ts}};
        apply_event(e);
        record(e);
        return {200, refinement_to_json_line(preview)};
    }

    ApiResponse report(const std::string& kind, const std::map<std::string, std::string>& query,
                       const std::string& auth) {
        require_service(auth);
        std::lock_guard lock(mutex);
        if (kind == "pointwise") {
            auto rows = json::array();
            for (const auto& r : aggregate_pointwise(ratings)) {
                json row{{"model", r.model}, {"n", r.n}, {"overall", round_to(r.overall, 2)},
                         {"consistency", round_to(r.consistency(), 2)}};
                for (std::size_t i = 0; i < kRatingDimensionCount; ++i)
                    row[std::string(to_string(static_cast<RatingDimension>(i)))] = round_to(r.means[i], 2);
                rows.push_back(std::move(row));
            }
            return {200, detail::dump_line(json{{"rows", std::move(rows)}})};
        }
        if (kind == "finegrained") {
            auto rows = json::array();
            for (const auto& r : aggregate_finegrained(tags)) {
                json row{{"model", r.model}, {"turns", r.total_turns}, {"overall", round_to(r.overall, 1)}};
                for (std::size_t i = 0; i < kErrorTagCount; ++i)
                    row[std::string(to_string(static_cast<ErrorTag>(i)))] = round_to(r.proportions[i], 1);
                rows.push_back(std::move(row));
            }
            return {200, detail::dump_line(json{{"rows", std::move(rows)}})};
        }
        if (kind == "pairwise") {
            std::vector<PairwiseChoice> choices;
            std::set<std::string> models;
            for (const auto& [_, s] : sessions) {
                if (!s->pairwise) continue;
                for (const auto& c : s->pairwise->choices) {
                    choices.push_back(c);
                    models.insert(c.a.model);
                    models.insert(c.b.model);
                }
            }
            const auto qv = [&](const char* k, std::string fallback) {
                const auto it = query.find(k);
                return it == query.end() ? fallback : it->second;
            };
            const std::string focal = qv("focal", models.empty() ? "" : *models.begin());
            std::vector<GroupKey> keys;
            const auto by = qv("by", "overall");
            std::size_t pos = 0;
            while (pos <= by.size()) {
                const auto comma = by.find(',', pos);
                const auto name = by.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
                const auto k = parse_group_key(name);
                if (!k) fail(400, "bad_request", "unknown grouping '" + name + "'");
                keys.push_back(*k);
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            const int decimals = qv("decimals", "1") == "0" ? 0 : 1;
            std::optional<PairwiseDimension> dim;
            if (const auto d = qv("dimension", ""); !d.empty()) {
                dim = parse_pairwise_dimension(d);
                if (!dim) fail(400, "bad_request", "unknown dimension '" + d + "'");
            }
            std::vector<PairwiseChoice> involved;
            for (const auto& c : choices)
                if (c.a.model == focal || c.b.model == focal) involved.push_back(c);
            const auto table = pairwise_table(aggregate_pairwise(involved, focal, keys, dim), decimals);
            auto rows = json::array();
            for (const auto& r : table.rows) {
                rows.push_back(json{{"group", r[0]},
                                    {"n", std::stoul(r[1])},
                                    {"win", std::stod(r[2])},
                                    {"tie", std::stod(r[3])},
                                    {"lose", std::stod(r[4])},
                                    {"advantage", std::stod(r[5])}});
            }
            return {200, detail::dump_line(json{{"focal", focal}, {"rows", std::move(rows)}})};
        }
        fail(404, "not_found", "unknown report '" + kind + "'");
    }

    ApiResponse route(const std::string& method, const std::string& raw_path, const std::string& body_text,
                      const std::string& auth) {
        const auto target = parse_target(raw_path);
        const auto& seg = target.segments;
        if (seg.empty() || seg[0] != "v1") fail(404, "not_found", "unknown endpoint");
        const auto n = seg.size();
        const bool get = method == "GET";
        const bool post = method == "POST";
        const auto body = [&] {
            if (trim(body_text).empty()) return json::object();
            try {
                auto j = json::parse(body_text);
                if (!j.is_object()) fail(400, "bad_request", "request body must be a JSON object");
                return j;
            } catch (const json::parse_error& e) {
                fail(400, "bad_request", std::string("malformed JSON: ") + e.what());
            }
        };
        const auto method_not_allowed = [] { fail(405, "method_not_allowed", "method not allowed"); };

        if (n == 2 && seg[1] == "health") {
            if (!get) method_not_allowed();
            return {200, detail::dump_line(json{{"status", "ok"}, {"version", kServiceVersion}})};
        }
        if (n == 2 && seg[1] == "sessions") {
            if (!post) method_not_allowed();
            return create_session(body(), auth);
        }
        if (n == 3 && seg[1] == "sessions") {
            if (!get) method_not_allowed();
            return get_session(seg[2], auth);
        }
        if (n == 4 && seg[1] == "sessions") {
            if (!post) method_not_allowed();
            if (seg[3] == "turns") return post_turn(seg[2], body(), auth);
            if (seg[3] == "choices") return post_choice(seg[2], body(), auth);
            if (seg[3] == "close") return close(seg[2], auth);
            if (seg[3] == "refine") return refine(seg[2], body(), auth);
        }
        if (n == 2 && seg[1] == "ratings") {
            if (!post) method_not_allowed();
            return post_rating(body(), auth);
        }
        if (n == 2 && seg[1] == "finegrained-tags") {
            if (!post) method_not_allowed();
            return post_tags(body(), auth);
        }
        if (n >= 3 && seg[1] == "queues" && seg[2] == "colloquialization") {
            if (n == 3 && get) return list_colloquialization(auth);
            if (n == 3 && post) return enqueue_colloquialization(body(), auth);
            if (n == 5 && post && seg[4] == "claim") return claim_colloquialization(seg[3], body(), auth);
            if (n == 5 && post && seg[4] == "submit") return submit_colloquialization(seg[3], body(), auth);
            if (n == 3 || n == 5) method_not_allowed();
        }
        if (n == 3 && seg[1] == "queues" && seg[2] == "refinement") {
            if (!get) method_not_allowed();
            return list_refinement(auth);
        }
        if (n == 3 && seg[1] == "reports") {
            if (!get) method_not_allowed();
            return report(seg[2], target.query, auth);
        }
        fail(404, "not_found", "unknown endpoint");
    }

    json snapshot_json() const {
        json j;
        auto ss = json::object();
        for (const auto& [id, s] : sessions) {
            json v = session_view(id, *s);
            v["token"] = s->token;
            v["expiry_ms"] = to_ms(s->expiry);
            if (s->pairwise) {
                auto log = json::array();
                for (const auto& c : s->pairwise->choices)
                    log.push_back(detail::parse_json(choice_to_json_line(c), "choice"));
                v["choice_log"] = std::move(log);
                v["pending_full"] = s->pairwise->pending ? pending_json(*s->pairwise->pending) : json(nullptr);
            } else {
                v["dialogue"] = session_json(s->dialogue);
            }
            ss[id] = std::move(v);
        }
        j["sessions"] = std::move(ss);
        auto rs = json::array();
        for (const auto& r : ratings) rs.push_back(detail::parse_json(rating_to_json_line(r), "rating"));
        j["ratings"] = std::move(rs);
        auto ts = json::array();
        for (const auto& t : tags) ts.push_back(detail::parse_json(tag_to_json_line(t), "tag"));
        j["tags"] = std::move(ts);
        auto qs = json::array();
        for (const auto& id : colloquialization_ids)
            qs.push_back(task_json(colloquialization.task(id), colloquialization.session(id)));
        j["colloquialization"] = std::move(qs);
        auto refs = json::array();
        for (const auto& r : refinements.records())
            refs.push_back(detail::parse_json(refinement_to_json_line(r), "refinement"));
        j["refinements"] = std::move(refs);
        return j;
    }
};

AnnotationService::AnnotationService(ServiceConfig config, Gateway& gateway, Clock& clock)
    : config_(config), impl_(std::make_unique<Impl>(std::move(config), gateway, clock)) {}

AnnotationService::~AnnotationService() = default;

ApiResponse AnnotationService::handle(const std::string& method, const std::string& path, const std::string& body,
                                      const std::string& authorization) {
    const auto error = [](int status, const std::string& code, const std::string& message,
                          const std::vector<Violation>& violations = {}) {
        json j{{"error", {{"code", code}, {"message", message}}}};
        if (!violations.empty()) j["error"]["violations"] = violations_json(violations);
        return ApiResponse{status, detail::dump_line(j)};
    };
    try {
        return impl_->route(method, path, body, authorization);
    } catch (const HttpError& e) {
        return error(e.status, e.code, e.message, e.violations);
    } catch (const ValidationError& e) {
        return error(422, "validation_failed", e.what(), e.violations());
    } catch (const ProtocolError& e) {
        return error(422, "protocol_violation", e.what());
    } catch (const NotFoundError& e) {
        return error(404, "not_found", e.what());
    } catch (const ConflictError& e) {
        return error(409, "conflict", e.what());
    } catch (const StateError& e) {
        return error(409, "invalid_state", e.what());
    } catch (const ProviderError& e) {
        return error(502, "provider_error", e.what());
    } catch (const IoError& e) {
        return error(500, "storage_error", e.what());
    } catch (const std::exception& e) {
        return error(500, "internal_error", e.what());
    }
}

std::string AnnotationService::snapshot() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->snapshot_json().dump(2);
}

std::size_t AnnotationService::event_count() const { return impl_->log->size(); }

// ---------------------------------------------------------------------------
// HTTP front end
// ---------------------------------------------------------------------------

struct HttpServer::Impl {
    AnnotationService& service;
    httplib::Server server;

    explicit Impl(AnnotationService& s) : service(s) {
        const auto forward = [this](const httplib::Request& req, httplib::Response& res) {
            const auto r = service.handle(req.method, req.target, req.body, req.get_header_value("Authorization"));
            res.status = r.status;
            res.set_content(r.body, "application/json");
        };
        server.Get(".*", forward);
        server.Post(".*", forward);
        server.Put(".*", forward);
        server.Delete(".*", forward);
    }
};

HttpServer::HttpServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw IoError("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace chardial
