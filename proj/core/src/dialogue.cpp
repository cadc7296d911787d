#include "chardial/dialogue.hpp"

#include "chardial/text.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>

namespace chardial {

namespace {

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) noexcept {
    for (const auto& [e, name] : table)
        if (e == value) return name;
    return "unknown";
}

template <typename E, std::size_t N>
std::optional<E> parse_name(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s) noexcept {
    for (const auto& [e, name] : table)
        if (name == s) return e;
    return std::nullopt;
}

constexpr std::array<std::pair<Speaker, std::string_view>, 2> kSpeakers{{
    {Speaker::Character, "character"},
    {Speaker::Player, "player"},
}};
constexpr std::array<std::pair<SceneTopic, std::string_view>, 4> kTopics{{
    {SceneTopic::ChitChat, "ChitChat"},
    {SceneTopic::Interview, "Interview"},
    {SceneTopic::Love, "Love"},
    {SceneTopic::Unrestricted, "Unrestricted"},
}};
constexpr std::array<std::pair<Provenance, std::string_view>, 4> kProvenances{{
    {Provenance::RolePlay, "RolePlay"},
    {Provenance::Synthetic, "Synthetic"},
    {Provenance::Literary, "Literary"},
    {Provenance::PrototypeInteraction, "PrototypeInteraction"},
}};
constexpr std::array<std::pair<SessionStatus, std::string_view>, 2> kStatuses{{
    {SessionStatus::Open, "Open"},
    {SessionStatus::Closed, "Closed"},
}};

Speaker other(Speaker s) { return s == Speaker::Character ? Speaker::Player : Speaker::Character; }

}  // namespace

std::string_view to_string(Speaker s) noexcept { return name_of(kSpeakers, s); }
std::string_view to_string(SceneTopic t) noexcept { return name_of(kTopics, t); }
std::string_view to_string(Provenance p) noexcept { return name_of(kProvenances, p); }
std::string_view to_string(SessionStatus s) noexcept { return name_of(kStatuses, s); }
std::optional<Speaker> parse_speaker(std::string_view s) noexcept { return parse_name(kSpeakers, s); }
std::optional<SceneTopic> parse_topic(std::string_view s) noexcept { return parse_name(kTopics, s); }
std::optional<Provenance> parse_provenance(std::string_view s) noexcept { return parse_name(kProvenances, s); }
std::optional<SessionStatus> parse_status(std::string_view s) noexcept { return parse_name(kStatuses, s); }

std::size_t Utterance::length() const noexcept {
    return scalar_length(text) + (stage_directions ? scalar_length(*stage_directions) : 0);
}

DialogueSession append_turn(DialogueSession s, Utterance u) {
    if (s.status == SessionStatus::Closed)
        throw ProtocolError(ProtocolError::Kind::ClosedSession, "session '" + s.id + "' is closed");
    if (trim(u.text).empty())
        throw ProtocolError(ProtocolError::Kind::InvalidUtterance, "utterance text is empty");
    const Speaker expected = s.turns.empty() ? Speaker::Character : other(s.turns.back().speaker);
    if (u.speaker != expected)
        throw ProtocolError(ProtocolError::Kind::WrongSpeaker, "expected a " + std::string(to_string(expected)) +
                                                                   " turn at index " +
                                                                   std::to_string(s.turns.size()));
    s.turns.push_back(std::move(u));
    return s;
}

DialogueSession close_session(DialogueSession s) {
    if (s.status == SessionStatus::Closed)
        throw ProtocolError(ProtocolError::Kind::ClosedSession, "session '" + s.id + "' is already closed");
    s.status = SessionStatus::Closed;
    return s;
}

std::vector<Violation> validate_session(const DialogueSession& s) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        const auto field = "turns[" + std::to_string(i) + "]";
        if (i == 0 && s.turns[0].speaker != Speaker::Character)
            out.push_back({field, "first turn not by character"});
        if (i > 0 && s.turns[i].speaker == s.turns[i - 1].speaker)
            out.push_back({field, "alternation broken at index " + std::to_string(i)});
        if (trim(s.turns[i].text).empty()) out.push_back({field, "empty text at index " + std::to_string(i)});
    }
    return out;
}

double round_count(const DialogueSession& s) noexcept {
    const auto n = s.turns.size();
    return static_cast<double>(n / 2) + (n % 2 ? 0.5 : 0.0);
}

std::vector<Utterance> merge_consecutive(const std::vector<Utterance>& turns) {
    std::vector<Utterance> out;
    for (const auto& u : turns) {
        if (out.empty() || out.back().speaker != u.speaker) {
            out.push_back(u);
            continue;
        }
        auto& last = out.back();
        last.text = join({last.text, u.text}, " ");
        if (u.stage_directions) {
            last.stage_directions = last.stage_directions ? join({*last.stage_directions, *u.stage_directions}, " ")
                                                          : *u.stage_directions;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

CorpusStats compute_corpus_stats(const Corpus& corpus, StatsOptions options) {
    CorpusStats st;
    std::set<std::string> characters;
    double rounds = 0;
    std::size_t len_char = 0;
    std::size_t len_user = 0;

    for (const auto& s : corpus.sessions) {
        if (options.require_valid) {
            if (auto v = validate_session(s); !v.empty())
                throw ValidationError("session '" + s.id + "' is invalid", std::move(v));
        }
        ++st.n_dialogues;
        rounds += round_count(s);
        characters.insert(s.character_id);
        for (const auto& u : s.turns) {
            if (u.speaker == Speaker::Character) {
                ++st.n_utterances_character;
                len_char += u.length();
            } else {
                ++st.n_utterances_user;
                len_user += u.length();
            }
        }
    }
    st.n_characters = characters.size();
    st.n_utterances_total = st.n_utterances_character + st.n_utterances_user;

    std::size_t profiles = 0;
    std::size_t profile_len = 0;
    for (const auto& c : characters) {
        const auto it = corpus.profile_texts.find(c);
        if (it == corpus.profile_texts.end()) continue;
        ++profiles;
        profile_len += scalar_length(it->second);
    }

    const auto mean = [](double sum, std::size_t n) { return n ? sum / static_cast<double>(n) : 0.0; };
    st.avg_rounds = mean(rounds, st.n_dialogues);
    st.avg_profile_length = mean(static_cast<double>(profile_len), profiles);
    st.avg_utterance_length_total = mean(static_cast<double>(len_char + len_user), st.n_utterances_total);
    st.avg_utterance_length_character = mean(static_cast<double>(len_char), st.n_utterances_character);
    st.avg_utterance_length_user = mean(static_cast<double>(len_user), st.n_utterances_user);
    return st;
}

// ---------------------------------------------------------------------------
// Interchange
// ---------------------------------------------------------------------------

namespace {

detail::json utterance_json(const Utterance& u) {
    detail::json j;
    j["speaker"] = to_string(u.speaker);
    j["text"] = u.text;
    if (u.stage_directions) j["stage_directions"] = *u.stage_directions;
    j["timestamp_ms"] = u.timestamp_ms;
    return j;
}

template <typename T>
T parse_enum(const detail::json& j, const char* key, std::optional<T> (*parse)(std::string_view) noexcept) {
    const auto s = detail::get_field<std::string>(j, key, "session");
    const auto v = parse(s);
    if (!v) throw ParseError("session: bad " + std::string(key) + " '" + s + "'", 0);
    return *v;
}

}  // namespace

std::string session_to_json_line(const DialogueSession& s, const std::optional<std::string>& profile_text) {
    detail::json j;
    j["id"] = s.id;
    j["character_id"] = s.character_id;
    j["player_id"] = s.player_id;
    j["prompt_variant_id"] = s.prompt_variant_id;
    j["topic"] = to_string(s.topic);
    j["provenance"] = to_string(s.provenance);
    j["status"] = to_string(s.status);
    auto turns = detail::json::array();
    for (const auto& u : s.turns) turns.push_back(utterance_json(u));
    j["turns"] = std::move(turns);
    if (profile_text) j["character_profile_text"] = *profile_text;
    return detail::dump_line(j);
}

DialogueSession session_from_json_line(std::string_view line, std::optional<std::string>* profile_text) {
    const auto j = detail::parse_json(line, "session");
    if (!j.is_object()) throw ParseError("session: expected an object", 0);
    DialogueSession s;
    s.id = detail::get_field<std::string>(j, "id", "session");
    s.character_id = detail::get_field<std::string>(j, "character_id", "session");
    s.player_id = detail::get_field<std::string>(j, "player_id", "session");
    s.prompt_variant_id = detail::field_or<std::string>(j, "prompt_variant_id", "");
    s.topic = parse_enum<SceneTopic>(j, "topic", &parse_topic);
    s.provenance = parse_enum<Provenance>(j, "provenance", &parse_provenance);
    s.status = parse_enum<SessionStatus>(j, "status", &parse_status);
    const auto turns = detail::get_field<detail::json>(j, "turns", "session");
    if (!turns.is_array()) throw ParseError("session: 'turns' must be an array", 0);
    for (const auto& t : turns) {
        Utterance u;
        u.speaker = parse_enum<Speaker>(t, "speaker", &parse_speaker);
        u.text = detail::get_field<std::string>(t, "text", "turn");
        u.stage_directions = detail::opt_field<std::string>(t, "stage_directions");
        u.timestamp_ms = detail::field_or<std::int64_t>(t, "timestamp_ms", 0);
        s.turns.push_back(std::move(u));
    }
    if (profile_text) *profile_text = detail::opt_field<std::string>(j, "character_profile_text");
    return s;
}

Corpus read_corpus(std::string_view content) {
    Corpus c;
    std::size_t line_no = 0;
    for (auto line : split_lines(content)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::optional<std::string> profile;
        try {
            c.sessions.push_back(session_from_json_line(line, &profile));
        } catch (const ParseError& e) {
            throw ParseError(std::string("line ") + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        if (profile) c.profile_texts[c.sessions.back().character_id] = std::move(*profile);
    }
    return c;
}

Corpus load_corpus_file(const std::string& path) { return read_corpus(detail::read_file(path)); }

std::string write_corpus(const Corpus& corpus) {
    std::string out;
    std::set<std::string> written;
    for (const auto& s : corpus.sessions) {
        std::optional<std::string> profile;
        if (!written.count(s.character_id)) {
            const auto it = corpus.profile_texts.find(s.character_id);
            if (it != corpus.profile_texts.end()) {
                profile = it->second;
                written.insert(s.character_id);
            }
        }
        out += session_to_json_line(s, profile);
        out += '\n';
    }
    return out;
}

void save_corpus_file(const Corpus& corpus, const std::string& path) { detail::write_file(path, write_corpus(corpus)); }

// ---------------------------------------------------------------------------
// Event log and session store
// ---------------------------------------------------------------------------

EventLog::EventLog(std::string path) : path_(std::move(path)) {
    std::ofstream touch(path_, std::ios::app | std::ios::binary);
    if (!touch) throw IoError("cannot open event log '" + path_ + "'");
    touch.close();
    lines_ = read_file(path_);
}

void EventLog::append(std::string json_line) {
    if (json_line.find('\n') != std::string::npos) throw Error("event log records must be single lines");
    std::lock_guard lock(mutex_);
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        out << json_line << '\n';
        out.flush();
        if (!out) throw IoError("cannot append to event log '" + path_ + "'");
    }
    lines_.push_back(std::move(json_line));
}

std::vector<std::string> EventLog::lines() const {
    std::lock_guard lock(mutex_);
    return lines_;
}

std::size_t EventLog::size() const {
    std::lock_guard lock(mutex_);
    return lines_.size();
}

std::vector<std::string> EventLog::read_file(const std::string& path) {
    std::vector<std::string> out;
    const auto content = detail::read_file(path);
    for (auto line : split_lines(content))
        if (!trim(line).empty()) out.emplace_back(line);
    return out;
}

namespace {

std::string session_event(std::string_view type, const detail::json& payload) {
    detail::json j;
    j["event"] = type;
    for (auto it = payload.begin(); it != payload.end(); ++it) j[it.key()] = it.value();
    return detail::dump_line(j);
}

}  // namespace

SessionStore::SessionStore(EventLog& log) : log_(log), sessions_(replay(log.lines())) {}

void SessionStore::create(const DialogueSession& s) {
    std::lock_guard lock(mutex_);
    if (sessions_.count(s.id)) throw ConflictError("session '" + s.id + "' already exists");
    if (auto v = validate_session(s); !v.empty()) throw ValidationError("invalid session", std::move(v));
    detail::json payload;
    payload["session"] = detail::parse_json(session_to_json_line(s), "session");
    log_.append(session_event("session-created", payload));
    sessions_[s.id] = s;
}

DialogueSession SessionStore::append(const std::string& session_id, const Utterance& u) {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("session '" + session_id + "' not found");
    auto next = append_turn(it->second, u);
    detail::json payload;
    payload["session_id"] = session_id;
    payload["turn"] = utterance_json(u);
    log_.append(session_event("turn-appended", payload));
    it->second = std::move(next);
    return it->second;
}

DialogueSession SessionStore::close(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("session '" + session_id + "' not found");
    auto next = close_session(it->second);
    detail::json payload;
    payload["session_id"] = session_id;
    log_.append(session_event("session-closed", payload));
    it->second = std::move(next);
    return it->second;
}

DialogueSession SessionStore::get(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("session '" + session_id + "' not found");
    return it->second;
}

std::vector<DialogueSession> SessionStore::all() const {
    std::lock_guard lock(mutex_);
    std::vector<DialogueSession> out;
    out.reserve(sessions_.size());
    for (const auto& [_, s] : sessions_) out.push_back(s);
    return out;
}

bool SessionStore::contains(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    return sessions_.count(session_id) > 0;
}

std::map<std::string, DialogueSession> SessionStore::replay(const std::vector<std::string>& lines) {
    std::map<std::string, DialogueSession> out;
    for (const auto& line : lines) {
        const auto j = detail::parse_json(line, "event");
        const auto type = detail::field_or<std::string>(j, "event", "");
        if (type == "session-created") {
            auto s = session_from_json_line(detail::dump_line(j.at("session")));
            out[s.id] = std::move(s);
        } else if (type == "turn-appended") {
            auto& s = out.at(j.at("session_id").get<std::string>());
            const auto& t = j.at("turn");
            Utterance u;
            u.speaker = parse_enum<Speaker>(t, "speaker", &parse_speaker);
            u.text = t.at("text").get<std::string>();
            u.stage_directions = detail::opt_field<std::string>(t, "stage_directions");
            u.timestamp_ms = detail::field_or<std::int64_t>(t, "timestamp_ms", 0);
            s = append_turn(std::move(s), std::move(u));
        } else if (type == "session-closed") {
            auto& s = out.at(j.at("session_id").get<std::string>());
            s = close_session(std::move(s));
        }
    }
    return out;
}

}  // namespace chardial
