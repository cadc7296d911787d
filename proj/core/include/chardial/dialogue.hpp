#pragma once

#include "chardial/error.hpp"

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chardial {

enum class Speaker { Character, Player };
enum class SceneTopic { ChitChat, Interview, Love, Unrestricted };
enum class Provenance { RolePlay, Synthetic, Literary, PrototypeInteraction };
enum class SessionStatus { Open, Closed };

std::string_view to_string(Speaker s) noexcept;
std::string_view to_string(SceneTopic t) noexcept;
std::string_view to_string(Provenance p) noexcept;
std::string_view to_string(SessionStatus s) noexcept;
std::optional<Speaker> parse_speaker(std::string_view s) noexcept;
std::optional<SceneTopic> parse_topic(std::string_view s) noexcept;
std::optional<Provenance> parse_provenance(std::string_view s) noexcept;
std::optional<SessionStatus> parse_status(std::string_view s) noexcept;

inline constexpr SceneTopic kAllTopics[] = {SceneTopic::ChitChat, SceneTopic::Interview, SceneTopic::Love,
                                            SceneTopic::Unrestricted};

struct Utterance {
    Speaker speaker = Speaker::Character;
    std::string text;
    std::optional<std::string> stage_directions;
    std::int64_t timestamp_ms = 0;

    /// Unicode scalars of text plus stage directions.
    std::size_t length() const noexcept;
    bool operator==(const Utterance&) const = default;
};

struct DialogueSession {
    std::string id;
    std::string character_id;
    std::string player_id;
    std::string prompt_variant_id;
    SceneTopic topic = SceneTopic::Unrestricted;
    Provenance provenance = Provenance::RolePlay;
    SessionStatus status = SessionStatus::Open;
    std::vector<Utterance> turns;

    bool operator==(const DialogueSession&) const = default;
};

/// Returns `s` with `u` appended. Throws ProtocolError on a closed session, an
/// out-of-turn speaker (the character always opens) or blank text.
DialogueSession append_turn(DialogueSession s, Utterance u);
DialogueSession close_session(DialogueSession s);

/// Empty iff the character opens, speakers alternate and every text is non-blank.
std::vector<Violation> validate_session(const DialogueSession& s);

/// One round is a character+player exchange; a trailing character turn adds 0.5.
double round_count(const DialogueSession& s) noexcept;

/// Joins consecutive same-speaker turns into one utterance (texts separated by a
/// single space, stage directions likewise). Idempotent.
std::vector<Utterance> merge_consecutive(const std::vector<Utterance>& turns);

// ---------------------------------------------------------------------------
// Corpus statistics
// ---------------------------------------------------------------------------

struct Corpus {
    std::vector<DialogueSession> sessions;
    /// Profile text per character id, for the average profile length.
    std::map<std::string, std::string> profile_texts;
};

/// Counting rule: lengths are Unicode scalar values of the stored text including
/// whitespace and punctuation; utterance lengths include stage directions.
/// n_characters counts distinct character ids in the sessions; the average
/// profile length is over those characters that have a profile text.
struct CorpusStats {
    std::size_t n_dialogues = 0;
    double avg_rounds = 0;
    std::size_t n_characters = 0;
    double avg_profile_length = 0;
    std::size_t n_utterances_total = 0;
    std::size_t n_utterances_character = 0;
    std::size_t n_utterances_user = 0;
    double avg_utterance_length_total = 0;
    double avg_utterance_length_character = 0;
    double avg_utterance_length_user = 0;

    bool operator==(const CorpusStats&) const = default;
};

struct StatsOptions {
    /// When set, invalid sessions raise ValidationError; otherwise they are counted as-is.
    bool require_valid = true;
};

CorpusStats compute_corpus_stats(const Corpus& corpus, StatsOptions options = {});

// ---------------------------------------------------------------------------
// Corpus interchange: one JSON object per line
//
//   {"id":..,"character_id":..,"player_id":..,"prompt_variant_id":..,
//    "topic":..,"provenance":..,"status":..,
//    "turns":[{"speaker":"character"|"player","text":..,
//              "stage_directions":..(optional),"timestamp_ms":..}],
//    "character_profile_text":..(optional)}
// ---------------------------------------------------------------------------

std::string session_to_json_line(const DialogueSession& s,
                                 const std::optional<std::string>& profile_text = std::nullopt);
/// Parses one line; the embedded profile text, if any, goes to `profile_text`.
DialogueSession session_from_json_line(std::string_view line, std::optional<std::string>* profile_text = nullptr);

Corpus read_corpus(std::string_view content);
Corpus load_corpus_file(const std::string& path);
std::string write_corpus(const Corpus& corpus);
void save_corpus_file(const Corpus& corpus, const std::string& path);

// ---------------------------------------------------------------------------
// Event log
// ---------------------------------------------------------------------------

/// Append-only, line-delimited log. Each record is one JSON object. Appends are
/// serialized; when a path is given every append is flushed to disk.
class EventLog {
  public:
    EventLog() = default;
    /// Opens (creating if needed) an append-only file. Throws IoError.
    explicit EventLog(std::string path);

    void append(std::string json_line);
    std::vector<std::string> lines() const;
    std::size_t size() const;
    const std::string& path() const noexcept { return path_; }

    static std::vector<std::string> read_file(const std::string& path);

  private:
    mutable std::mutex mutex_;
    std::string path_;
    std::vector<std::string> lines_;
};

/// Session store backed by an EventLog of session-created, turn-appended and
/// session-closed events. Writes to one session are serialized.
class SessionStore {
  public:
    /// Restores any sessions already recorded in `log`.
    explicit SessionStore(EventLog& log);

    void create(const DialogueSession& s);
    DialogueSession append(const std::string& session_id, const Utterance& u);
    DialogueSession close(const std::string& session_id);
    DialogueSession get(const std::string& session_id) const;
    std::vector<DialogueSession> all() const;
    bool contains(const std::string& session_id) const;

    /// Rebuilds sessions from the log lines (other event types are ignored).
    static std::map<std::string, DialogueSession> replay(const std::vector<std::string>& lines);

  private:
    EventLog& log_;
    mutable std::mutex mutex_;
    std::map<std::string, DialogueSession> sessions_;
};

}  // namespace chardial
