#pragma once

#include "chardial/dialogue.hpp"
#include "chardial/error.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chardial {

struct TranscriptLine {
    std::string speaker;
    std::string text;
    bool operator==(const TranscriptLine&) const = default;
};

struct PartySummary {
    std::string name;
    std::string summary;
    bool operator==(const PartySummary&) const = default;
};

/// A manually extracted two-party dialogue from a script or novel.
struct LiteraryIngestRecord {
    std::string source_title;
    std::string context;
    std::vector<PartySummary> profiles;
    std::vector<TranscriptLine> transcript;

    bool operator==(const LiteraryIngestRecord&) const = default;
};

/// Plain-text ingest format, records separated by a title line:
///
///   === <source title>
///   [context]
///   <free text>
///   [profile <speaker name>]
///   <free text summary>
///   [profile <speaker name>]
///   <free text summary>
///   [transcript]
///   <speaker name>: <line>        (full-width colon also accepted)
///
/// Throws ParseError on malformed structure (no header, unknown section, a
/// transcript line without a speaker prefix).
std::vector<LiteraryIngestRecord> parse_literary(std::string_view text);
std::string write_literary(const LiteraryIngestRecord& rec);

struct IngestOptions {
    /// Merge consecutive statements by the same speaker into one utterance.
    bool merge_statements = true;
    enum class NonVerbal { Flag, Reject };
    NonVerbal non_verbal = NonVerbal::Flag;
};

/// Outcome of ingesting one record. Rules checked: a context span is present
/// ("no context"); exactly two speakers ("multi-party" / "single-party"); both
/// parties have non-empty summaries ("missing profile"); same-speaker runs are
/// merged, or reported as "multiple statements" when merging is off; turns made
/// only of non-verbal cues are reported under `flags` ("non-verbal only"), or as
/// violations under NonVerbal::Reject.
///
/// The first speaker in the transcript becomes the character, the other the player.
struct IngestResult {
    std::optional<DialogueSession> session;
    std::vector<Violation> violations;
    std::vector<Violation> flags;
    std::optional<PartySummary> character;
    std::optional<PartySummary> player;

    bool accepted() const noexcept { return session.has_value(); }
};

IngestResult ingest_literary(const LiteraryIngestRecord& rec, const IngestOptions& options = {},
                             std::string session_id = {});

/// Splits a leading parenthetical, e.g. "（急忙解释）别这样" -> {"急忙解释", "别这样"}.
/// Returns nullopt directions when there is none.
std::pair<std::optional<std::string>, std::string> split_stage_directions(std::string_view line);

/// True when the line consists only of parenthesized or *starred* cues.
bool is_non_verbal_only(std::string_view line);

}  // namespace chardial
