#pragma once

#include "chardial/dialogue.hpp"
#include "chardial/profile.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chardial {

inline constexpr int kExportFormatVersion = 1;

struct TrainingTurn {
    Speaker speaker = Speaker::Character;
    std::string text;
    std::optional<std::string> stage_directions;

    bool operator==(const TrainingTurn&) const = default;
};

/// One (prompt variant, dialogue) pair. `target_turns` lists the loss-bearing
/// turn indices; `source` carries the session provenance ("role-play",
/// "synthetic", "literary", "prototype-interaction") so mixes can be controlled.
struct TrainingRecord {
    std::string session_id;
    std::string variant_id;
    std::string prompt_text;
    std::vector<TrainingTurn> turns;
    std::vector<std::size_t> target_turns;
    std::string source;

    bool operator==(const TrainingRecord&) const = default;
};

struct TrainingOptions {
    /// Also mark player turns as targets (off: only the character is trained).
    bool include_player_targets = false;
};

std::vector<Violation> validate_record(const TrainingRecord& r, const TrainingOptions& options = {});

/// One record per variant. Throws ProtocolError for an open session and
/// ValidationError for an invalid session or a variant of another character.
std::vector<TrainingRecord> build_training_records(const DialogueSession& session,
                                                   const std::vector<PromptVariant>& variants,
                                                   const TrainingOptions& options = {});

/// Written beside the export as `<path>.manifest.json`.
struct ExportManifest {
    int format_version = kExportFormatVersion;
    std::string path;
    std::size_t records_in = 0;
    std::size_t records_written = 0;
    std::size_t duplicates_removed = 0;
    std::size_t bytes = 0;
    std::string sha256;

    bool operator==(const ExportManifest&) const = default;
};

std::string training_record_to_json_line(const TrainingRecord& r);
TrainingRecord training_record_from_json_line(std::string_view line);

/// Writes JSON lines deduplicated by (session_id, variant_id), first occurrence
/// wins. Throws ValidationError for empty input and IoError on write failure.
ExportManifest export_corpus(const std::vector<TrainingRecord>& records, const std::string& path);
std::vector<TrainingRecord> read_training_records(const std::string& path);
ExportManifest read_manifest(const std::string& manifest_path);
std::string manifest_to_json(const ExportManifest& m);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

}  // namespace chardial
