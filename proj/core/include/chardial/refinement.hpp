#pragma once

#include "chardial/dialogue.hpp"

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace chardial {

/// A user's verdict on one character turn of a prototype session.
struct RefineDecision {
    enum class Action { Accept, Edit, Reject };
    Action action = Action::Accept;
    std::string text;  // Edit only

    static RefineDecision accept() { return {Action::Accept, {}}; }
    static RefineDecision edit(std::string t) { return {Action::Edit, std::move(t)}; }
    static RefineDecision reject() { return {Action::Reject, {}}; }
};

/// `model_text` is always the prototype's original output for the turn. An
/// accept without edit leaves `user_edited_text` empty; an edit equal to the
/// model text is stored that way too.
struct RefinementRecord {
    std::string session_id;
    std::size_t turn_index = 0;
    std::string model_text;
    std::optional<std::string> user_edited_text;
    bool accepted = false;
    std::int64_t timestamp_ms = 0;

    bool operator==(const RefinementRecord&) const = default;
};

std::vector<Violation> validate_record(const RefinementRecord& r);

/// Append-only refinement history.
class RefinementLedger {
  public:
    void append(RefinementRecord r);
    std::vector<RefinementRecord> records() const;
    std::vector<RefinementRecord> records_for(const std::string& session_id) const;
    /// Original model text for a turn, if it was ever refined.
    std::optional<std::string> original_text(const std::string& session_id, std::size_t turn_index) const;
    /// Latest record for the turn decides; a turn without records is not accepted.
    bool turn_accepted(const std::string& session_id, std::size_t turn_index) const;
    bool fully_accepted(const DialogueSession& s) const;

  private:
    mutable std::mutex mutex_;
    std::vector<RefinementRecord> records_;
};

/// Applies the decision to `session` (edits replace the turn text) and records it.
/// Errors: non-prototype provenance, closed session, player turn, index out of range.
RefinementRecord prototype_refine(DialogueSession& session, std::size_t turn_index, const RefineDecision& decision,
                                  RefinementLedger& ledger, std::int64_t timestamp_ms = 0);

/// Sessions whose every character turn is accepted.
std::vector<DialogueSession> export_refined(const std::vector<DialogueSession>& sessions,
                                            const RefinementLedger& ledger);

std::string refinement_to_json_line(const RefinementRecord& r);
RefinementRecord refinement_from_json_line(std::string_view line);

}  // namespace chardial
