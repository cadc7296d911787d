#include "chardial/refinement.hpp"

#include "chardial/text.hpp"
#include "json_util.hpp"

namespace chardial {

std::vector<Violation> validate_record(const RefinementRecord& r) {
    std::vector<Violation> out;
    if (trim(r.session_id).empty()) out.push_back({"session_id", "session id empty"});
    if (r.user_edited_text) {
        if (*r.user_edited_text == r.model_text)
            out.push_back({"user_edited_text", "edit equal to the model text must be stored as a plain accept"});
        if (trim(*r.user_edited_text).empty()) out.push_back({"user_edited_text", "edited text is empty"});
        if (!r.accepted) out.push_back({"accepted", "an edit is an accepted turn"});
    }
    return out;
}

void RefinementLedger::append(RefinementRecord r) {
    if (auto v = validate_record(r); !v.empty()) throw ValidationError("invalid refinement record", std::move(v));
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(r));
}

std::vector<RefinementRecord> RefinementLedger::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::vector<RefinementRecord> RefinementLedger::records_for(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    std::vector<RefinementRecord> out;
    for (const auto& r : records_)
        if (r.session_id == session_id) out.push_back(r);
    return out;
}

std::optional<std::string> RefinementLedger::original_text(const std::string& session_id,
                                                           std::size_t turn_index) const {
    std::lock_guard lock(mutex_);
    for (const auto& r : records_)
        if (r.session_id == session_id && r.turn_index == turn_index) return r.model_text;
    return std::nullopt;
}

bool RefinementLedger::turn_accepted(const std::string& session_id, std::size_t turn_index) const {
    std::lock_guard lock(mutex_);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it)
        if (it->session_id == session_id && it->turn_index == turn_index) return it->accepted;
    return false;
}

bool RefinementLedger::fully_accepted(const DialogueSession& s) const {
    bool any = false;
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        if (s.turns[i].speaker != Speaker::Character) continue;
        any = true;
        if (!turn_accepted(s.id, i)) return false;
    }
    return any;
}

RefinementRecord prototype_refine(DialogueSession& session, std::size_t turn_index, const RefineDecision& decision,
                                  RefinementLedger& ledger, std::int64_t timestamp_ms) {
    if (session.provenance != Provenance::PrototypeInteraction)
        throw ProtocolError(ProtocolError::Kind::WrongProvenance,
                            "session '" + session.id + "' is not a prototype interaction");
    if (session.status == SessionStatus::Closed)
        throw ProtocolError(ProtocolError::Kind::ClosedSession, "session '" + session.id + "' is closed");
    if (turn_index >= session.turns.size())
        throw ProtocolError(ProtocolError::Kind::TurnOutOfRange, "turn " + std::to_string(turn_index) +
                                                                     " is out of range");
    auto& turn = session.turns[turn_index];
    if (turn.speaker != Speaker::Character)
        throw ProtocolError(ProtocolError::Kind::NotCharacterTurn,
                            "turn " + std::to_string(turn_index) + " is not a character turn");

    RefinementRecord r;
    r.session_id = session.id;
    r.turn_index = turn_index;
    r.model_text = ledger.original_text(session.id, turn_index).value_or(turn.text);
    r.timestamp_ms = timestamp_ms;
    switch (decision.action) {
        case RefineDecision::Action::Accept: r.accepted = true; break;
        case RefineDecision::Action::Reject: r.accepted = false; break;
        case RefineDecision::Action::Edit:
            if (trim(decision.text).empty())
                throw ProtocolError(ProtocolError::Kind::InvalidUtterance, "edited text is empty");
            r.accepted = true;
            if (decision.text != r.model_text) r.user_edited_text = decision.text;
            break;
    }
    ledger.append(r);
    if (decision.action == RefineDecision::Action::Edit) turn.text = decision.text;
    return r;
}

std::vector<DialogueSession> export_refined(const std::vector<DialogueSession>& sessions,
                                            const RefinementLedger& ledger) {
    std::vector<DialogueSession> out;
    for (const auto& s : sessions)
        if (ledger.fully_accepted(s)) out.push_back(s);
    return out;
}

std::string refinement_to_json_line(const RefinementRecord& r) {
    detail::json j;
    j["session_id"] = r.session_id;
    j["turn_index"] = r.turn_index;
    j["model_text"] = r.model_text;
    j["user_edited_text"] = r.user_edited_text ? detail::json(*r.user_edited_text) : detail::json(nullptr);
    j["accepted"] = r.accepted;
    j["timestamp_ms"] = r.timestamp_ms;
    return detail::dump_line(j);
}

RefinementRecord refinement_from_json_line(std::string_view line) {
    const auto j = detail::parse_json(line, "refinement");
    RefinementRecord r;
    r.session_id = detail::get_field<std::string>(j, "session_id", "refinement");
    r.turn_index = detail::get_field<std::size_t>(j, "turn_index", "refinement");
    r.model_text = detail::get_field<std::string>(j, "model_text", "refinement");
    r.user_edited_text = detail::opt_field<std::string>(j, "user_edited_text");
    r.accepted = detail::get_field<bool>(j, "accepted", "refinement");
    r.timestamp_ms = detail::field_or<std::int64_t>(j, "timestamp_ms", 0);
    return r;
}

}  // namespace chardial
