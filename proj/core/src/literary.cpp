#include "chardial/literary.hpp"

#include "chardial/sft.hpp"
#include "chardial/text.hpp"

#include <algorithm>

namespace chardial {

namespace {

struct Bracket {
    std::string_view open;
    std::string_view close;
};

constexpr Bracket kBrackets[] = {{"(", ")"}, {"（", "）"}, {"*", "*"}, {"[", "]"}, {"【", "】"}};

/// Punctuation that may surround a cue without making the line verbal.
bool is_filler(char32_t c) {
    if (c < 0x80) return c == ' ' || c == '\t' || (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
                         (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
    switch (c) {
        case 0x2026:  // …
        case 0x2014:  // em dash
        case 0x3000:
        case 0x3001:  // 、
        case 0x3002:  // 。
        case 0xFF0C:  // ，
        case 0xFF01:  // ！
        case 0xFF1F:  // ？
        case 0xFF1B:  // ；
        case 0xFF1A:  // ：
        case 0x300C:  // 「
        case 0x300D:  // 」
        case 0x201C:
        case 0x201D: return true;
        default: return false;
    }
}

std::optional<std::pair<std::string, std::string>> split_speaker(std::string_view line) {
    const auto ascii = line.find(':');
    const auto wide = line.find("：");
    std::size_t pos = std::min(ascii, wide);
    if (pos == std::string_view::npos) return std::nullopt;
    const std::size_t width = pos == ascii ? 1 : std::string_view("：").size();
    const auto name = trim(line.substr(0, pos));
    if (name.empty()) return std::nullopt;
    return std::make_pair(std::string(name), std::string(trim(line.substr(pos + width))));
}

}  // namespace

std::pair<std::optional<std::string>, std::string> split_stage_directions(std::string_view line) {
    const auto t = trim(line);
    for (const auto& b : kBrackets) {
        if (b.open == "*" || !starts_with(t, b.open)) continue;
        const auto end = t.find(b.close, b.open.size());
        if (end == std::string_view::npos) break;
        auto directions = std::string(trim(t.substr(b.open.size(), end - b.open.size())));
        auto rest = std::string(trim(t.substr(end + b.close.size())));
        if (directions.empty()) return {std::nullopt, std::move(rest)};
        return {std::move(directions), std::move(rest)};
    }
    return {std::nullopt, std::string(t)};
}

bool is_non_verbal_only(std::string_view line) {
    const auto t = trim(line);
    if (t.empty()) return false;
    bool saw_cue = false;
    std::size_t pos = 0;
    while (pos < t.size()) {
        bool consumed = false;
        for (const auto& b : kBrackets) {
            if (t.compare(pos, b.open.size(), b.open) != 0) continue;
            const auto end = t.find(b.close, pos + b.open.size());
            if (end == std::string_view::npos) continue;
            if (!trim(t.substr(pos + b.open.size(), end - pos - b.open.size())).empty()) saw_cue = true;
            pos = end + b.close.size();
            consumed = true;
            break;
        }
        if (consumed) continue;
        if (!is_filler(decode_scalar(t, pos))) return false;
    }
    return saw_cue;
}

std::vector<LiteraryIngestRecord> parse_literary(std::string_view text) {
    enum class Section { None, Context, Profile, Transcript };
    std::vector<LiteraryIngestRecord> out;
    Section section = Section::None;
    std::vector<std::string> buffer;

    const auto flush = [&] {
        if (out.empty()) return;
        auto& rec = out.back();
        std::string joined;
        for (const auto& b : buffer) {
            if (!joined.empty()) joined += '\n';
            joined += b;
        }
        if (section == Section::Context) rec.context = std::move(joined);
        if (section == Section::Profile) rec.profiles.back().summary = std::move(joined);
        buffer.clear();
    };

    std::size_t line_no = 0;
    for (auto raw : split_lines(text)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        const auto t = trim(raw);
        if (starts_with(raw, "=== ") || raw == "===") {
            flush();
            section = Section::None;
            LiteraryIngestRecord rec;
            rec.source_title = std::string(trim(raw.substr(3)));
            out.push_back(std::move(rec));
            continue;
        }
        if (out.empty()) {
            if (t.empty() || t.front() == '#') continue;
            throw ParseError("expected '=== <title>' before content", line_no);
        }
        if (t.size() >= 2 && t.front() == '[' && t.back() == ']') {
            const auto head = t.substr(1, t.size() - 2);
            flush();
            if (head == "context") {
                section = Section::Context;
            } else if (head == "transcript") {
                section = Section::Transcript;
            } else if (starts_with(head, "profile ") || head == "profile") {
                section = Section::Profile;
                out.back().profiles.push_back({std::string(trim(head.substr(7))), {}});
            } else {
                throw ParseError("unknown section [" + std::string(head) + "]", line_no);
            }
            continue;
        }
        switch (section) {
            case Section::None:
                if (!t.empty()) throw ParseError("content outside a section", line_no);
                break;
            case Section::Context:
            case Section::Profile:
                if (!t.empty()) buffer.emplace_back(t);
                break;
            case Section::Transcript: {
                if (t.empty()) break;
                auto parts = split_speaker(t);
                if (!parts) throw ParseError("transcript line without a speaker prefix", line_no);
                out.back().transcript.push_back({std::move(parts->first), std::move(parts->second)});
                break;
            }
        }
    }
    flush();
    return out;
}

std::string write_literary(const LiteraryIngestRecord& rec) {
    std::string out = "=== " + rec.source_title + "\n";
    out += "[context]\n";
    if (!rec.context.empty()) out += rec.context + "\n";
    for (const auto& p : rec.profiles) {
        out += "[profile " + p.name + "]\n";
        if (!p.summary.empty()) out += p.summary + "\n";
    }
    out += "[transcript]\n";
    for (const auto& l : rec.transcript) out += l.speaker + ": " + l.text + "\n";
    return out;
}

IngestResult ingest_literary(const LiteraryIngestRecord& rec, const IngestOptions& options, std::string session_id) {
    IngestResult r;

    // (a) context span
    if (trim(rec.context).empty()) r.violations.push_back({"context", "no context"});

    // (b) exactly two parties
    std::vector<std::string> speakers;
    for (const auto& l : rec.transcript)
        if (std::find(speakers.begin(), speakers.end(), l.speaker) == speakers.end()) speakers.push_back(l.speaker);
    if (speakers.size() > 2) r.violations.push_back({"transcript", "multi-party"});
    if (speakers.size() < 2) r.violations.push_back({"transcript", "single-party"});

    // (c) both profile summaries
    const auto summary_of = [&](const std::string& name) -> std::optional<PartySummary> {
        for (const auto& p : rec.profiles)
            if (p.name == name && !trim(p.summary).empty()) return p;
        return std::nullopt;
    };
    if (speakers.size() == 2) {
        for (const auto& s : speakers)
            if (!summary_of(s)) r.violations.push_back({"profile " + s, "missing profile"});
        r.character = summary_of(speakers[0]);
        r.player = summary_of(speakers[1]);
    } else {
        std::size_t with_summary = 0;
        for (const auto& p : rec.profiles)
            if (!trim(p.summary).empty()) ++with_summary;
        if (with_summary < 2) r.violations.push_back({"profiles", "missing profile"});
    }

    // (e) non-verbal cues, and turn construction
    std::vector<Utterance> turns;
    for (std::size_t i = 0; i < rec.transcript.size(); ++i) {
        const auto& l = rec.transcript[i];
        const auto field = "transcript[" + std::to_string(i) + "]";
        Utterance u;
        u.speaker = !speakers.empty() && l.speaker == speakers[0] ? Speaker::Character : Speaker::Player;
        if (trim(l.text).empty()) {
            r.violations.push_back({field, "empty line"});
            continue;
        }
        if (is_non_verbal_only(l.text)) {
            Violation v{field, "non-verbal only"};
            if (options.non_verbal == IngestOptions::NonVerbal::Reject) {
                r.violations.push_back(std::move(v));
            } else {
                r.flags.push_back(std::move(v));
            }
            u.text = std::string(trim(l.text));
        } else {
            auto [directions, text] = split_stage_directions(l.text);
            u.stage_directions = std::move(directions);
            u.text = std::move(text);
        }
        turns.push_back(std::move(u));
    }

    // (d) consecutive statements by one speaker
    if (options.merge_statements) {
        turns = merge_consecutive(turns);
    } else {
        for (std::size_t i = 1; i < turns.size(); ++i) {
            if (turns[i].speaker == turns[i - 1].speaker) {
                r.violations.push_back({"transcript", "multiple statements"});
                break;
            }
        }
    }

    if (!r.violations.empty()) return r;

    DialogueSession s;
    s.id = session_id.empty() ? "lit-" + sha256_hex(write_literary(rec)).substr(0, 12) : std::move(session_id);
    s.character_id = speakers[0];
    s.player_id = speakers[1];
    s.topic = SceneTopic::Unrestricted;
    s.provenance = Provenance::Literary;
    s.status = SessionStatus::Closed;
    s.turns = std::move(turns);
    if (auto v = validate_session(s); !v.empty()) {
        r.violations = std::move(v);
        return r;
    }
    r.session = std::move(s);
    return r;
}

}  // namespace chardial
