#include "chardial/sft.hpp"

#include "chardial/text.hpp"
#include "json_util.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <memory>
#include <set>

namespace chardial {

namespace {

std::string_view source_name(Provenance p) {
    switch (p) {
        case Provenance::RolePlay: return "role-play";
        case Provenance::Synthetic: return "synthetic";
        case Provenance::Literary: return "literary";
        case Provenance::PrototypeInteraction: return "prototype-interaction";
    }
    return "unknown";
}

std::vector<std::size_t> expected_targets(const std::vector<TrainingTurn>& turns, const TrainingOptions& options) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < turns.size(); ++i)
        if (turns[i].speaker == Speaker::Character || options.include_player_targets) out.push_back(i);
    return out;
}

}  // namespace

std::vector<Violation> validate_record(const TrainingRecord& r, const TrainingOptions& options) {
    std::vector<Violation> out;
    if (trim(r.prompt_text).empty()) out.push_back({"prompt_text", "prompt text empty"});
    if (r.turns.empty()) out.push_back({"turns", "no turns"});
    if (r.target_turns != expected_targets(r.turns, options))
        out.push_back({"target_turns", "targets must list every character turn exactly once, in order"});
    return out;
}

std::vector<TrainingRecord> build_training_records(const DialogueSession& session,
                                                   const std::vector<PromptVariant>& variants,
                                                   const TrainingOptions& options) {
    if (session.status != SessionStatus::Closed)
        throw ProtocolError(ProtocolError::Kind::ClosedSession, "session '" + session.id + "' is still open");
    if (auto v = validate_session(session); !v.empty())
        throw ValidationError("session '" + session.id + "' is invalid", std::move(v));
    std::vector<Violation> mismatch;
    for (const auto& v : variants) {
        if (v.profile_id != session.character_id)
            mismatch.push_back({"variant " + v.id, "variant belongs to '" + v.profile_id + "', session character is '" +
                                                       session.character_id + "'"});
    }
    if (!mismatch.empty()) throw ValidationError("variant/character mismatch", std::move(mismatch));

    std::vector<TrainingTurn> turns;
    turns.reserve(session.turns.size());
    for (const auto& u : session.turns) turns.push_back({u.speaker, u.text, u.stage_directions});
    const auto targets = expected_targets(turns, options);

    std::vector<TrainingRecord> out;
    out.reserve(variants.size());
    for (const auto& v : variants) {
        TrainingRecord r;
        r.session_id = session.id;
        r.variant_id = v.id;
        r.prompt_text = v.text;
        r.turns = turns;
        r.target_turns = targets;
        r.source = std::string(source_name(session.provenance));
        if (auto bad = validate_record(r, options); !bad.empty())
            throw ValidationError("invalid training record", std::move(bad));
        out.push_back(std::move(r));
    }
    return out;
}

std::string training_record_to_json_line(const TrainingRecord& r) {
    detail::json j;
    j["format_version"] = kExportFormatVersion;
    j["session_id"] = r.session_id;
    j["variant_id"] = r.variant_id;
    j["source"] = r.source;
    j["prompt_text"] = r.prompt_text;
    auto turns = detail::json::array();
    for (const auto& t : r.turns) {
        detail::json tj;
        tj["speaker"] = to_string(t.speaker);
        tj["text"] = t.text;
        if (t.stage_directions) tj["stage_directions"] = *t.stage_directions;
        turns.push_back(std::move(tj));
    }
    j["turns"] = std::move(turns);
    j["target_turns"] = r.target_turns;
    return detail::dump_line(j);
}

TrainingRecord training_record_from_json_line(std::string_view line) {
    const auto j = detail::parse_json(line, "training record");
    const auto version = detail::get_field<int>(j, "format_version", "training record");
    if (version != kExportFormatVersion)
        throw ParseError("training record: unsupported format_version " + std::to_string(version), 0);
    TrainingRecord r;
    r.session_id = detail::get_field<std::string>(j, "session_id", "training record");
    r.variant_id = detail::get_field<std::string>(j, "variant_id", "training record");
    r.source = detail::get_field<std::string>(j, "source", "training record");
    r.prompt_text = detail::get_field<std::string>(j, "prompt_text", "training record");
    for (const auto& tj : detail::get_field<detail::json>(j, "turns", "training record")) {
        TrainingTurn t;
        const auto sp = parse_speaker(detail::get_field<std::string>(tj, "speaker", "turn"));
        if (!sp) throw ParseError("training record: bad speaker", 0);
        t.speaker = *sp;
        t.text = detail::get_field<std::string>(tj, "text", "turn");
        t.stage_directions = detail::opt_field<std::string>(tj, "stage_directions");
        r.turns.push_back(std::move(t));
    }
    r.target_turns = detail::get_field<std::vector<std::size_t>>(j, "target_turns", "training record");
    return r;
}

std::string manifest_to_json(const ExportManifest& m) {
    detail::json j;
    j["format_version"] = m.format_version;
    j["path"] = m.path;
    j["records_in"] = m.records_in;
    j["records_written"] = m.records_written;
    j["duplicates_removed"] = m.duplicates_removed;
    j["bytes"] = m.bytes;
    j["sha256"] = m.sha256;
    return j.dump(2);
}

ExportManifest export_corpus(const std::vector<TrainingRecord>& records, const std::string& path) {
    if (records.empty()) throw ValidationError(Violation{"records", "nothing to export"});
    ExportManifest m;
    m.path = path;
    m.records_in = records.size();
    std::set<std::pair<std::string, std::string>> seen;
    std::string content;
    for (const auto& r : records) {
        if (!seen.emplace(r.session_id, r.variant_id).second) {
            ++m.duplicates_removed;
            continue;
        }
        content += training_record_to_json_line(r);
        content += '\n';
        ++m.records_written;
    }
    detail::write_file(path, content);
    m.bytes = content.size();
    m.sha256 = sha256_hex(content);
    detail::write_file(path + ".manifest.json", manifest_to_json(m) + "\n");
    return m;
}

std::vector<TrainingRecord> read_training_records(const std::string& path) {
    std::vector<TrainingRecord> out;
    std::size_t line_no = 0;
    const auto content = detail::read_file(path);
    for (auto line : split_lines(content)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(training_record_from_json_line(line));
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    return out;
}

ExportManifest read_manifest(const std::string& manifest_path) {
    const auto j = detail::parse_json(detail::read_file(manifest_path), "manifest");
    ExportManifest m;
    m.format_version = detail::get_field<int>(j, "format_version", "manifest");
    m.path = detail::get_field<std::string>(j, "path", "manifest");
    m.records_in = detail::get_field<std::size_t>(j, "records_in", "manifest");
    m.records_written = detail::get_field<std::size_t>(j, "records_written", "manifest");
    m.duplicates_removed = detail::get_field<std::size_t>(j, "duplicates_removed", "manifest");
    m.bytes = detail::get_field<std::size_t>(j, "bytes", "manifest");
    m.sha256 = detail::get_field<std::string>(j, "sha256", "manifest");
    return m;
}

std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw Error("SHA-256 computation failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(detail::read_file(path)); }

}  // namespace chardial
