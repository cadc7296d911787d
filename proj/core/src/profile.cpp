#include "chardial/profile.hpp"

#include "chardial/text.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <array>

namespace chardial {

namespace {

struct CategoryName {
    CharacterCategory category;
    std::string_view id;
    std::string_view display;
};

constexpr std::array<CategoryName, 4> kCategoryNames{{
    {CharacterCategory::Celebrities, "Celebrities", "celebrity"},
    {CharacterCategory::DailyLife, "DailyLife", "daily life"},
    {CharacterCategory::GamesVideos, "GamesVideos", "games & videos"},
    {CharacterCategory::VirtualLove, "VirtualLove", "virtual love"},
}};

constexpr std::array<std::pair<VariantKind, std::string_view>, 4> kVariantNames{{
    {VariantKind::Canonical, "canonical"},
    {VariantKind::Summarized, "summarized"},
    {VariantKind::Paraphrased, "paraphrased"},
    {VariantKind::Stylized, "stylized"},
}};

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i];
    }
    return out;
}

bool valid_category(CharacterCategory c) {
    return std::any_of(kCategoryNames.begin(), kCategoryNames.end(),
                       [c](const CategoryName& n) { return n.category == c; });
}

}  // namespace

std::string_view to_string(CharacterCategory c) noexcept {
    for (const auto& n : kCategoryNames)
        if (n.category == c) return n.id;
    return "unknown";
}

std::string_view display_name(CharacterCategory c) noexcept {
    for (const auto& n : kCategoryNames)
        if (n.category == c) return n.display;
    return "unknown";
}

std::optional<CharacterCategory> parse_category(std::string_view s) noexcept {
    for (const auto& n : kCategoryNames)
        if (n.id == s) return n.category;
    return std::nullopt;
}

std::string_view to_string(VariantKind k) noexcept {
    for (const auto& [kind, name] : kVariantNames)
        if (kind == k) return name;
    return "unknown";
}

std::optional<VariantKind> parse_variant_kind(std::string_view s) noexcept {
    for (const auto& [kind, name] : kVariantNames)
        if (name == s) return kind;
    return std::nullopt;
}

bool AttributeSet::empty() const noexcept {
    return identities.empty() && likes.empty() && dislikes.empty() && viewpoints.empty() && experiences.empty() &&
           achievements.empty() && social_relationships.empty() && other.empty();
}

std::optional<std::string> AttributeSet::name() const {
    for (const auto& f : identities)
        if (f.key == "name") return f.value;
    return std::nullopt;
}

std::vector<Violation> validate_profile(const CharacterProfile& p) {
    std::vector<Violation> out;
    if (trim(p.id).empty()) out.push_back({"id", "id empty"});
    if (!valid_category(p.category)) out.push_back({"category", "unknown category"});
    const bool no_text = !p.free_text || trim(*p.free_text).empty();
    if (p.attributes.empty() && no_text) out.push_back({"profile", "profile empty"});
    for (const auto& f : p.attributes.identities)
        if (f.key == "name" && trim(f.value).empty()) out.push_back({"identities.name", "name empty"});
    return out;
}

std::vector<Violation> validate_player(const PlayerProfile& p) {
    std::vector<Violation> out;
    if (trim(p.id).empty()) out.push_back({"id", "id empty"});
    if (const auto* c = std::get_if<CharacterProfile>(&p.kind)) {
        for (auto v : validate_profile(*c)) {
            v.field = "character." + v.field;
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::vector<Violation> validate_variant(const PromptVariant& v) {
    std::vector<Violation> out;
    if (trim(v.text).empty()) out.push_back({"text", "text empty"});
    if (v.kind == VariantKind::Canonical && v.provenance.source != VariantProvenance::Source::Template)
        out.push_back({"provenance", "canonical variant must come from a template"});
    return out;
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

namespace {

// A key line must not read as a comment, section or record marker.
std::string escape_item(std::string_view s, bool key) {
    std::string out;
    out.reserve(s.size());
    if (key && !s.empty() && (s[0] == '#' || s[0] == '[' || s[0] == '@')) {
        out += '\\';
        out += s[0];
        s.remove_prefix(1);
    }
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '=':
                if (key) {
                    out += "\\=";
                    break;
                }
                [[fallthrough]];
            default: out += c;
        }
    }
    return out;
}

std::string unescape_item(std::string_view s, std::size_t line) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (++i == s.size()) throw ParseError("dangling escape", line);
        switch (s[i]) {
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            case '=':
            case '#':
            case '[':
            case '@': out += s[i]; break;
            default: throw ParseError(std::string("unknown escape \\") + s[i], line);
        }
    }
    return out;
}

/// Splits "key = value" at the first unescaped " = ".
std::pair<std::string, std::string> split_pair(std::string_view s, std::size_t line) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\') {
            ++i;
            continue;
        }
        if (s[i] == '=') {
            if (i == 0 || s[i - 1] != ' ' || (i + 1 < s.size() && s[i + 1] != ' '))
                throw ParseError("expected 'key = value'", line);
            const auto value = i + 2 <= s.size() ? s.substr(i + 2) : std::string_view{};
            return {unescape_item(s.substr(0, i - 1), line), unescape_item(value, line)};
        }
    }
    throw ParseError("expected 'key = value'", line);
}

enum class Section {
    None,
    Identities,
    Likes,
    Dislikes,
    Viewpoints,
    Experiences,
    Achievements,
    Relationships,
    Other,
    Linguistic,
    Personality,
    FreeText
};

constexpr std::array<std::pair<Section, std::string_view>, 11> kSections{{
    {Section::Identities, "identities"},
    {Section::Likes, "likes"},
    {Section::Dislikes, "dislikes"},
    {Section::Viewpoints, "viewpoints"},
    {Section::Experiences, "experiences"},
    {Section::Achievements, "achievements"},
    {Section::Relationships, "social_relationships"},
    {Section::Other, "other"},
    {Section::Linguistic, "linguistic_features"},
    {Section::Personality, "personality"},
    {Section::FreeText, "free_text"},
}};

std::vector<std::string>* list_for(CharacterProfile& p, Section s) {
    switch (s) {
        case Section::Likes: return &p.attributes.likes;
        case Section::Dislikes: return &p.attributes.dislikes;
        case Section::Viewpoints: return &p.attributes.viewpoints;
        case Section::Experiences: return &p.attributes.experiences;
        case Section::Achievements: return &p.attributes.achievements;
        case Section::Other: return &p.attributes.other;
        case Section::Linguistic: return &p.behaviors.linguistic_features;
        case Section::Personality: return &p.behaviors.personality;
        default: return nullptr;
    }
}

void write_list(std::string& out, std::string_view section, const std::vector<std::string>& items) {
    if (items.empty()) return;
    out += "[";
    out += section;
    out += "]\n";
    for (const auto& item : items) {
        out += "- ";
        out += escape_item(item, false);
        out += '\n';
    }
}

std::vector<std::string_view> split_keep_empty(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
}

}  // namespace

std::string write_profile(const CharacterProfile& p) {
    std::string out = "@profile " + escape_item(p.id, false) + "\n";
    out += "category: ";
    out += to_string(p.category);
    out += '\n';
    const auto& a = p.attributes;
    if (!a.identities.empty()) {
        out += "[identities]\n";
        for (const auto& f : a.identities) out += escape_item(f.key, true) + " = " + escape_item(f.value, false) + "\n";
    }
    write_list(out, "likes", a.likes);
    write_list(out, "dislikes", a.dislikes);
    write_list(out, "viewpoints", a.viewpoints);
    write_list(out, "experiences", a.experiences);
    write_list(out, "achievements", a.achievements);
    if (!a.social_relationships.empty()) {
        out += "[social_relationships]\n";
        for (const auto& r : a.social_relationships)
            out += escape_item(r.kind, true) + " = " + escape_item(r.counterpart, false) + "\n";
    }
    write_list(out, "other", a.other);
    write_list(out, "linguistic_features", p.behaviors.linguistic_features);
    write_list(out, "personality", p.behaviors.personality);
    if (p.free_text) {
        out += "[free_text]\n";
        if (!p.free_text->empty()) {
            for (auto line : split_keep_empty(*p.free_text)) {
                out += "| ";
                out += escape_item(line, false);
                out += '\n';
            }
        }
    }
    out += "@end\n";
    return out;
}

std::string write_profiles(const std::vector<CharacterProfile>& profiles) {
    std::string out;
    for (const auto& p : profiles) out += write_profile(p);
    return out;
}

std::vector<ProfileImport> import_profiles(std::string_view document) {
    std::vector<ProfileImport> result;
    const auto lines = split_keep_empty(document);

    std::optional<CharacterProfile> current;
    ProfileImport pending;
    Section section = Section::None;
    std::vector<std::string> free_lines;
    bool category_seen = false;

    const auto finish = [&] {
        if (section == Section::FreeText || !free_lines.empty()) {
            current->free_text = join_lines(free_lines);
        }
        if (!category_seen) pending.violations.push_back({"category", "missing category"});
        for (auto& v : validate_profile(*current)) {
            // Already reported by the raw category check.
            if (v.rule == "unknown category") continue;
            pending.violations.push_back(std::move(v));
        }
        if (pending.violations.empty()) pending.profile = std::move(*current);
        result.push_back(std::move(pending));
        current.reset();
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view raw = lines[i];
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        const std::size_t line_no = i + 1;

        if (!current) {
            const auto t = trim(raw);
            if (t.empty() || t.front() == '#') continue;
            if (!starts_with(t, "@profile")) throw ParseError("expected '@profile <id>'", line_no);
            current.emplace();
            pending = ProfileImport{};
            pending.line = line_no;
            section = Section::None;
            free_lines.clear();
            category_seen = false;
            const auto id = t.substr(8);
            current->id = unescape_item(trim(id), line_no);
            continue;
        }

        if (raw == "@end") {
            finish();
            continue;
        }
        if (section == Section::FreeText && starts_with(raw, "|")) {
            auto body = raw.substr(1);
            if (starts_with(body, " ")) body.remove_prefix(1);
            free_lines.push_back(unescape_item(body, line_no));
            continue;
        }
        const auto t = trim(raw);
        if (t.empty() || t.front() == '#') continue;

        if (t.front() == '[' && t.back() == ']') {
            const auto name = t.substr(1, t.size() - 2);
            const auto it = std::find_if(kSections.begin(), kSections.end(),
                                         [&](const auto& s) { return s.second == name; });
            if (it == kSections.end()) throw ParseError("unknown section [" + std::string(name) + "]", line_no);
            section = it->first;
            continue;
        }
        if (section == Section::None && starts_with(t, "category:")) {
            category_seen = true;
            const auto value = trim(t.substr(9));
            if (const auto c = parse_category(value)) {
                current->category = *c;
            } else {
                pending.violations.push_back({"category", "unknown category"});
            }
            continue;
        }
        switch (section) {
            case Section::Identities: {
                auto [k, v] = split_pair(raw, line_no);
                current->attributes.identities.push_back({std::move(k), std::move(v)});
                break;
            }
            case Section::Relationships: {
                auto [k, v] = split_pair(raw, line_no);
                current->attributes.social_relationships.push_back({std::move(k), std::move(v)});
                break;
            }
            case Section::None:
                throw ParseError("content outside a section", line_no);
            case Section::FreeText:
                throw ParseError("free text lines start with '|'", line_no);
            default: {
                if (!starts_with(raw, "- ")) throw ParseError("list items start with '- '", line_no);
                list_for(*current, section)->push_back(unescape_item(raw.substr(2), line_no));
            }
        }
    }
    if (current) throw ParseError("record '" + current->id + "' is missing '@end'", lines.size());
    return result;
}

CharacterProfile parse_profile(std::string_view document) {
    auto imports = import_profiles(document);
    if (imports.size() != 1) throw ParseError("expected exactly one profile record", 0);
    if (!imports.front().profile) throw ValidationError("invalid profile", imports.front().violations);
    return std::move(*imports.front().profile);
}

std::vector<CharacterProfile> load_profiles_file(const std::string& path) {
    std::vector<CharacterProfile> out;
    for (auto& imp : import_profiles(detail::read_file(path))) {
        if (!imp.profile)
            throw ValidationError(path + ":" + std::to_string(imp.line) + " invalid profile", imp.violations);
        out.push_back(std::move(*imp.profile));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Verbalization
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kCanonicalEn =
    "You are {name}.\n"
    "Identity: {identities}.\n"
    "You like {likes}.\n"
    "You dislike {dislikes}.\n"
    "Your views: {viewpoints}.\n"
    "Your experiences: {experiences}.\n"
    "Your achievements: {achievements}.\n"
    "Your relationships: {relationships}.\n"
    "Other traits: {other}.\n"
    "Way of speaking: {linguistic_features}.\n"
    "Personality: {personality}.\n"
    "{free_text}\n";

constexpr std::string_view kCanonicalZh =
    "%list-separator=、\n"
    "%segment-joiner=\n"
    "你是{name}。\n"
    "身份：{identities}。\n"
    "你喜欢{likes}。\n"
    "你不喜欢{dislikes}。\n"
    "你的观点：{viewpoints}。\n"
    "你的经历：{experiences}。\n"
    "你的成就：{achievements}。\n"
    "你的社会关系：{relationships}。\n"
    "其他：{other}。\n"
    "说话方式：{linguistic_features}。\n"
    "性格：{personality}。\n"
    "{free_text}\n";

constexpr std::array<std::string_view, 12> kProfilePlaceholders{
    "name", "identities", "likes", "dislikes", "viewpoints", "experiences", "achievements", "relationships",
    "other", "linguistic_features", "personality", "free_text"};

struct ParsedTemplate {
    std::string list_separator = "; ";
    std::string segment_joiner = " ";
    std::vector<std::string> segments;
};

ParsedTemplate parse_profile_template(std::string_view text) {
    ParsedTemplate t;
    for (auto line : split_keep_empty(text)) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (starts_with(line, "%list-separator=")) {
            t.list_separator = std::string(line.substr(16));
        } else if (starts_with(line, "%segment-joiner=")) {
            t.segment_joiner = std::string(line.substr(16));
        } else if (!trim(line).empty()) {
            for (const auto& name : template_placeholders(line)) {
                if (std::find(kProfilePlaceholders.begin(), kProfilePlaceholders.end(), name) ==
                    kProfilePlaceholders.end())
                    throw TemplateError("unknown profile placeholder {" + name + "}");
            }
            t.segments.emplace_back(line);
        }
    }
    return t;
}

}  // namespace

TemplateLibrary TemplateLibrary::builtin() {
    TemplateLibrary lib;
    lib.add("canonical", std::string(kCanonicalEn));
    lib.add("canonical-zh", std::string(kCanonicalZh));
    return lib;
}

void TemplateLibrary::add(std::string id, std::string text) {
    parse_profile_template(text);  // reject bad templates early
    templates_[std::move(id)] = std::move(text);
}

void TemplateLibrary::load_file(std::string id, const std::string& path) { add(std::move(id), detail::read_file(path)); }

const std::string& TemplateLibrary::get(std::string_view id) const {
    const auto it = templates_.find(id);
    if (it == templates_.end()) throw TemplateError("unknown template id '" + std::string(id) + "'");
    return it->second;
}

bool TemplateLibrary::contains(std::string_view id) const { return templates_.find(id) != templates_.end(); }

PromptVariant verbalize_profile(const CharacterProfile& p, std::string_view template_id,
                                const TemplateLibrary& library) {
    if (auto v = validate_profile(p); !v.empty()) throw ValidationError("cannot verbalize profile", std::move(v));
    const ParsedTemplate tmpl = parse_profile_template(library.get(template_id));
    const auto& sep = tmpl.list_separator;
    const auto& a = p.attributes;

    std::vector<std::string> identity_parts;
    for (const auto& f : a.identities)
        if (f.key != "name") identity_parts.push_back(f.key + ": " + f.value);
    std::vector<std::string> relationship_parts;
    for (const auto& r : a.social_relationships) relationship_parts.push_back(r.counterpart + " (" + r.kind + ")");

    const std::map<std::string, std::string, std::less<>> values{
        {"name", a.name().value_or("")},
        {"identities", join(identity_parts, sep)},
        {"likes", join(a.likes, sep)},
        {"dislikes", join(a.dislikes, sep)},
        {"viewpoints", join(a.viewpoints, sep)},
        {"experiences", join(a.experiences, sep)},
        {"achievements", join(a.achievements, sep)},
        {"relationships", join(relationship_parts, sep)},
        {"other", join(a.other, sep)},
        {"linguistic_features", join(p.behaviors.linguistic_features, sep)},
        {"personality", join(p.behaviors.personality, sep)},
        {"free_text", std::string(trim(p.free_text.value_or("")))},
    };

    std::vector<std::string> rendered;
    for (const auto& segment : tmpl.segments) {
        const auto names = template_placeholders(segment);
        const bool all_present = std::all_of(names.begin(), names.end(), [&](const std::string& n) {
            return !trim(values.find(n)->second).empty();
        });
        if (all_present) rendered.push_back(render_template(segment, values));
    }

    PromptVariant v;
    v.profile_id = p.id;
    v.kind = VariantKind::Canonical;
    v.provenance = VariantProvenance::from_template(std::string(template_id));
    std::string text;
    for (const auto& r : rendered) {
        if (!text.empty()) text += tmpl.segment_joiner;
        text += r;
    }
    v.text = std::move(text);
    if (trim(v.text).empty()) throw TemplateError("template '" + std::string(template_id) + "' rendered no text");
    return v;
}

// ---------------------------------------------------------------------------
// Variant store and augmentation
// ---------------------------------------------------------------------------

VariantStore::Slot& VariantStore::slot(const std::string& profile_id) {
    std::lock_guard lock(index_mutex_);
    auto& s = slots_[profile_id];
    if (!s) s = std::make_unique<Slot>();
    return *s;
}

const VariantStore::Slot* VariantStore::find_slot(std::string_view profile_id) const {
    std::lock_guard lock(index_mutex_);
    const auto it = slots_.find(profile_id);
    return it == slots_.end() ? nullptr : it->second.get();
}

PromptVariant VariantStore::add(PromptVariant v) {
    if (auto bad = validate_variant(v); !bad.empty()) throw ValidationError("invalid prompt variant", std::move(bad));
    Slot& s = slot(v.profile_id);
    std::lock_guard lock(s.mutex);
    const std::string base = v.profile_id + "#" + std::string(to_string(v.kind));
    std::string id = base;
    for (int n = 2; std::any_of(s.variants.begin(), s.variants.end(), [&](const auto& x) { return x.id == id; }); ++n)
        id = base + "-" + std::to_string(n);
    v.id = std::move(id);
    s.variants.push_back(v);
    return v;
}

std::vector<PromptVariant> VariantStore::list(std::string_view profile_id) const {
    const Slot* s = find_slot(profile_id);
    if (!s) return {};
    std::lock_guard lock(const_cast<Slot*>(s)->mutex);
    return s->variants;
}

std::vector<PromptVariant> VariantStore::all() const {
    std::vector<std::string> ids;
    {
        std::lock_guard lock(index_mutex_);
        for (const auto& [id, _] : slots_) ids.push_back(id);
    }
    std::vector<PromptVariant> out;
    for (const auto& id : ids) {
        auto l = list(id);
        out.insert(out.end(), l.begin(), l.end());
    }
    return out;
}

std::optional<PromptVariant> VariantStore::find(std::string_view variant_id) const {
    const auto hash = variant_id.rfind('#');
    if (hash == std::string_view::npos) return std::nullopt;
    for (auto& v : list(variant_id.substr(0, hash)))
        if (v.id == variant_id) return v;
    return std::nullopt;
}

std::size_t VariantStore::size() const { return all().size(); }

PromptVariant augment_prompt(const PromptVariant& canonical, VariantKind kind, TextTransformer& transformer,
                             VariantStore& store, std::string_view style) {
    if (kind == VariantKind::Canonical)
        throw ValidationError(Violation{"kind", "augmentation kind must be summarized, paraphrased or stylized"});
    if (canonical.kind != VariantKind::Canonical)
        throw ValidationError(Violation{"variant", "augmentation starts from the canonical variant"});

    std::string output;
    try {
        output = transformer.transform(canonical.text, kind, style);
    } catch (const std::exception& e) {
        throw TransformerError("transformer '" + transformer.name() + "' failed: " + e.what());
    }
    if (trim(output).empty()) throw TransformerError("empty transformer output");

    PromptVariant v;
    v.profile_id = canonical.profile_id;
    v.kind = kind;
    v.text = std::move(output);
    v.provenance = VariantProvenance::from_transformer(transformer.name());
    if (kind == VariantKind::Stylized && !style.empty()) v.style = std::string(style);
    return store.add(std::move(v));
}

}  // namespace chardial
