#pragma once

#include "chardial/error.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chardial {

enum class CharacterCategory { Celebrities, DailyLife, GamesVideos, VirtualLove };

inline constexpr CharacterCategory kAllCategories[] = {
    CharacterCategory::Celebrities, CharacterCategory::DailyLife, CharacterCategory::GamesVideos,
    CharacterCategory::VirtualLove};

std::string_view to_string(CharacterCategory c) noexcept;
/// Lower-case phrase used inside generation prompts ("virtual love").
std::string_view display_name(CharacterCategory c) noexcept;
std::optional<CharacterCategory> parse_category(std::string_view s) noexcept;

struct Fact {
    std::string key;
    std::string value;
    bool operator==(const Fact&) const = default;
};

struct Relationship {
    std::string kind;
    std::string counterpart;
    bool operator==(const Relationship&) const = default;
};

/// The seven attribute categories. Interests are split into liked and disliked items.
struct AttributeSet {
    std::vector<Fact> identities;
    std::vector<std::string> likes;
    std::vector<std::string> dislikes;
    std::vector<std::string> viewpoints;
    std::vector<std::string> experiences;
    std::vector<std::string> achievements;
    std::vector<Relationship> social_relationships;
    std::vector<std::string> other;

    bool empty() const noexcept;
    /// Value of the "name" identity, if present.
    std::optional<std::string> name() const;
    bool operator==(const AttributeSet&) const = default;
};

struct BehaviorSet {
    std::vector<std::string> linguistic_features;
    std::vector<std::string> personality;

    bool empty() const noexcept { return linguistic_features.empty() && personality.empty(); }
    bool operator==(const BehaviorSet&) const = default;
};

struct CharacterProfile {
    std::string id;
    CharacterCategory category = CharacterCategory::DailyLife;
    AttributeSet attributes;
    BehaviorSet behaviors;
    std::optional<std::string> free_text;

    bool operator==(const CharacterProfile&) const = default;
};

struct PlainUser {
    bool operator==(const PlainUser&) const = default;
};

struct PlayerProfile {
    std::string id;
    std::variant<PlainUser, CharacterProfile> kind;
    std::optional<std::string> relationship;

    bool is_character() const noexcept { return std::holds_alternative<CharacterProfile>(kind); }
    bool operator==(const PlayerProfile&) const = default;
};

enum class VariantKind { Canonical, Summarized, Paraphrased, Stylized };

std::string_view to_string(VariantKind k) noexcept;
std::optional<VariantKind> parse_variant_kind(std::string_view s) noexcept;

/// Where a prompt variant's text came from: a template render or a named transformer.
struct VariantProvenance {
    enum class Source { Template, Transformer };
    Source source = Source::Template;
    std::string name;  // template id or transformer/provider name

    static VariantProvenance from_template(std::string template_id) {
        return {Source::Template, std::move(template_id)};
    }
    static VariantProvenance from_transformer(std::string provider) {
        return {Source::Transformer, std::move(provider)};
    }
    bool operator==(const VariantProvenance&) const = default;
};

struct PromptVariant {
    std::string id;  // assigned by VariantStore; empty until stored
    std::string profile_id;
    VariantKind kind = VariantKind::Canonical;
    std::string text;
    VariantProvenance provenance;
    std::optional<std::string> style;  // stylization target, free text

    bool operator==(const PromptVariant&) const = default;
};

std::vector<Violation> validate_profile(const CharacterProfile& p);
std::vector<Violation> validate_player(const PlayerProfile& p);
std::vector<Violation> validate_variant(const PromptVariant& v);

// ---------------------------------------------------------------------------
// Profile document format
//
//   @profile <id>
//   category: <Celebrities|DailyLife|GamesVideos|VirtualLove>
//   [identities]
//   <key> = <value>
//   [likes] / [dislikes] / [viewpoints] / [experiences] / [achievements] / [other]
//   - <item>
//   [social_relationships]
//   <kind> = <counterpart>
//   [linguistic_features] / [personality]
//   - <item>
//   [free_text]
//   | <line>
//   @end
//
// Items are single-line; backslash escapes \\ \n \r and, in keys, \= plus a
// leading \# \[ \@ .
// Empty sections are omitted on write. Blank lines and lines starting with '#'
// outside [free_text] are ignored on read.
// ---------------------------------------------------------------------------

/// Result of importing one raw profile document. `profile` is set only when
/// there are no violations.
struct ProfileImport {
    std::optional<CharacterProfile> profile;
    std::vector<Violation> violations;
    std::size_t line = 0;  // first line of the record
};

std::vector<ProfileImport> import_profiles(std::string_view document);
/// Imports a file containing a single record; throws ParseError / ValidationError.
CharacterProfile parse_profile(std::string_view document);
std::string write_profile(const CharacterProfile& p);
std::string write_profiles(const std::vector<CharacterProfile>& profiles);

std::vector<CharacterProfile> load_profiles_file(const std::string& path);

// ---------------------------------------------------------------------------
// Verbalization
// ---------------------------------------------------------------------------

/// Named templates for rendering a profile as a character prompt.
///
/// A template is a sequence of segments, one per line. A segment is rendered
/// only when every placeholder it references is non-empty; rendered segments
/// are joined with a single space. Placeholders: {name} {identities} {likes}
/// {dislikes} {viewpoints} {experiences} {achievements} {relationships}
/// {other} {linguistic_features} {personality} {free_text}.
class TemplateLibrary {
  public:
    /// Library holding the built-in "canonical" (English) and "canonical-zh" templates.
    static TemplateLibrary builtin();

    void add(std::string id, std::string text);
    void load_file(std::string id, const std::string& path);
    const std::string& get(std::string_view id) const;
    bool contains(std::string_view id) const;

  private:
    std::map<std::string, std::string, std::less<>> templates_;
};

PromptVariant verbalize_profile(const CharacterProfile& p, std::string_view template_id,
                                const TemplateLibrary& library = TemplateLibrary::builtin());

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

class TextTransformer {
  public:
    virtual ~TextTransformer() = default;
    virtual std::string name() const = 0;
    /// `style` is only meaningful for VariantKind::Stylized.
    virtual std::string transform(std::string_view text, VariantKind kind, std::string_view style) = 0;
};

/// Stores prompt variants keyed by profile. Writes are serialized per profile id.
class VariantStore {
  public:
    /// Assigns `<profile_id>#<kind>[-n]` as id and stores a copy.
    PromptVariant add(PromptVariant v);
    std::vector<PromptVariant> list(std::string_view profile_id) const;
    std::vector<PromptVariant> all() const;
    std::optional<PromptVariant> find(std::string_view variant_id) const;
    std::size_t size() const;

  private:
    struct Slot {
        std::mutex mutex;
        std::vector<PromptVariant> variants;
    };
    Slot& slot(const std::string& profile_id);
    const Slot* find_slot(std::string_view profile_id) const;

    mutable std::mutex index_mutex_;
    std::map<std::string, std::unique_ptr<Slot>, std::less<>> slots_;
};

PromptVariant augment_prompt(const PromptVariant& canonical, VariantKind kind, TextTransformer& transformer,
                             VariantStore& store, std::string_view style = {});

}  // namespace chardial
