#include "doctest.h"

#include "chardial/profile.hpp"
#include "chardial/rng.hpp"
#include "helpers.hpp"

using namespace chardial;

namespace {

CharacterProfile aria() {
    CharacterProfile p;
    p.id = "aria";
    p.category = CharacterCategory::GamesVideos;
    p.attributes.identities = {{"name", "Aria"}, {"occupation", "ranger"}, {"age", "27"}};
    p.attributes.likes = {"archery", "rainy mornings"};
    p.attributes.dislikes = {"crowds"};
    p.attributes.social_relationships = {{"sister", "Lena"}};
    p.behaviors.personality = {"calm", "wry"};
    p.behaviors.linguistic_features = {"short sentences"};
    return p;
}

class UpperTransformer final : public TextTransformer {
  public:
    std::string name() const override { return "upper"; }
    std::string transform(std::string_view text, VariantKind, std::string_view style) override {
        std::string out(text);
        for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return out + std::string(style);
    }
};

class BlankTransformer final : public TextTransformer {
  public:
    std::string name() const override { return "blank"; }
    std::string transform(std::string_view, VariantKind, std::string_view) override { return "   "; }
};

CharacterProfile random_profile(DeterministicRng& rng, int i) {
    static const char* words[] = {"tea", "a=b", "back\\slash", "line\nbreak", "你好", "  padded", "#hash", "- dash", "[x]", "@end"};
    CharacterProfile p;
    p.id = "p" + std::to_string(i);
    p.category = kAllCategories[rng.uniform(4)];
    p.attributes.identities.push_back({"name", "N" + std::to_string(i)});
    const auto pick = [&] { return std::string(words[rng.uniform(10)]) + std::to_string(rng.uniform(100)); };
    for (std::uint64_t k = rng.uniform(3); k > 0; --k) p.attributes.identities.push_back({"k=" + pick(), pick()});
    for (std::uint64_t k = rng.uniform(4); k > 0; --k) p.attributes.likes.push_back(pick());
    for (std::uint64_t k = rng.uniform(3); k > 0; --k) p.attributes.experiences.push_back(pick());
    for (std::uint64_t k = rng.uniform(2); k > 0; --k) p.attributes.social_relationships.push_back({pick(), pick()});
    for (std::uint64_t k = rng.uniform(3); k > 0; --k) p.behaviors.personality.push_back(pick());
    if (rng.coin()) p.free_text = "line one\n\nline " + pick();
    return p;
}

}  // namespace

TEST_SUITE("profile") {
    TEST_CASE("category names") {
        for (auto c : kAllCategories) CHECK(parse_category(to_string(c)) == c);
        CHECK(display_name(CharacterCategory::VirtualLove) == "virtual love");
        CHECK_FALSE(parse_category("Sports").has_value());
    }

    TEST_CASE("validation") {
        CHECK(validate_profile(aria()).empty());
        CharacterProfile empty;
        empty.id = "x";
        const auto v = validate_profile(empty);
        REQUIRE(v.size() == 1);
        CHECK(v[0].rule == "profile empty");

        CharacterProfile text_only;
        text_only.id = "t";
        text_only.free_text = "Just a description.";
        CHECK(validate_profile(text_only).empty());

        auto no_id = aria();
        no_id.id = " ";
        CHECK(validate_profile(no_id).at(0).rule == "id empty");
    }

    TEST_CASE("document round trip") {
        const auto p = aria();
        const auto text = write_profile(p);
        CHECK(text.rfind("@profile aria\n", 0) == 0);
        CHECK(parse_profile(text) == p);
    }

    TEST_CASE("round trip property over random profiles") {
        DeterministicRng rng(17);
        std::vector<CharacterProfile> all;
        for (int i = 0; i < 200; ++i) {
            const auto p = random_profile(rng, i);
            REQUIRE(parse_profile(write_profile(p)) == p);
            all.push_back(p);
        }
        const auto imported = import_profiles(write_profiles(all));
        REQUIRE(imported.size() == all.size());
        for (std::size_t i = 0; i < all.size(); ++i) CHECK(imported[i].profile == all[i]);
    }

    TEST_CASE("import reports violations per record") {
        const std::string doc =
            "# comment\n"
            "@profile good\n"
            "category: DailyLife\n"
            "[likes]\n"
            "- tea\n"
            "@end\n"
            "\n"
            "@profile bad\n"
            "category: Sports\n"
            "[likes]\n"
            "- coffee\n"
            "@end\n"
            "@profile empty\n"
            "category: DailyLife\n"
            "@end\n";
        const auto r = import_profiles(doc);
        REQUIRE(r.size() == 3);
        CHECK(r[0].profile.has_value());
        CHECK(r[0].line == 2);
        CHECK_FALSE(r[1].profile.has_value());
        CHECK(r[1].violations.at(0).rule == "unknown category");
        CHECK(r[2].violations.at(0).rule == "profile empty");
        CHECK_THROWS_AS(parse_profile(doc), Error);
    }

    TEST_CASE("file loading") {
        test::TempDir dir;
        test::spit(dir.file("p.txt"), write_profiles({aria()}));
        CHECK(load_profiles_file(dir.file("p.txt")).at(0) == aria());
        CHECK_THROWS_AS(load_profiles_file(dir.file("missing.txt")), IoError);
    }

    TEST_CASE("canonical verbalization skips empty segments") {
        const auto v = verbalize_profile(aria(), "canonical");
        CHECK(v.kind == VariantKind::Canonical);
        CHECK(v.provenance == VariantProvenance::from_template("canonical"));
        CHECK(v.text ==
              "You are Aria. Identity: occupation: ranger; age: 27. You like archery; rainy mornings. "
              "You dislike crowds. Your relationships: Lena (sister). Way of speaking: short sentences. "
              "Personality: calm; wry.");
        CHECK(v.text.find("views") == std::string::npos);
    }

    TEST_CASE("chinese template") {
        CharacterProfile p;
        p.id = "lin";
        p.attributes.identities = {{"name", "林黛玉"}};
        p.attributes.likes = {"读书", "葬花"};
        const auto v = verbalize_profile(p, "canonical-zh");
        CHECK(v.text == "你是林黛玉。你喜欢读书、葬花。");
    }

    TEST_CASE("custom templates") {
        auto lib = TemplateLibrary::builtin();
        lib.add("short", "{name} ({personality})\nLikes: {likes}\n");
        CHECK(verbalize_profile(aria(), "short", lib).text == "Aria (calm; wry) Likes: archery; rainy mornings");
        CHECK_THROWS_AS(lib.add("bad", "{nickname}"), TemplateError);
        CHECK_THROWS_AS(verbalize_profile(aria(), "nope", lib), TemplateError);
        CharacterProfile bare;
        bare.id = "b";
        bare.attributes.likes = {"x"};
        lib.add("name-only", "{name}\n");
        CHECK_THROWS_AS(verbalize_profile(bare, "name-only", lib), TemplateError);
    }

    TEST_CASE("invalid profile cannot be verbalized") {
        CharacterProfile empty;
        empty.id = "e";
        CHECK_THROWS_AS(verbalize_profile(empty, "canonical"), ValidationError);
    }

    TEST_CASE("variant store ids and augmentation") {
        VariantStore store;
        UpperTransformer upper;
        const auto canonical = store.add(verbalize_profile(aria(), "canonical"));
        CHECK(canonical.id == "aria#canonical");
        const auto s1 = augment_prompt(canonical, VariantKind::Summarized, upper, store);
        const auto s2 = augment_prompt(canonical, VariantKind::Summarized, upper, store);
        const auto st = augment_prompt(canonical, VariantKind::Stylized, upper, store, " (pirate)");
        CHECK(s1.id == "aria#summarized");
        CHECK(s2.id == "aria#summarized-2");
        CHECK(st.style == std::optional<std::string>(" (pirate)"));
        CHECK(s1.provenance == VariantProvenance::from_transformer("upper"));
        CHECK(store.list("aria").size() == 4);
        CHECK(store.size() == 4);
        CHECK(store.find("aria#summarized-2")->text == s2.text);
        CHECK_FALSE(store.find("aria#paraphrased").has_value());
        CHECK(store.list("nobody").empty());

        CHECK_THROWS_AS(augment_prompt(canonical, VariantKind::Canonical, upper, store), ValidationError);
        CHECK_THROWS_AS(augment_prompt(s1, VariantKind::Paraphrased, upper, store), ValidationError);
        BlankTransformer blank;
        CHECK_THROWS_AS(augment_prompt(canonical, VariantKind::Paraphrased, blank, store), TransformerError);
        CHECK(store.size() == 4);
    }

    TEST_CASE("variant validation") {
        PromptVariant v;
        v.profile_id = "x";
        v.text = "text";
        CHECK(validate_variant(v).empty());
        v.provenance = VariantProvenance::from_transformer("t");
        CHECK_FALSE(validate_variant(v).empty());
        v.kind = VariantKind::Paraphrased;
        CHECK(validate_variant(v).empty());
        v.text = " ";
        CHECK_FALSE(validate_variant(v).empty());
    }
}
