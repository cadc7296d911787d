#include "doctest.h"

#include "chardial/literary.hpp"
#include "helpers.hpp"

using namespace chardial;

namespace {

std::vector<LiteraryIngestRecord> rules_fixture() { return parse_literary(test::slurp(test::fixture("literary_rules.txt"))); }

const LiteraryIngestRecord& record(const std::vector<LiteraryIngestRecord>& all, const std::string& title) {
    for (const auto& r : all)
        if (r.source_title == title) return r;
    throw std::runtime_error("no record " + title);
}

bool has_rule(const std::vector<Violation>& vs, const std::string& rule) {
    for (const auto& v : vs)
        if (v.rule == rule) return true;
    return false;
}

}  // namespace

TEST_SUITE("literary") {
    TEST_CASE("parsing the fixture") {
        const auto all = rules_fixture();
        CHECK(all.size() == 10);
        const auto& r = record(all, "context/accept");
        CHECK(r.context == "宝玉从外头回来，径直去了潇湘馆。");
        REQUIRE(r.profiles.size() == 2);
        CHECK(r.profiles[0].name == "林黛玉");
        REQUIRE(r.transcript.size() == 2);
        CHECK(r.transcript[1].speaker == "贾宝玉");
        CHECK(r.transcript[1].text == "来看看妹妹。");
    }

    TEST_CASE("write and parse round trip") {
        for (const auto& r : rules_fixture()) CHECK(parse_literary(write_literary(r)).at(0) == r);
    }

    TEST_CASE("malformed documents") {
        CHECK_THROWS_AS(parse_literary("[context]\nno header"), ParseError);
        CHECK_THROWS_AS(parse_literary("=== t\n[scene]\nx"), ParseError);
        try {
            parse_literary("=== t\n[context]\nc\n[transcript]\nA: hi\nno speaker here\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 6);
        }
        CHECK(parse_literary("").empty());
    }

    TEST_CASE("each rule rejects its fixture and accepts the fixed one") {
        const auto all = rules_fixture();
        IngestOptions no_merge;
        no_merge.merge_statements = false;
        IngestOptions reject_cues;
        reject_cues.non_verbal = IngestOptions::NonVerbal::Reject;

        CHECK(has_rule(ingest_literary(record(all, "context/reject")).violations, "no context"));
        CHECK(ingest_literary(record(all, "context/accept")).accepted());
        CHECK(has_rule(ingest_literary(record(all, "parties/reject")).violations, "multi-party"));
        CHECK(ingest_literary(record(all, "parties/accept")).accepted());
        CHECK(has_rule(ingest_literary(record(all, "profile/reject")).violations, "missing profile"));
        CHECK(ingest_literary(record(all, "profile/accept")).accepted());
        CHECK(has_rule(ingest_literary(record(all, "statements/reject"), no_merge).violations, "multiple statements"));
        CHECK(ingest_literary(record(all, "statements/accept"), no_merge).accepted());
        CHECK(has_rule(ingest_literary(record(all, "nonverbal/reject"), reject_cues).violations, "non-verbal only"));
        CHECK(ingest_literary(record(all, "nonverbal/accept"), reject_cues).accepted());
    }

    TEST_CASE("merging repairs repeated statements") {
        const auto all = rules_fixture();
        const auto merged = ingest_literary(record(all, "statements/reject"));
        REQUIRE(merged.accepted());
        CHECK(merged.session->turns.size() == 2);
        CHECK(merged.session->turns[0].text == "下山之后，切记谨言慎行。 遇事不可逞强。");
    }

    TEST_CASE("non-verbal lines are flagged by default") {
        const auto r = ingest_literary(record(rules_fixture(), "nonverbal/reject"));
        REQUIRE(r.accepted());
        CHECK(has_rule(r.flags, "non-verbal only"));
        CHECK(r.session->turns[1].text == "(shrugs and looks away)");
    }

    TEST_CASE("accepted session shape") {
        const auto r = ingest_literary(record(rules_fixture(), "nonverbal/accept"), {}, "lit-1");
        REQUIRE(r.accepted());
        const auto& s = *r.session;
        CHECK(s.id == "lit-1");
        CHECK(s.character_id == "Sam");
        CHECK(s.player_id == "Alex");
        CHECK(s.provenance == Provenance::Literary);
        CHECK(s.status == SessionStatus::Closed);
        CHECK(s.turns[1].stage_directions == std::optional<std::string>("shrugs"));
        CHECK(s.turns[1].text == "I guess I did.");
        CHECK(r.character->summary == "Tired nurse, sarcastic.");
        const auto auto_id = ingest_literary(record(rules_fixture(), "nonverbal/accept"));
        CHECK(auto_id.session->id.rfind("lit-", 0) == 0);
        CHECK(auto_id.session->id == ingest_literary(record(rules_fixture(), "nonverbal/accept")).session->id);
    }

    TEST_CASE("single party") {
        LiteraryIngestRecord r;
        r.context = "x";
        r.profiles = {{"A", "a"}, {"B", "b"}};
        r.transcript = {{"A", "hello"}, {"A", "anyone?"}};
        CHECK(has_rule(ingest_literary(r).violations, "single-party"));
    }

    TEST_CASE("stage direction splitting") {
        CHECK(split_stage_directions("（急忙解释）别这样").first == std::optional<std::string>("急忙解释"));
        CHECK(split_stage_directions("（急忙解释）别这样").second == "别这样");
        CHECK(split_stage_directions("[sighs] fine").first == std::optional<std::string>("sighs"));
        CHECK_FALSE(split_stage_directions("no cue (here)").first.has_value());
        CHECK_FALSE(split_stage_directions("(unclosed").first.has_value());
        CHECK(is_non_verbal_only("(nods)"));
        CHECK(is_non_verbal_only("*waves* ..."));
        CHECK(is_non_verbal_only("【沉默】……"));
        CHECK_FALSE(is_non_verbal_only("(nods) yes"));
        CHECK_FALSE(is_non_verbal_only("()"));
        CHECK_FALSE(is_non_verbal_only(""));
    }
}
