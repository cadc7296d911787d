// Acceptance gate: one line per criterion, PASS / FAIL / SKIP.
//
//   chardial_acceptance                 run all, exit 1 if any fails
//   chardial_acceptance --criterion N   run one, exit 0 / 1, or 77 when skipped

#include "../fixtures/pairwise_tables.hpp"

#include "chardial/dialogue.hpp"
#include "chardial/eval.hpp"
#include "chardial/gateway.hpp"
#include "chardial/literary.hpp"
#include "chardial/profile.hpp"
#include "chardial/report.hpp"
#include "chardial/rng.hpp"
#include "chardial/script.hpp"
#include "chardial/sft.hpp"
#include "chardial/text.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace chardial;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status;
    std::string detail;
    std::vector<std::string> info;
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;  // 0: no runtime bound
    std::function<Outcome()> run;
};

std::string fmt(double v, int decimals) { return format_fixed(v, decimals); }

fs::path scratch_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("chardial-acceptance-" + std::to_string(::getpid()) + "-" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// 1. Fine-grained overall
// ---------------------------------------------------------------------------

Outcome fine_grained_overall() {
    Outcome o{Status::Pass, {}, {}};
    int matched = 0;
    std::vector<std::string> misses;
    for (const auto& row : fixtures::kErrorRows) {
        std::array<double, kErrorTagCount> p{};
        for (std::size_t i = 0; i < kErrorTagCount; ++i) p[i] = row.percent[i];
        const double got = round_to(overall_error_score(p), 1);
        if (got == row.overall) {
            ++matched;
        } else {
            misses.push_back(std::string(row.model) + " computed " + fmt(got, 1) + ", reported " + fmt(row.overall, 1));
        }
    }
    o.detail = std::to_string(matched) + "/" + std::to_string(fixtures::kErrorRows.size()) + " rows reproduce";
    if (!misses.empty()) {
        o.status = Status::Fail;
        for (const auto& m : misses) o.detail += "; " + m;
    }

    // The same formula on unrounded proportions from 400 tagged turns.
    std::vector<FineGrainedTag> tags;
    for (int t = 0; t < fixtures::kXingchenTurns; ++t) {
        FineGrainedTag tag;
        tag.model = "Xingchen";
        tag.session_id = "s" + std::to_string(t / 20);
        tag.turn_index = t % 20 + 1;
        for (std::size_t k = 0; k < kErrorTagCount; ++k) tag.flags[k] = t < fixtures::kXingchenCounts[k];
        tags.push_back(tag);
    }
    const auto rows = aggregate_finegrained(tags);
    bool cells_ok = true;
    for (std::size_t k = 0; k < kErrorTagCount; ++k)
        cells_ok = cells_ok && round_to(rows[0].proportions[k], 1) == fixtures::kErrorRows[5].percent[k];
    o.info.push_back("Xingchen from 400 tagged turns: cells " + std::string(cells_ok ? "match" : "differ") +
                     ", overall " + fmt(rows[0].overall, 2) + " -> " + fmt(round_to(rows[0].overall, 1), 1));
    return o;
}

// ---------------------------------------------------------------------------
// 2. Pairwise aggregation
// ---------------------------------------------------------------------------

PairwiseChoice make_choice(const std::string& focal, const std::string& opponent, CharacterCategory category,
                           SceneTopic topic, int turn, int outcome, std::size_t serial) {
    PairwiseChoice c;
    c.session_id = "s" + std::to_string(serial / 20);
    c.character_id = "c";
    c.category = category;
    c.topic = topic;
    c.turn_index = turn;
    c.user_text = "u";
    const bool focal_is_a = serial % 2 == 0;
    c.a = {focal_is_a ? focal : opponent, "a"};
    c.b = {focal_is_a ? opponent : focal, "b"};
    if (outcome == 0) {
        c.verdict = Verdict::Tie;
        c.rng_draw = static_cast<int>(serial % 3 == 0);
        c.continued_with = *c.rng_draw == 0 ? c.a.model : c.b.model;
    } else {
        const bool a_wins = (outcome > 0) == focal_is_a;
        c.verdict = a_wins ? Verdict::AWins : Verdict::BWins;
        c.continued_with = a_wins ? c.a.model : c.b.model;
    }
    return c;
}

void append_counts(std::vector<PairwiseChoice>& log, const std::string& focal, const std::string& opponent,
                   CharacterCategory category, SceneTopic topic, int turn, int win, int tie, int lose) {
    for (int i = 0; i < win; ++i) log.push_back(make_choice(focal, opponent, category, topic, turn, 1, log.size()));
    for (int i = 0; i < tie; ++i) log.push_back(make_choice(focal, opponent, category, topic, turn, 0, log.size()));
    for (int i = 0; i < lose; ++i) log.push_back(make_choice(focal, opponent, category, topic, turn, -1, log.size()));
}

struct TableCheck {
    int cells = 0;
    int cell_failures = 0;
    int rows = 0;
    int sum_failures = 0;
    std::vector<std::string> notes;

    void compare(const std::string& label, const std::vector<std::string>& row0, const std::vector<std::string>& row1,
                 const fixtures::Cell& cell, int advantage) {
        ++cells;
        const int w = std::stoi(row0[2]), t = std::stoi(row0[3]), l = std::stoi(row0[4]), a = std::stoi(row0[5]);
        if (w != cell.win || t != cell.tie || l != cell.lose || a != advantage) {
            ++cell_failures;
            notes.push_back(label + " got " + row0[2] + "/" + row0[3] + "/" + row0[4] + " " + row0[5]);
        }
        ++rows;
        const double sum = std::stod(row1[2]) + std::stod(row1[3]) + std::stod(row1[4]);
        if (std::fabs(sum - 100.0) > 0.1 + 1e-9) {
            ++sum_failures;
            notes.push_back(label + " one-decimal row sums to " + fmt(sum, 1));
        }
    }
};

Outcome pairwise_aggregation() {
    TableCheck check;
    const std::string focal = "CharacterGLM-66B";

    // 100-choice logs per category cell.
    for (std::size_t m = 0; m < fixtures::kOpponents.size(); ++m) {
        const std::string opp(fixtures::kOpponents[m]);
        std::vector<PairwiseChoice> log;
        for (std::size_t c = 0; c < 4; ++c) {
            const auto& cell = fixtures::kByCategory[m][c];
            append_counts(log, focal, opp, kAllCategories[c], SceneTopic::ChitChat, 1 + static_cast<int>(c), cell.win,
                          cell.tie, cell.lose);
        }
        const auto table = aggregate_pairwise(log, focal, {GroupKey::Category});
        const auto t0 = pairwise_table(table, 0), t1 = pairwise_table(table, 1);
        for (std::size_t c = 0; c < 4; ++c) {
            if (t0.rows[c][1] != "100") check.notes.push_back(opp + " category log is not 100 choices");
            check.compare(opp + "/" + std::string(fixtures::kCategoryNames[c]), t0.rows[c], t1.rows[c],
                          fixtures::kByCategory[m][c], fixtures::kByCategoryAdvantage[m][c]);
        }
    }

    // By topic with pooled Overall.
    const SceneTopic topics[3] = {SceneTopic::ChitChat, SceneTopic::Interview, SceneTopic::Love};
    for (std::size_t m = 0; m < fixtures::kOpponents.size(); ++m) {
        const std::string opp(fixtures::kOpponents[m]);
        std::vector<PairwiseChoice> log;
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& n = fixtures::kByTopicCounts[m][k];
            append_counts(log, focal, opp, CharacterCategory::Celebrities, topics[k], 7, n.win, n.tie, n.lose);
        }
        const auto table = aggregate_pairwise(log, focal, {GroupKey::Topic});
        const auto t0 = pairwise_table(table, 0), t1 = pairwise_table(table, 1);
        for (std::size_t k = 0; k < 4; ++k)
            check.compare(opp + "/" + t0.rows[k][0], t0.rows[k], t1.rows[k], fixtures::kByTopic[m][k],
                          fixtures::kByTopicAdvantage[m][k]);
    }

    // By turn interval and topic against one opponent.
    std::vector<PairwiseChoice> log;
    for (std::size_t iv = 0; iv < 4; ++iv)
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& n = fixtures::kByIntervalCounts[iv][k];
            append_counts(log, focal, "MiniMax", CharacterCategory::DailyLife, topics[k], fixtures::kIntervalTurns[iv],
                          n.win, n.tie, n.lose);
        }
    const auto cells = aggregate_pairwise(log, focal, {GroupKey::Interval, GroupKey::Topic});
    const auto c0 = pairwise_table(cells, 0), c1 = pairwise_table(cells, 1);
    const auto pooled = aggregate_pairwise(log, focal, {GroupKey::Interval});
    const auto p0 = pairwise_table(pooled, 0), p1 = pairwise_table(pooled, 1);
    for (std::size_t iv = 0; iv < 4; ++iv) {
        for (std::size_t k = 0; k < 3; ++k) {
            const auto r = iv * 3 + k;
            check.compare(c0.rows[r][0], c0.rows[r], c1.rows[r], fixtures::kByInterval[iv][k],
                          fixtures::kByIntervalAdvantage[iv][k]);
        }
        check.compare(p0.rows[iv][0] + "/Overall", p0.rows[iv], p1.rows[iv], fixtures::kByInterval[iv][3],
                      fixtures::kByIntervalAdvantage[iv][3]);
    }
    // The composite and pooled tables also emit a grand Overall row; it must sum too.
    for (const auto* t : {&c1, &p1}) {
        const auto& last = t->rows.back();
        ++check.rows;
        if (std::fabs(std::stod(last[2]) + std::stod(last[3]) + std::stod(last[4]) - 100.0) > 0.1 + 1e-9)
            ++check.sum_failures;
    }

    Outcome o{Status::Pass, {}, {}};
    o.detail = std::to_string(check.cells - check.cell_failures) + "/" + std::to_string(check.cells) +
               " cells reproduce; " + std::to_string(check.rows - check.sum_failures) + "/" +
               std::to_string(check.rows) + " one-decimal rows sum to 100 +- 0.1";
    if (check.cell_failures || check.sum_failures || !check.notes.empty()) {
        o.status = Status::Fail;
        for (const auto& n : check.notes) o.detail += "; " + n;
    }
    return o;
}

// ---------------------------------------------------------------------------
// 3. Turn bucketing
// ---------------------------------------------------------------------------

Outcome turn_bucketing() {
    const std::pair<int, TurnInterval> cases[] = {
        {1, TurnInterval::T1_5},    {5, TurnInterval::T1_5},     {6, TurnInterval::T6_10},
        {10, TurnInterval::T6_10},  {11, TurnInterval::T11_15},  {15, TurnInterval::T11_15},
        {16, TurnInterval::T16_20}, {20, TurnInterval::T16_20},  {21, TurnInterval::T20plus},
    };
    Outcome o{Status::Pass, {}, {}};
    int ok = 0;
    for (const auto& [turn, expected] : cases) {
        if (bucket_turn(turn) == expected) {
            ++ok;
        } else {
            o.status = Status::Fail;
            o.detail += "turn " + std::to_string(turn) + " -> " + std::string(to_string(bucket_turn(turn))) + "; ";
        }
    }
    bool rejects_zero = false;
    try {
        bucket_turn(0);
    } catch (const std::out_of_range&) {
        rejects_zero = true;
    }
    if (!rejects_zero) {
        o.status = Status::Fail;
        o.detail += "turn 0 accepted; ";
    }
    o.detail += std::to_string(ok) + "/" + std::to_string(std::size(cases)) + " boundaries map exactly";
    return o;
}

// ---------------------------------------------------------------------------
// 4. Tie rule
// ---------------------------------------------------------------------------

struct TieRun {
    std::vector<int> draws;
    std::size_t first_model = 0;
};

TieRun run_ties(std::uint64_t seed, int sessions, int turns) {
    ManualClock clock;
    Gateway gateway(clock);
    for (const char* name : {"model-x", "model-y"}) {
        ProviderConfig cfg;
        cfg.name = name;
        cfg.mock = MockBehavior{};
        gateway.add_provider(cfg, std::make_shared<MockChatBackend>(name, *cfg.mock));
    }
    TieRun run;
    const DeterministicRng root(seed);
    for (int s = 0; s < sessions; ++s) {
        PairwiseSessionConfig cfg;
        cfg.session_id = "tie-" + std::to_string(s);
        cfg.greeting = "hello";
        cfg.models = {"model-x", "model-y"};
        cfg.seed = root.derive(static_cast<std::uint64_t>(s)).seed();
        PairwiseState state(cfg);
        DeterministicRng rng(cfg.seed);
        for (int t = 0; t < turns; ++t) {
            const int turn = propose_turn(state, gateway, "turn " + std::to_string(t), rng).turn_index;
            const auto c = submit_choice(state, turn, Verdict::Tie, std::nullopt, rng);
            run.draws.push_back(*c.rng_draw);
            if (c.continued_with == "model-x") ++run.first_model;
        }
    }
    return run;
}

Outcome tie_rule() {
    constexpr int kSessions = 100, kTurns = 100;
    const auto a = run_ties(20240501, kSessions, kTurns);
    const auto b = run_ties(20240501, kSessions, kTurns);
    const double n = static_cast<double>(a.draws.size());
    std::size_t continued_a = 0;
    for (int d : a.draws) continued_a += d == 0;
    const double share_a = 100.0 * static_cast<double>(continued_a) / n;
    const double share_x = 100.0 * static_cast<double>(a.first_model) / n;
    Outcome o{Status::Pass, {}, {}};
    o.detail = std::to_string(a.draws.size()) + " tie draws: A continues " + fmt(share_a, 2) + "%, B " +
               fmt(100 - share_a, 2) + "%; first model " + fmt(share_x, 2) + "%; same seed " +
               (a.draws == b.draws ? "reproduces" : "DIFFERS");
    if (a.draws.size() != 10000 || std::fabs(share_a - 50) > 3 || std::fabs(share_x - 50) > 3 || a.draws != b.draws)
        o.status = Status::Fail;
    return o;
}

// ---------------------------------------------------------------------------
// 5. Consistency composite
// ---------------------------------------------------------------------------

std::vector<PointwiseRating> ratings_from_sums(const std::string& model, const std::array<int, 7>& sums, int overall,
                                               int n) {
    std::vector<PointwiseRating> out(static_cast<std::size_t>(n));
    const auto spread = [n](int sum, int i) { return sum / n + (i < sum % n ? 1 : 0); };
    for (int i = 0; i < n; ++i) {
        auto& r = out[static_cast<std::size_t>(i)];
        r.annotator = "ann-" + std::to_string(i % 10);
        r.model = model;
        r.character = "char-" + std::to_string(i % 2);
        r.session_id = "s-" + std::to_string(i);
        r.session_turns = 20 + i % 5;
        for (std::size_t d = 0; d < kRatingDimensionCount; ++d) r.scores[d] = spread(sums[d], i);
        r.overall = spread(overall, i);
    }
    return out;
}

Outcome consistency_composite_rule() {
    Outcome o{Status::Pass, {}, {}};
    int fixtures_checked = 0;
    const auto check = [&](const std::vector<PointwiseRating>& ratings) {
        for (const auto& row : aggregate_pointwise(ratings)) {
            ++fixtures_checked;
            const double attr = row.mean(RatingDimension::AttributeConsistency);
            const double behav = row.mean(RatingDimension::BehaviorConsistency);
            if (row.consistency() != (attr + behav) / 2.0) {
                o.status = Status::Fail;
                o.detail += row.model + " composite " + fmt(row.consistency(), 4) + "; ";
            }
        }
    };

    const auto fixture = ratings_from_sums("CharacterGLM-66B", fixtures::kPointwiseSums, fixtures::kPointwiseOverallSum,
                                           fixtures::kPointwiseRatings);
    check(fixture);
    const auto row = aggregate_pointwise(fixture).at(0);
    const double composite = round_to(row.consistency(), 2);
    if (composite != 4.18) {
        o.status = Status::Fail;
        o.detail += "fixture composite " + fmt(composite, 2) + " (expected 4.18); ";
    }

    DeterministicRng rng(7);
    for (int f = 0; f < 50; ++f) {
        std::vector<PointwiseRating> ratings;
        const int n = 1 + static_cast<int>(rng.uniform(40));
        for (int i = 0; i < n; ++i) {
            PointwiseRating r;
            r.annotator = "a";
            r.model = "m" + std::to_string(rng.uniform(3));
            r.session_id = "s" + std::to_string(i);
            r.session_turns = 20;
            for (auto& s : r.scores) s = 1 + static_cast<int>(rng.uniform(5));
            r.overall = 1 + static_cast<int>(rng.uniform(5));
            ratings.push_back(r);
        }
        check(ratings);
    }
    o.detail += std::to_string(fixtures_checked) + " model rows: composite equals the mean of attribute and behavior "
                "consistency; fixture composite " + fmt(composite, 2);
    return o;
}

// ---------------------------------------------------------------------------
// 6. Corpus statistics on the released subset
// ---------------------------------------------------------------------------

Outcome corpus_stats() {
    const char* path = std::getenv("CHARDIAL_RELEASED_CORPUS");
    if (!path || !*path) return {Status::Skip, "CHARDIAL_RELEASED_CORPUS not set; released subset absent", {}};
    if (!fs::is_regular_file(path)) return {Status::Skip, std::string("no corpus at ") + path, {}};
    StatsOptions opts;
    opts.require_valid = false;
    const auto s = compute_corpus_stats(load_corpus_file(path), opts);
    Outcome o{Status::Pass, {}, {}};
    const auto exact = [&](const char* name, std::size_t got, std::size_t want) {
        if (got != want) {
            o.status = Status::Fail;
            o.detail += std::string(name) + " " + std::to_string(got) + " != " + std::to_string(want) + "; ";
        }
    };
    const auto near = [&](const char* name, double got, double want) {
        if (std::fabs(got - want) > 0.02 * want) {
            o.status = Status::Fail;
            o.detail += std::string(name) + " " + fmt(got, 2) + " not within 2% of " + fmt(want, 2) + "; ";
        }
    };
    exact("dialogues", s.n_dialogues, 1034);
    exact("characters", s.n_characters, 250);
    exact("utterances", s.n_utterances_total, 32816);
    exact("character utterances", s.n_utterances_character, 16312);
    exact("user utterances", s.n_utterances_user, 16504);
    near("avg length", s.avg_utterance_length_total, 24.33);
    near("avg character length", s.avg_utterance_length_character, 24.50);
    near("avg user length", s.avg_utterance_length_user, 24.15);
    near("avg rounds", s.avg_rounds, 15.78);
    o.detail += "dialogues " + std::to_string(s.n_dialogues) + ", utterances " + std::to_string(s.n_utterances_total);
    return o;
}

// ---------------------------------------------------------------------------
// 7. SFT linear expansion
// ---------------------------------------------------------------------------

class SuffixTransformer final : public TextTransformer {
  public:
    std::string name() const override { return "suffix"; }
    std::string transform(std::string_view text, VariantKind kind, std::string_view style) override {
        return std::string(text.substr(0, text.size() / 2)) + " [" + std::string(to_string(kind)) + "]" +
               std::string(style);
    }
};

DialogueSession fixture_session(const std::string& id, const std::string& character, int rounds) {
    DialogueSession s;
    s.id = id;
    s.character_id = character;
    s.player_id = "player";
    for (int r = 0; r < rounds; ++r) {
        s = append_turn(std::move(s), {Speaker::Character, "character line " + std::to_string(r), {}, 0});
        s = append_turn(std::move(s), {Speaker::Player, "player line " + std::to_string(r), {}, 0});
    }
    return close_session(std::move(s));
}

Outcome sft_expansion() {
    Outcome o{Status::Pass, {}, {}};
    const auto dir = scratch_dir("sft");
    CharacterProfile p;
    p.id = "hero";
    p.category = CharacterCategory::GamesVideos;
    p.attributes.identities = {{"name", "Aria"}, {"occupation", "ranger"}};
    p.attributes.likes = {"archery"};
    p.behaviors.personality = {"calm"};
    SuffixTransformer transformer;
    const VariantKind extra[] = {VariantKind::Summarized, VariantKind::Paraphrased, VariantKind::Stylized};

    int corpora = 0;
    for (int n_sessions : {1, 2, 5, 9}) {
        for (int n_variants : {1, 2, 3, 4}) {
            VariantStore store;
            const auto canonical = store.add(verbalize_profile(p, "canonical"));
            for (int v = 1; v < n_variants; ++v)
                augment_prompt(canonical, extra[v - 1], transformer, store, v == 3 ? "pirate" : "");
            std::vector<TrainingRecord> records;
            for (int s = 0; s < n_sessions; ++s) {
                auto built = build_training_records(fixture_session("s" + std::to_string(s), "hero", 1 + s % 4),
                                                    store.list("hero"));
                records.insert(records.end(), built.begin(), built.end());
            }
            const auto m = export_corpus(records, (dir / "out.jsonl").string());
            const auto expected = static_cast<std::size_t>(n_sessions * n_variants);
            ++corpora;
            if (records.size() != expected || m.records_written != expected) {
                o.status = Status::Fail;
                o.detail += std::to_string(n_sessions) + "x" + std::to_string(n_variants) + " gave " +
                            std::to_string(records.size()) + "; ";
            }
        }
    }
    fs::remove_all(dir);
    o.detail += std::to_string(corpora) + " fixture corpora: records = sessions x variants (1 x 4 -> 4)";
    return o;
}

// ---------------------------------------------------------------------------
// 8. End-to-end determinism
// ---------------------------------------------------------------------------

std::vector<ProviderConfig> mock_configs() {
    std::vector<ProviderConfig> out;
    ProviderConfig x;
    x.name = "model-x";
    x.mock = MockBehavior{MockBehavior::Mode::Canned,
                          {"Of course.", "I remember that day well.", "Tell me more.", "(smiles) Really?", "Hm."}};
    ProviderConfig y;
    y.name = "model-y";
    y.mock = MockBehavior{MockBehavior::Mode::Canned, {"Sure thing!", "That sounds lovely, let's go together.",
                                                       "Why do you ask?", "Ha, you got me there."}};
    out.push_back(x);
    out.push_back(y);
    return out;
}

SessionScript determinism_script() {
    SessionScript s;
    s.session_id = "e2e";
    s.character_id = "aria";
    s.category = CharacterCategory::VirtualLove;
    s.topic = SceneTopic::Love;
    s.system_prompt = "You are Aria, a calm ranger.";
    s.greeting = "Welcome back, traveler.";
    s.models = {"model-x", "model-y"};
    s.seed = 99;
    const Verdict cycle[] = {Verdict::AWins, Verdict::Tie, Verdict::BWins, Verdict::Tie, Verdict::AWins};
    for (int t = 0; t < 20; ++t) {
        ScriptStep step;
        step.user_text = "message number " + std::to_string(t + 1);
        step.verdict = cycle[t % 5];
        if (t % 4 == 0) step.dimensions = DimVerdicts{DimVerdict::A, DimVerdict::Tie, DimVerdict::B};
        s.steps.push_back(step);
    }
    return s;
}

struct E2eOutput {
    std::string log;
    std::string report;
    std::string transcript;
};

E2eOutput run_e2e(const std::string& cassette_path, CassetteMode mode) {
    ManualClock clock;
    Gateway gateway(clock);
    populate_gateway(gateway, mock_configs(), nullptr, std::make_shared<Cassette>(mode, cassette_path));
    const auto run = run_session_script(determinism_script(), gateway);
    E2eOutput out;
    out.log = write_choice_log(run.choices);
    const auto focal = run.choices.at(0).a.model < run.choices.at(0).b.model ? run.choices[0].a.model
                                                                                 : run.choices[0].b.model;
    out.report = pairwise_table(aggregate_pairwise(run.choices, focal, {GroupKey::Interval}), 1).csv() +
                 advantage_series_table(run.choices, focal, std::nullopt, 1).csv();
    out.transcript = session_to_json_line(run.transcript);
    return out;
}

Outcome end_to_end_determinism() {
    const auto dir = scratch_dir("e2e");
    const auto cassette = (dir / "cassette.jsonl").string();
    const auto recorded = run_e2e(cassette, CassetteMode::Record);
    const auto first = run_e2e(cassette, CassetteMode::Replay);
    const auto second = run_e2e(cassette, CassetteMode::Replay);
    fs::remove_all(dir);
    Outcome o{Status::Pass, {}, {}};
    const bool log_same = first.log == second.log && first.log == recorded.log;
    const bool report_same = first.report == second.report && first.report == recorded.report;
    const bool transcript_same = first.transcript == second.transcript;
    std::size_t lines = 0;
    for (char c : first.log) lines += c == '\n';
    o.detail = "20-turn replay: choice log (" + std::to_string(lines) + " lines) " +
               (log_same ? "identical" : "DIFFERS") + ", report " + (report_same ? "identical" : "DIFFERS") +
               ", transcript " + (transcript_same ? "identical" : "DIFFERS");
    if (!log_same || !report_same || !transcript_same || lines != 20) o.status = Status::Fail;
    return o;
}

// ---------------------------------------------------------------------------
// 9. Literary ingest rules
// ---------------------------------------------------------------------------

Outcome literary_ingest() {
    std::ifstream in(std::string(CHARDIAL_FIXTURE_DIR) + "/literary_rules.txt", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto records = parse_literary(ss.str());

    struct Rule {
        std::string prefix;
        std::string label;
        IngestOptions options;
    };
    IngestOptions no_merge;
    no_merge.merge_statements = false;
    IngestOptions reject_cues;
    reject_cues.non_verbal = IngestOptions::NonVerbal::Reject;
    const Rule rules[] = {
        {"context", "no context", {}},
        {"parties", "multi-party", {}},
        {"profile", "missing profile", {}},
        {"statements", "multiple statements", no_merge},
        {"nonverbal", "non-verbal only", reject_cues},
    };

    Outcome o{Status::Pass, {}, {}};
    int satisfied = 0;
    for (const auto& rule : rules) {
        bool rejected = false, accepted = false;
        for (const auto& rec : records) {
            if (rec.source_title == rule.prefix + "/reject") {
                const auto r = ingest_literary(rec, rule.options);
                for (const auto& v : r.violations) rejected = rejected || (v.rule == rule.label && !r.accepted());
            }
            if (rec.source_title == rule.prefix + "/accept") accepted = ingest_literary(rec, rule.options).accepted();
        }
        if (rejected && accepted) {
            ++satisfied;
        } else {
            o.status = Status::Fail;
            o.detail += rule.prefix + (rejected ? "" : " not rejected") + (accepted ? "" : " not accepted") + "; ";
        }
    }

    // Merge idempotency over every record and over random same-speaker runs.
    bool idempotent = true;
    for (const auto& rec : records) {
        const auto r = ingest_literary(rec);
        if (r.session) idempotent = idempotent && merge_consecutive(r.session->turns) == r.session->turns;
    }
    DeterministicRng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Utterance> turns;
        const auto n = rng.uniform(12);
        for (std::uint64_t i = 0; i < n; ++i) {
            Utterance u;
            u.speaker = rng.coin() ? Speaker::Player : Speaker::Character;
            u.text = "t" + std::to_string(i);
            if (rng.uniform(4) == 0) u.stage_directions = "d" + std::to_string(i);
            turns.push_back(u);
        }
        const auto once = merge_consecutive(turns);
        idempotent = idempotent && merge_consecutive(once) == once;
    }
    if (!idempotent) {
        o.status = Status::Fail;
        o.detail += "merge is not idempotent; ";
    }
    o.detail += std::to_string(satisfied) + "/5 rules reject and accept their fixtures; merge idempotent";
    return o;
}

// ---------------------------------------------------------------------------
// 10. Session invariants
// ---------------------------------------------------------------------------

Outcome session_invariants() {
    DeterministicRng rng(2024);
    std::size_t sequences = 0, appends = 0, refused = 0;
    std::string failure;
    for (int seq = 0; seq < 1000 && failure.empty(); ++seq) {
        ++sequences;
        DialogueSession s;
        s.id = "p" + std::to_string(seq);
        s.character_id = "c";
        const auto attempts = rng.uniform(60);
        for (std::uint64_t i = 0; i < attempts; ++i) {
            Utterance u;
            u.speaker = rng.coin() ? Speaker::Character : Speaker::Player;
            const auto pick = rng.uniform(10);
            u.text = pick == 0 ? "" : pick == 1 ? "  " : "line " + std::to_string(i);
            try {
                if (rng.uniform(50) == 0) {
                    s = close_session(s);
                } else {
                    s = append_turn(s, u);
                    ++appends;
                }
            } catch (const ProtocolError&) {
                ++refused;
            }
            std::size_t c = 0, p = 0;
            for (const auto& t : s.turns) (t.speaker == Speaker::Character ? c : p) += 1;
            if (!validate_session(s).empty()) failure = "session invalid after append";
            if (!s.turns.empty() && s.turns.front().speaker != Speaker::Character) failure = "player spoke first";
            if (!(c == p || c == p + 1)) failure = "|C|-|P| outside {0,1}";
            if (!failure.empty()) break;
        }
    }
    Outcome o{Status::Pass, {}, {}};
    o.detail = std::to_string(sequences) + " random sequences, " + std::to_string(appends) + " appends, " +
               std::to_string(refused) + " refused; alternation, character-first and |C|-|P| in {0,1} hold";
    if (!failure.empty()) {
        o.status = Status::Fail;
        o.detail = failure + " in sequence " + std::to_string(sequences);
    }
    return o;
}

std::vector<Criterion> criteria() {
    return {
        {1, "fine-grained overall formula", 1.0, fine_grained_overall},
        {2, "pairwise aggregation", 1.0, pairwise_aggregation},
        {3, "turn bucketing", 0, turn_bucketing},
        {4, "tie rule", 0, tie_rule},
        {5, "consistency composite", 0, consistency_composite_rule},
        {6, "corpus statistics", 10.0, corpus_stats},
        {7, "SFT linear expansion", 0, sft_expansion},
        {8, "end-to-end determinism", 5.0, end_to_end_determinism},
        {9, "literary ingest rules", 0, literary_ingest},
        {10, "session invariants", 0, session_invariants},
    };
}

Status run_one(const Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = c.run();
    } catch (const std::exception& e) {
        o = {Status::Fail, std::string("threw: ") + e.what(), {}};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status == Status::Pass && c.budget_seconds > 0 && seconds > c.budget_seconds) {
        o.status = Status::Fail;
        o.detail += "; took " + fmt(seconds, 2) + "s, budget " + fmt(c.budget_seconds, 0) + "s";
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::cout << tag << " [" << c.id << "] " << c.name << " (" << fmt(seconds, 3) << "s): " << o.detail << "\n";
    for (const auto& line : o.info) std::cout << "     [" << c.id << "] info: " << line << "\n";
    return o.status;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else if (arg == "--list") {
            for (const auto& c : criteria()) std::cout << c.id << " " << c.name << "\n";
            return 0;
        } else {
            std::cerr << "usage: chardial_acceptance [--criterion N] [--list]\n";
            return 2;
        }
    }
    int failures = 0;
    bool ran = false;
    Status last = Status::Pass;
    for (const auto& c : criteria()) {
        if (only && c.id != only) continue;
        ran = true;
        last = run_one(c);
        failures += last == Status::Fail;
    }
    if (!ran) {
        std::cerr << "no criterion " << only << "\n";
        return 2;
    }
    if (only && last == Status::Skip) return 77;
    return failures ? 1 : 0;
}
