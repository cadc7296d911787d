#include "chardial/dialogue.hpp"
#include "chardial/eval.hpp"
#include "chardial/report.hpp"
#include "chardial/rng.hpp"

#include <benchmark/benchmark.h>

using namespace chardial;

namespace {

std::vector<PairwiseChoice> make_choices(std::size_t n) {
    DeterministicRng rng(1);
    std::vector<PairwiseChoice> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PairwiseChoice c;
        c.session_id = "s" + std::to_string(i / 20);
        c.character_id = "c";
        c.category = kAllCategories[rng.uniform(std::size(kAllCategories))];
        c.topic = kAllTopics[rng.uniform(std::size(kAllTopics))];
        c.turn_index = 1 + static_cast<int>(i % 30);
        c.user_text = "u";
        const bool swap = rng.coin();
        c.a = {swap ? "focal" : "other", std::string(10 + rng.uniform(80), 'a')};
        c.b = {swap ? "other" : "focal", std::string(10 + rng.uniform(80), 'b')};
        switch (rng.uniform(3)) {
            case 0: c.verdict = Verdict::AWins; c.continued_with = c.a.model; break;
            case 1: c.verdict = Verdict::BWins; c.continued_with = c.b.model; break;
            default: c.verdict = Verdict::Tie; c.rng_draw = 0; c.continued_with = c.a.model;
        }
        out.push_back(std::move(c));
    }
    return out;
}

void BM_AggregatePairwise(benchmark::State& state) {
    const auto choices = make_choices(static_cast<std::size_t>(state.range(0)));
    const std::vector<GroupKey> keys{GroupKey::Category, GroupKey::Topic};
    for (auto _ : state) benchmark::DoNotOptimize(aggregate_pairwise(choices, "focal", keys));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AggregatePairwise)->Range(256, 65536);

void BM_LengthAnalysis(benchmark::State& state) {
    const auto choices = make_choices(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(length_analysis(choices, "focal"));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LengthAnalysis)->Range(256, 16384);

void BM_FineGrained(benchmark::State& state) {
    DeterministicRng rng(2);
    std::vector<FineGrainedTag> tags;
    for (int i = 0; i < state.range(0); ++i) {
        FineGrainedTag t;
        t.model = "m" + std::to_string(i % 4);
        t.session_id = "s" + std::to_string(i / 20);
        t.turn_index = 1 + i % 20;
        for (auto& f : t.flags) f = rng.uniform(5) == 0;
        tags.push_back(std::move(t));
    }
    for (auto _ : state) benchmark::DoNotOptimize(aggregate_finegrained(tags));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FineGrained)->Range(256, 65536);

void BM_CorpusStats(benchmark::State& state) {
    Corpus corpus;
    for (int i = 0; i < state.range(0); ++i) {
        DialogueSession s;
        s.id = "d" + std::to_string(i);
        s.character_id = "c" + std::to_string(i % 50);
        s.player_id = "p";
        for (int t = 0; t < 20; ++t)
            s.turns.push_back({t % 2 ? Speaker::Player : Speaker::Character, "你好，今天过得怎么样？(smiles)", {}, 0});
        s.status = SessionStatus::Closed;
        corpus.sessions.push_back(std::move(s));
    }
    for (int c = 0; c < 50; ++c) corpus.profile_texts["c" + std::to_string(c)] = std::string(200, 'x');
    for (auto _ : state) benchmark::DoNotOptimize(compute_corpus_stats(corpus));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CorpusStats)->Range(64, 4096);

void BM_CsvRoundTrip(benchmark::State& state) {
    const auto table =
        pairwise_table(aggregate_pairwise(make_choices(4096), "focal", {GroupKey::Category, GroupKey::Interval}), 1);
    for (auto _ : state) benchmark::DoNotOptimize(parse_csv(table.csv()));
}
BENCHMARK(BM_CsvRoundTrip);

}  // namespace
BENCHMARK_MAIN();
