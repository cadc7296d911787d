#include "chardial/eval.hpp"

#include "chardial/text.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <tuple>

namespace chardial {

namespace {

template <typename E, std::size_t N>
std::string_view name_in(const std::array<std::string_view, N>& names, E value) noexcept {
    const auto i = static_cast<std::size_t>(value);
    return i < N ? names[i] : std::string_view("unknown");
}

template <typename E, std::size_t N>
std::optional<E> parse_in(const std::array<std::string_view, N>& names, std::string_view s) noexcept {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s) return static_cast<E>(i);
    return std::nullopt;
}

constexpr std::array<std::string_view, kRatingDimensionCount> kRatingNames{
    "attribute_consistency", "behavior_consistency", "human_likeness", "engagement",
    "quality",               "safety",               "correctness"};
constexpr std::array<std::string_view, kErrorTagCount> kTagNames{"OOC",         "Contradiction", "Repetition",
                                                                 "LessQuality", "LessInfo",      "Proactivity"};
constexpr std::array<std::string_view, 3> kVerdictNames{"AWins", "BWins", "Tie"};
constexpr std::array<std::string_view, 3> kDimVerdictNames{"A", "B", "Tie"};
constexpr std::array<std::string_view, kPairwiseDimensionCount> kPairwiseDimNames{"Consistency", "HumanLikeness",
                                                                                  "Engagement"};
constexpr std::array<std::string_view, 5> kIntervalNames{"T1_5", "T6_10", "T11_15", "T16_20", "T20plus"};
constexpr std::array<std::string_view, 4> kGroupKeyNames{"category", "topic", "interval", "overall"};

double percent(std::size_t part, std::size_t whole) noexcept {
    return whole ? 100.0 * static_cast<double>(part) / static_cast<double>(whole) : 0.0;
}

}  // namespace

std::string_view to_string(RatingDimension d) noexcept { return name_in(kRatingNames, d); }
std::optional<RatingDimension> parse_rating_dimension(std::string_view s) noexcept {
    return parse_in<RatingDimension>(kRatingNames, s);
}
std::string_view to_string(ErrorTag t) noexcept { return name_in(kTagNames, t); }
std::optional<ErrorTag> parse_error_tag(std::string_view s) noexcept { return parse_in<ErrorTag>(kTagNames, s); }
std::string_view to_string(Verdict v) noexcept { return name_in(kVerdictNames, v); }
std::string_view to_string(DimVerdict v) noexcept { return name_in(kDimVerdictNames, v); }
std::string_view to_string(PairwiseDimension d) noexcept { return name_in(kPairwiseDimNames, d); }
std::optional<Verdict> parse_verdict(std::string_view s) noexcept { return parse_in<Verdict>(kVerdictNames, s); }
std::optional<DimVerdict> parse_dim_verdict(std::string_view s) noexcept {
    return parse_in<DimVerdict>(kDimVerdictNames, s);
}
std::optional<PairwiseDimension> parse_pairwise_dimension(std::string_view s) noexcept {
    return parse_in<PairwiseDimension>(kPairwiseDimNames, s);
}
std::string_view to_string(TurnInterval t) noexcept { return name_in(kIntervalNames, t); }
std::optional<TurnInterval> parse_interval(std::string_view s) noexcept {
    return parse_in<TurnInterval>(kIntervalNames, s);
}
std::string_view to_string(GroupKey k) noexcept { return name_in(kGroupKeyNames, k); }
std::optional<GroupKey> parse_group_key(std::string_view s) noexcept { return parse_in<GroupKey>(kGroupKeyNames, s); }

// ---------------------------------------------------------------------------
// Pointwise
// ---------------------------------------------------------------------------

std::vector<Violation> validate_rating(const PointwiseRating& r, bool enforce_min_turns) {
    std::vector<Violation> out;
    if (trim(r.model).empty()) out.push_back({"model", "model empty"});
    for (std::size_t i = 0; i < kRatingDimensionCount; ++i) {
        if (r.scores[i] < kMinScore || r.scores[i] > kMaxScore)
            out.push_back({std::string(kRatingNames[i]), "score outside 1-5"});
    }
    if (r.overall < kMinScore || r.overall > kMaxScore) out.push_back({"overall", "score outside 1-5"});
    if (enforce_min_turns && r.session_turns < kMinRatedTurns)
        out.push_back({"session_turns", "session shorter than " + std::to_string(kMinRatedTurns) + " turns"});
    return out;
}

double consistency_composite(double attribute, double behavior) noexcept { return (attribute + behavior) / 2.0; }

std::vector<PointwiseRow> aggregate_pointwise(const std::vector<PointwiseRating>& ratings, bool enforce_min_turns) {
    struct Sum {
        std::size_t n = 0;
        long overall = 0;
        std::array<long, kRatingDimensionCount> scores{};
    };
    std::map<std::string, Sum> sums;
    for (std::size_t i = 0; i < ratings.size(); ++i) {
        const auto& r = ratings[i];
        if (auto v = validate_rating(r, enforce_min_turns); !v.empty())
            throw ValidationError("rating " + std::to_string(i) + " is invalid", std::move(v));
        auto& s = sums[r.model];
        ++s.n;
        s.overall += r.overall;
        for (std::size_t d = 0; d < kRatingDimensionCount; ++d) s.scores[d] += r.scores[d];
    }
    std::vector<PointwiseRow> rows;
    for (const auto& [model, s] : sums) {
        PointwiseRow row;
        row.model = model;
        row.n = s.n;
        const auto n = static_cast<double>(s.n);
        row.overall = static_cast<double>(s.overall) / n;
        for (std::size_t d = 0; d < kRatingDimensionCount; ++d) row.means[d] = static_cast<double>(s.scores[d]) / n;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Fine-grained
// ---------------------------------------------------------------------------

double overall_error_score(const std::array<double, kErrorTagCount>& p) noexcept {
    return p[0] + p[1] + p[2] + p[3] + p[4] - p[5];
}

std::vector<FineGrainedRow> aggregate_finegrained(const std::vector<FineGrainedTag>& tags) {
    std::set<std::tuple<std::string, std::string, int>> seen;
    std::map<std::string, FineGrainedRow> rows;
    for (const auto& t : tags) {
        if (!seen.emplace(t.model, t.session_id, t.turn_index).second)
            throw ConflictError("duplicate tag for model '" + t.model + "', session '" + t.session_id + "', turn " +
                                std::to_string(t.turn_index));
        auto& row = rows[t.model];
        row.model = t.model;
        ++row.total_turns;
        for (std::size_t i = 0; i < kErrorTagCount; ++i)
            if (t.flags[i]) ++row.counts[i];
    }
    std::vector<FineGrainedRow> out;
    for (auto& [_, row] : rows) {
        for (std::size_t i = 0; i < kErrorTagCount; ++i) row.proportions[i] = percent(row.counts[i], row.total_turns);
        row.overall = overall_error_score(row.proportions);
        out.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pairwise
// ---------------------------------------------------------------------------

std::vector<Violation> validate_choice(const PairwiseChoice& c) {
    std::vector<Violation> out;
    if (trim(c.a.model).empty() || trim(c.b.model).empty()) out.push_back({"model", "model id empty"});
    if (c.a.model == c.b.model) out.push_back({"model", "both candidates come from the same model"});
    if (c.turn_index < 1) out.push_back({"turn_index", "turn index must be at least 1"});
    switch (c.verdict) {
        case Verdict::AWins:
        case Verdict::BWins: {
            const auto& winner = c.verdict == Verdict::AWins ? c.a.model : c.b.model;
            if (c.continued_with != winner) out.push_back({"continued_with", "must be the winner"});
            if (c.rng_draw) out.push_back({"rng_draw", "draw recorded without a tie"});
            break;
        }
        case Verdict::Tie:
            if (!c.rng_draw || (*c.rng_draw != 0 && *c.rng_draw != 1)) {
                out.push_back({"rng_draw", "tie without a recorded draw"});
            } else if (c.continued_with != (*c.rng_draw == 0 ? c.a.model : c.b.model)) {
                out.push_back({"continued_with", "does not match the recorded draw"});
            }
            break;
    }
    return out;
}

TurnInterval bucket_turn(int turn_index) {
    if (turn_index < 1) throw std::out_of_range("turn index must be at least 1");
    if (turn_index <= 5) return TurnInterval::T1_5;
    if (turn_index <= 10) return TurnInterval::T6_10;
    if (turn_index <= 15) return TurnInterval::T11_15;
    if (turn_index <= 20) return TurnInterval::T16_20;
    return TurnInterval::T20plus;
}

double WinTieLose::win_pct() const noexcept { return percent(win, total()); }
double WinTieLose::tie_pct() const noexcept { return percent(tie, total()); }
double WinTieLose::lose_pct() const noexcept { return percent(lose, total()); }

WinTieLose& WinTieLose::operator+=(const WinTieLose& o) noexcept {
    win += o.win;
    tie += o.tie;
    lose += o.lose;
    return *this;
}

const PairwiseRow* PairwiseTable::find(std::string_view group) const {
    for (const auto& r : rows)
        if (r.group == group) return &r;
    return nullptr;
}

namespace {

enum class Side { A, B };

Side focal_side(const PairwiseChoice& c, std::string_view focal) {
    if (c.a.model == focal) return Side::A;
    if (c.b.model == focal) return Side::B;
    throw ValidationError(Violation{"session " + c.session_id + " turn " + std::to_string(c.turn_index),
                                    "choice does not involve model '" + std::string(focal) + "'"});
}

/// Outcome for one side: +1 win, 0 tie, -1 loss. nullopt when the dimension is missing.
std::optional<int> outcome_for(const PairwiseChoice& c, Side side, std::optional<PairwiseDimension> dim) {
    std::optional<Side> winner;
    if (dim) {
        if (!c.dimensions) return std::nullopt;
        const auto v = (*c.dimensions)[static_cast<std::size_t>(*dim)];
        if (v == DimVerdict::A) winner = Side::A;
        if (v == DimVerdict::B) winner = Side::B;
    } else {
        if (c.verdict == Verdict::AWins) winner = Side::A;
        if (c.verdict == Verdict::BWins) winner = Side::B;
    }
    if (!winner) return 0;
    return *winner == side ? 1 : -1;
}

void tally(WinTieLose& w, int outcome) {
    if (outcome > 0) ++w.win;
    if (outcome == 0) ++w.tie;
    if (outcome < 0) ++w.lose;
}

}  // namespace

PairwiseTable aggregate_pairwise(const std::vector<PairwiseChoice>& choices, std::string_view focal_model,
                                 const std::vector<GroupKey>& keys, std::optional<PairwiseDimension> dimension) {
    PairwiseTable t;
    t.focal = std::string(focal_model);
    t.dimension = dimension;
    for (auto k : keys)
        if (k != GroupKey::Overall) t.keys.push_back(k);

    std::map<std::vector<int>, PairwiseRow> groups;
    std::set<std::string> opponents;
    for (const auto& c : choices) {
        const Side side = focal_side(c, focal_model);
        opponents.insert(side == Side::A ? c.b.model : c.a.model);
        const auto outcome = outcome_for(c, side, dimension);
        if (!outcome) continue;

        std::vector<int> id;
        std::vector<std::string> labels;
        for (auto k : t.keys) {
            switch (k) {
                case GroupKey::Category:
                    id.push_back(static_cast<int>(c.category));
                    labels.emplace_back(to_string(c.category));
                    break;
                case GroupKey::Topic:
                    id.push_back(static_cast<int>(c.topic));
                    labels.emplace_back(to_string(c.topic));
                    break;
                case GroupKey::Interval: {
                    const auto iv = bucket_turn(c.turn_index);
                    id.push_back(static_cast<int>(iv));
                    labels.emplace_back(to_string(iv));
                    break;
                }
                case GroupKey::Overall: break;
            }
        }
        auto& row = groups[id];
        if (row.group.empty()) {
            std::string label;
            for (const auto& l : labels) label += (label.empty() ? "" : "/") + l;
            row.group = label.empty() ? "Overall" : label;
        }
        tally(row.counts, *outcome);
    }
    if (opponents.size() == 1) t.opponent = *opponents.begin();
    for (auto& [_, row] : groups) t.rows.push_back(std::move(row));
    return t;
}

std::vector<std::pair<TurnInterval, double>> advantage_series(const std::vector<PairwiseChoice>& choices,
                                                              std::string_view focal_model,
                                                              std::optional<PairwiseDimension> dimension) {
    const auto table = aggregate_pairwise(choices, focal_model, {GroupKey::Interval}, dimension);
    std::vector<std::pair<TurnInterval, double>> out;
    for (const auto& row : table.rows) out.emplace_back(*parse_interval(row.group), row.counts.advantage());
    return out;
}

RoundedRow round_row(const WinTieLose& wtl, int decimals) noexcept {
    return {round_to(wtl.win_pct(), decimals), round_to(wtl.tie_pct(), decimals), round_to(wtl.lose_pct(), decimals),
            round_to(wtl.advantage(), decimals)};
}

// ---------------------------------------------------------------------------
// Lengths
// ---------------------------------------------------------------------------

std::size_t response_length(std::string_view text, const LengthOptions& options) {
    if (options.count_stage_directions) return scalar_length(text);
    std::size_t n = 0;
    int depth = 0;
    for (std::size_t pos = 0; pos < text.size();) {
        const char32_t c = decode_scalar(text, pos);
        if (c == U'(' || c == U'（') {
            ++depth;
            continue;
        }
        if ((c == U')' || c == U'）') && depth > 0) {
            --depth;
            continue;
        }
        if (depth == 0) ++n;
    }
    return n;
}

double LengthGroup::share(std::size_t i) const noexcept { return percent(longer[i], longer[0] + longer[1]); }

LengthReport length_analysis(const std::vector<PairwiseChoice>& choices, std::string_view focal_model,
                             const LengthOptions& options) {
    LengthReport report;
    report.models[0] = std::string(focal_model);
    std::map<int, LengthGroup> topics;
    LengthGroup overall;
    overall.group = "Overall";

    for (const auto& c : choices) {
        const Side side = focal_side(c, focal_model);
        const auto& opponent = side == Side::A ? c.b.model : c.a.model;
        if (report.models[1].empty()) {
            report.models[1] = opponent;
        } else if (report.models[1] != opponent) {
            throw ValidationError(Violation{"opponent", "length analysis needs a single opponent, found '" +
                                                            report.models[1] + "' and '" + opponent + "'"});
        }
        const auto& focal_text = side == Side::A ? c.a.text : c.b.text;
        const auto& other_text = side == Side::A ? c.b.text : c.a.text;
        const auto lf = response_length(focal_text, options);
        const auto lo = response_length(other_text, options);

        auto& g = topics[static_cast<int>(c.topic)];
        g.group = std::string(to_string(c.topic));
        for (LengthGroup* grp : {&g, &overall}) {
            ++grp->turns;
            if (lf == lo) {
                ++grp->equal;
                continue;
            }
            const std::size_t idx = lf > lo ? 0 : 1;
            const Side longer_side = idx == 0 ? side : (side == Side::A ? Side::B : Side::A);
            ++grp->longer[idx];
            tally(grp->when_longer[idx], *outcome_for(c, longer_side, std::nullopt));
        }
    }
    for (auto& [_, g] : topics) report.groups.push_back(std::move(g));
    report.groups.push_back(std::move(overall));
    return report;
}

// ---------------------------------------------------------------------------
// Pairwise session
// ---------------------------------------------------------------------------

PairwiseState::PairwiseState(PairwiseSessionConfig cfg) : config(std::move(cfg)) {
    std::vector<Violation> v;
    if (trim(config.models[0]).empty() || trim(config.models[1]).empty()) v.push_back({"models", "model id empty"});
    if (config.models[0] == config.models[1]) v.push_back({"models", "the two models must differ"});
    if (trim(config.greeting).empty()) v.push_back({"greeting", "a session opens with the character's greeting"});
    if (!v.empty()) throw ValidationError("invalid pairwise session", std::move(v));
    history.push_back({Speaker::Character, config.greeting});
}

namespace {

void check_turn_free(const PairwiseState& state, int turn_index) {
    for (const auto& c : state.choices)
        if (c.turn_index == turn_index)
            throw ConflictError("turn " + std::to_string(turn_index) + " of session '" + state.config.session_id +
                                "' already has a choice");
}

void apply_choice(PairwiseState& state, PairwiseChoice choice) {
    if (auto v = validate_choice(choice); !v.empty()) throw ValidationError("invalid choice", std::move(v));
    const auto& text = choice.continued_with == choice.a.model ? choice.a.text : choice.b.text;
    state.history.push_back({Speaker::Player, choice.user_text});
    state.history.push_back({Speaker::Character, text});
    state.choices.push_back(std::move(choice));
    state.pending.reset();
    ++state.next_turn;
}

}  // namespace

const PendingTurn& propose_turn(PairwiseState& state, Gateway& gateway, std::string user_text,
                                DeterministicRng& rng) {
    if (state.pending) throw StateError("turn " + std::to_string(state.pending->turn_index) + " awaits a choice");
    if (trim(user_text).empty()) throw ProtocolError(ProtocolError::Kind::InvalidUtterance, "user text is empty");

    ChatRequest req;
    req.system_prompt = state.config.system_prompt;
    req.history = state.history;
    req.history.push_back({Speaker::Player, user_text});
    req.params = state.config.params;

    auto first = std::async(std::launch::async, [&] { return gateway.generate_reply(state.config.models[0], req); });
    ChatResponse second;
    std::exception_ptr second_error;
    try {
        second = gateway.generate_reply(state.config.models[1], req);
    } catch (...) {
        second_error = std::current_exception();
    }
    ChatResponse r0 = first.get();  // rethrows the first model's failure
    if (second_error) std::rethrow_exception(second_error);

    PendingTurn p;
    p.turn_index = state.next_turn;
    p.user_text = std::move(user_text);
    p.position_draw = rng.coin();
    Candidate c0{state.config.models[0], std::move(r0.text)};
    Candidate c1{state.config.models[1], std::move(second.text)};
    if (p.position_draw == 0) {
        p.a = std::move(c0);
        p.b = std::move(c1);
    } else {
        p.a = std::move(c1);
        p.b = std::move(c0);
    }
    state.pending = std::move(p);
    return *state.pending;
}

PairwiseChoice submit_choice(PairwiseState& state, int turn_index, Verdict verdict,
                             std::optional<DimVerdicts> dimensions, DeterministicRng& rng) {
    check_turn_free(state, turn_index);
    if (!state.pending || state.pending->turn_index != turn_index)
        throw StateError("no candidates for turn " + std::to_string(turn_index));
    const auto& p = *state.pending;

    PairwiseChoice c;
    c.session_id = state.config.session_id;
    c.character_id = state.config.character_id;
    c.category = state.config.category;
    c.topic = state.config.topic;
    c.turn_index = turn_index;
    c.user_text = p.user_text;
    c.a = p.a;
    c.b = p.b;
    c.verdict = verdict;
    c.dimensions = dimensions;
    c.seed = state.config.seed;
    c.params = state.config.params;
    switch (verdict) {
        case Verdict::AWins: c.continued_with = p.a.model; break;
        case Verdict::BWins: c.continued_with = p.b.model; break;
        case Verdict::Tie:
            c.rng_draw = rng.coin();
            c.continued_with = *c.rng_draw == 0 ? p.a.model : p.b.model;
            break;
    }
    apply_choice(state, c);
    return c;
}

void restore_proposal(PairwiseState& state, const PendingTurn& pending) {
    if (state.pending) throw StateError("turn " + std::to_string(state.pending->turn_index) + " awaits a choice");
    if (pending.turn_index != state.next_turn)
        throw StateError("recorded proposal is for turn " + std::to_string(pending.turn_index) + ", expected " +
                         std::to_string(state.next_turn));
    state.pending = pending;
}

void restore_choice(PairwiseState& state, const PairwiseChoice& choice) {
    check_turn_free(state, choice.turn_index);
    if (choice.turn_index != state.next_turn)
        throw StateError("recorded choice is for turn " + std::to_string(choice.turn_index) + ", expected " +
                         std::to_string(state.next_turn));
    apply_choice(state, choice);
}

// ---------------------------------------------------------------------------
// Logs
// ---------------------------------------------------------------------------

namespace {

detail::json candidate_json(const Candidate& c) {
    detail::json j;
    j["model"] = c.model;
    j["text"] = c.text;
    return j;
}

Candidate candidate_from(const detail::json& j) {
    return {detail::get_field<std::string>(j, "model", "candidate"), detail::get_field<std::string>(j, "text", "candidate")};
}

template <typename T>
T enum_from(const detail::json& j, const char* key, std::optional<T> (*parse)(std::string_view) noexcept,
            std::string_view what) {
    const auto s = detail::get_field<std::string>(j, key, what);
    const auto v = parse(s);
    if (!v) throw ParseError(std::string(what) + ": bad " + key + " '" + s + "'", 0);
    return *v;
}

template <typename T, typename Fn>
std::vector<T> load_lines(const std::string& path, Fn parse) {
    std::vector<T> out;
    std::size_t line_no = 0;
    const auto content = detail::read_file(path);
    for (auto line : split_lines(content)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(parse(line));
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
        } catch (const detail::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    return out;
}

}  // namespace

std::string choice_to_json_line(const PairwiseChoice& c) {
    detail::json j;
    j["session_id"] = c.session_id;
    j["character_id"] = c.character_id;
    j["category"] = to_string(c.category);
    j["topic"] = to_string(c.topic);
    j["turn_index"] = c.turn_index;
    j["user_text"] = c.user_text;
    j["a"] = candidate_json(c.a);
    j["b"] = candidate_json(c.b);
    j["verdict"] = to_string(c.verdict);
    j["continued_with"] = c.continued_with;
    j["rng_draw"] = c.rng_draw ? detail::json(*c.rng_draw) : detail::json(nullptr);
    if (c.dimensions) {
        detail::json d;
        for (std::size_t i = 0; i < kPairwiseDimensionCount; ++i)
            d[std::string(kPairwiseDimNames[i])] = to_string((*c.dimensions)[i]);
        j["dimensions"] = std::move(d);
    } else {
        j["dimensions"] = nullptr;
    }
    j["seed"] = c.seed;
    if (c.params) {
        detail::json p;
        p["temperature"] = c.params->temperature;
        p["max_output_tokens"] = c.params->max_output_tokens;
        j["params"] = std::move(p);
    } else {
        j["params"] = nullptr;
    }
    return detail::dump_line(j);
}

PairwiseChoice choice_from_json_line(std::string_view line) {
    constexpr std::string_view what = "choice";
    const auto j = detail::parse_json(line, what);
    PairwiseChoice c;
    c.session_id = detail::get_field<std::string>(j, "session_id", what);
    c.character_id = detail::field_or<std::string>(j, "character_id", "");
    c.category = enum_from<CharacterCategory>(j, "category", &parse_category, what);
    c.topic = enum_from<SceneTopic>(j, "topic", &parse_topic, what);
    c.turn_index = detail::get_field<int>(j, "turn_index", what);
    c.user_text = detail::field_or<std::string>(j, "user_text", "");
    c.a = candidate_from(detail::get_field<detail::json>(j, "a", what));
    c.b = candidate_from(detail::get_field<detail::json>(j, "b", what));
    c.verdict = enum_from<Verdict>(j, "verdict", &parse_verdict, what);
    c.continued_with = detail::get_field<std::string>(j, "continued_with", what);
    c.rng_draw = detail::opt_field<int>(j, "rng_draw");
    if (const auto it = j.find("dimensions"); it != j.end() && !it->is_null()) {
        DimVerdicts d{};
        for (std::size_t i = 0; i < kPairwiseDimensionCount; ++i)
            d[i] = enum_from<DimVerdict>(*it, std::string(kPairwiseDimNames[i]).c_str(), &parse_dim_verdict, what);
        c.dimensions = d;
    }
    c.seed = detail::field_or<std::uint64_t>(j, "seed", 0);
    if (const auto it = j.find("params"); it != j.end() && !it->is_null())
        c.params = GenerationParams{detail::get_field<double>(*it, "temperature", what),
                                    detail::get_field<int>(*it, "max_output_tokens", what)};
    return c;
}

std::string rating_to_json_line(const PointwiseRating& r) {
    detail::json j;
    j["annotator"] = r.annotator;
    j["model"] = r.model;
    j["character"] = r.character;
    j["session_id"] = r.session_id;
    j["session_turns"] = r.session_turns;
    detail::json scores;
    for (std::size_t i = 0; i < kRatingDimensionCount; ++i) scores[std::string(kRatingNames[i])] = r.scores[i];
    j["scores"] = std::move(scores);
    j["overall"] = r.overall;
    return detail::dump_line(j);
}

PointwiseRating rating_from_json_line(std::string_view line) {
    constexpr std::string_view what = "rating";
    const auto j = detail::parse_json(line, what);
    PointwiseRating r;
    r.annotator = detail::field_or<std::string>(j, "annotator", "");
    r.model = detail::get_field<std::string>(j, "model", what);
    r.character = detail::field_or<std::string>(j, "character", "");
    r.session_id = detail::field_or<std::string>(j, "session_id", "");
    r.session_turns = detail::field_or<int>(j, "session_turns", 0);
    const auto scores = detail::get_field<detail::json>(j, "scores", what);
    for (std::size_t i = 0; i < kRatingDimensionCount; ++i)
        r.scores[i] = detail::get_field<int>(scores, std::string(kRatingNames[i]).c_str(), what);
    r.overall = detail::get_field<int>(j, "overall", what);
    return r;
}

std::string tag_to_json_line(const FineGrainedTag& t) {
    detail::json j;
    j["model"] = t.model;
    j["session_id"] = t.session_id;
    j["turn_index"] = t.turn_index;
    auto tags = detail::json::array();
    for (std::size_t i = 0; i < kErrorTagCount; ++i)
        if (t.flags[i]) tags.push_back(kTagNames[i]);
    j["tags"] = std::move(tags);
    return detail::dump_line(j);
}

FineGrainedTag tag_from_json_line(std::string_view line) {
    constexpr std::string_view what = "tag";
    const auto j = detail::parse_json(line, what);
    FineGrainedTag t;
    t.model = detail::get_field<std::string>(j, "model", what);
    t.session_id = detail::get_field<std::string>(j, "session_id", what);
    t.turn_index = detail::get_field<int>(j, "turn_index", what);
    for (const auto& name : detail::get_field<std::vector<std::string>>(j, "tags", what)) {
        const auto tag = parse_error_tag(name);
        if (!tag) throw ParseError("tag: unknown tag '" + name + "'", 0);
        t.flags[static_cast<std::size_t>(*tag)] = true;
    }
    return t;
}

std::vector<PairwiseChoice> load_choice_log(const std::string& path) {
    return load_lines<PairwiseChoice>(path, choice_from_json_line);
}

std::vector<PointwiseRating> load_rating_log(const std::string& path) {
    return load_lines<PointwiseRating>(path, rating_from_json_line);
}

std::vector<FineGrainedTag> load_tag_log(const std::string& path) {
    return load_lines<FineGrainedTag>(path, tag_from_json_line);
}

std::string write_choice_log(const std::vector<PairwiseChoice>& choices) {
    std::string out;
    for (const auto& c : choices) {
        out += choice_to_json_line(c);
        out += '\n';
    }
    return out;
}

}  // namespace chardial
