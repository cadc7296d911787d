#pragma once

#include "chardial/dialogue.hpp"
#include "chardial/error.hpp"
#include "chardial/gateway.hpp"
#include "chardial/profile.hpp"
#include "chardial/rng.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chardial {

// ---------------------------------------------------------------------------
// Pointwise ratings
// ---------------------------------------------------------------------------

enum class RatingDimension { AttributeConsistency, BehaviorConsistency, HumanLikeness, Engagement, Quality, Safety, Correctness };
inline constexpr std::size_t kRatingDimensionCount = 7;
inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 5;
/// Sessions must reach this many turns before they can be rated.
inline constexpr int kMinRatedTurns = 20;

std::string_view to_string(RatingDimension d) noexcept;
std::optional<RatingDimension> parse_rating_dimension(std::string_view s) noexcept;

struct PointwiseRating {
    std::string annotator;
    std::string model;
    std::string character;
    std::string session_id;
    int session_turns = 0;
    std::array<int, kRatingDimensionCount> scores{};
    int overall = 0;  // rated directly, never derived from the sub-scores

    int score(RatingDimension d) const noexcept { return scores[static_cast<std::size_t>(d)]; }
    bool operator==(const PointwiseRating&) const = default;
};

/// Score range always; the 20-turn gate only when `enforce_min_turns`.
std::vector<Violation> validate_rating(const PointwiseRating& r, bool enforce_min_turns = true);

/// Consistency as reported: mean of attribute and behavior consistency.
double consistency_composite(double attribute, double behavior) noexcept;

struct PointwiseRow {
    std::string model;
    std::size_t n = 0;
    double overall = 0;
    std::array<double, kRatingDimensionCount> means{};

    double mean(RatingDimension d) const noexcept { return means[static_cast<std::size_t>(d)]; }
    double consistency() const noexcept {
        return consistency_composite(mean(RatingDimension::AttributeConsistency),
                                     mean(RatingDimension::BehaviorConsistency));
    }
};

/// Unrounded means per model, rows sorted by model id. Models without ratings do
/// not appear. Throws ValidationError if any rating is invalid.
std::vector<PointwiseRow> aggregate_pointwise(const std::vector<PointwiseRating>& ratings,
                                              bool enforce_min_turns = true);

// ---------------------------------------------------------------------------
// Fine-grained per-turn tags
// ---------------------------------------------------------------------------

enum class ErrorTag { OOC, Contradiction, Repetition, LessQuality, LessInfo, Proactivity };
inline constexpr std::size_t kErrorTagCount = 6;
std::string_view to_string(ErrorTag t) noexcept;
std::optional<ErrorTag> parse_error_tag(std::string_view s) noexcept;

struct FineGrainedTag {
    std::string model;
    std::string session_id;
    int turn_index = 0;
    std::array<bool, kErrorTagCount> flags{};

    bool has(ErrorTag t) const noexcept { return flags[static_cast<std::size_t>(t)]; }
    bool operator==(const FineGrainedTag&) const = default;
};

struct FineGrainedRow {
    std::string model;
    std::size_t total_turns = 0;
    std::array<std::size_t, kErrorTagCount> counts{};
    std::array<double, kErrorTagCount> proportions{};  // percent, unrounded
    double overall = 0;                                 // unrounded; lower is better

    double proportion(ErrorTag t) const noexcept { return proportions[static_cast<std::size_t>(t)]; }
};

/// OOC + Contradiction + Repetition + LessQuality + LessInfo - Proactivity.
double overall_error_score(const std::array<double, kErrorTagCount>& percentages) noexcept;

/// Throws ConflictError on a duplicate (model, session, turn).
std::vector<FineGrainedRow> aggregate_finegrained(const std::vector<FineGrainedTag>& tags);

// ---------------------------------------------------------------------------
// Pairwise choices
// ---------------------------------------------------------------------------

enum class Verdict { AWins, BWins, Tie };
enum class DimVerdict { A, B, Tie };
enum class PairwiseDimension { Consistency, HumanLikeness, Engagement };
inline constexpr std::size_t kPairwiseDimensionCount = 3;

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(DimVerdict v) noexcept;
std::string_view to_string(PairwiseDimension d) noexcept;
std::optional<Verdict> parse_verdict(std::string_view s) noexcept;
std::optional<DimVerdict> parse_dim_verdict(std::string_view s) noexcept;
std::optional<PairwiseDimension> parse_pairwise_dimension(std::string_view s) noexcept;

struct Candidate {
    std::string model;
    std::string text;
    bool operator==(const Candidate&) const = default;
};

using DimVerdicts = std::array<DimVerdict, kPairwiseDimensionCount>;

/// One turn of a pairwise comparison. `rng_draw` is set on ties: 0 continued
/// with A, 1 with B.
struct PairwiseChoice {
    std::string session_id;
    std::string character_id;
    CharacterCategory category = CharacterCategory::DailyLife;
    SceneTopic topic = SceneTopic::Unrestricted;
    int turn_index = 0;
    std::string user_text;
    Candidate a;
    Candidate b;
    Verdict verdict = Verdict::Tie;
    std::string continued_with;
    std::optional<int> rng_draw;
    std::optional<DimVerdicts> dimensions;
    std::uint64_t seed = 0;
    std::optional<GenerationParams> params;

    bool operator==(const PairwiseChoice&) const = default;
};

std::vector<Violation> validate_choice(const PairwiseChoice& c);

enum class TurnInterval { T1_5, T6_10, T11_15, T16_20, T20plus };
inline constexpr TurnInterval kAllIntervals[] = {TurnInterval::T1_5, TurnInterval::T6_10, TurnInterval::T11_15,
                                                 TurnInterval::T16_20, TurnInterval::T20plus};
std::string_view to_string(TurnInterval t) noexcept;
std::optional<TurnInterval> parse_interval(std::string_view s) noexcept;

/// 1-5, 6-10, 11-15, 16-20, then everything after 20. Throws std::out_of_range below 1.
TurnInterval bucket_turn(int turn_index);

enum class GroupKey { Category, Topic, Interval, Overall };
std::string_view to_string(GroupKey k) noexcept;
std::optional<GroupKey> parse_group_key(std::string_view s) noexcept;

struct WinTieLose {
    std::size_t win = 0;
    std::size_t tie = 0;
    std::size_t lose = 0;

    std::size_t total() const noexcept { return win + tie + lose; }
    double win_pct() const noexcept;
    double tie_pct() const noexcept;
    double lose_pct() const noexcept;
    /// win% - lose%, unrounded.
    double advantage() const noexcept { return win_pct() - lose_pct(); }
    WinTieLose swapped() const noexcept { return {lose, tie, win}; }
    WinTieLose& operator+=(const WinTieLose& o) noexcept;
    bool operator==(const WinTieLose&) const = default;
};

struct PairwiseRow {
    std::string group;  // e.g. "Celebrities", "T1_5/ChitChat", "Overall"
    WinTieLose counts;
};

struct PairwiseTable {
    std::string focal;
    std::string opponent;  // empty when the log mixes several opponents
    std::vector<GroupKey> keys;
    std::optional<PairwiseDimension> dimension;
    std::vector<PairwiseRow> rows;

    const PairwiseRow* find(std::string_view group) const;
};

/// Win/tie/lose of `focal` grouped by the composite key. An empty key list or
/// {Overall} yields one "Overall" row. Empty groups are omitted. With a
/// dimension, per-dimension verdicts are counted (choices without them are skipped).
/// Throws ValidationError when a choice does not involve the focal model.
PairwiseTable aggregate_pairwise(const std::vector<PairwiseChoice>& choices, std::string_view focal_model,
                                 const std::vector<GroupKey>& keys,
                                 std::optional<PairwiseDimension> dimension = std::nullopt);

/// Advantage of `focal` per turn interval (intervals without choices omitted).
std::vector<std::pair<TurnInterval, double>> advantage_series(const std::vector<PairwiseChoice>& choices,
                                                              std::string_view focal_model,
                                                              std::optional<PairwiseDimension> dimension = std::nullopt);

/// Rounded row values at `decimals` places (0 or 1), advantage taken from the
/// unrounded percentages.
struct RoundedRow {
    double win;
    double tie;
    double lose;
    double advantage;
};
RoundedRow round_row(const WinTieLose& wtl, int decimals) noexcept;

// ---------------------------------------------------------------------------
// Response length analysis
// ---------------------------------------------------------------------------

struct LengthOptions {
    /// Count parenthesized stage directions in response length.
    bool count_stage_directions = true;
};

struct LengthGroup {
    std::string group;
    std::size_t turns = 0;
    std::size_t equal = 0;                   // same length, excluded from shares
    std::array<std::size_t, 2> longer{};     // turns where models[i] is strictly longer
    std::array<WinTieLose, 2> when_longer{}; // outcome from the longer side's view

    /// Percent of unequal-length turns where models[i] is longer (0 when none).
    double share(std::size_t i) const noexcept;
};

struct LengthReport {
    std::array<std::string, 2> models;  // {focal, opponent}
    std::vector<LengthGroup> groups;    // one per topic present, then "Overall"
};

LengthReport length_analysis(const std::vector<PairwiseChoice>& choices, std::string_view focal_model,
                             const LengthOptions& options = {});

std::size_t response_length(std::string_view text, const LengthOptions& options);

// ---------------------------------------------------------------------------
// Pairwise session protocol
// ---------------------------------------------------------------------------

struct PairwiseSessionConfig {
    std::string session_id;
    std::string character_id;
    CharacterCategory category = CharacterCategory::DailyLife;
    SceneTopic topic = SceneTopic::Unrestricted;
    std::string system_prompt;
    /// Opening character line shown before turn 1; not compared.
    std::string greeting;
    std::array<std::string, 2> models;
    std::uint64_t seed = 0;
    std::optional<GenerationParams> params;
};

/// Candidates for the current turn; `a`/`b` are the randomized display positions.
struct PendingTurn {
    int turn_index = 0;
    std::string user_text;
    Candidate a;
    Candidate b;
    int position_draw = 0;  // 0: models[0] shown as A, 1: models[1] shown as A
};

struct PairwiseState {
    PairwiseSessionConfig config;
    std::vector<ChatTurn> history;  // greeting, then (user, chosen) per completed turn
    std::optional<PendingTurn> pending;
    std::vector<PairwiseChoice> choices;
    int next_turn = 1;

    explicit PairwiseState(PairwiseSessionConfig cfg);
};

/// Request both models for the next turn (concurrently) and assign A/B by a
/// recorded coin flip. Either model failing leaves the state untouched.
const PendingTurn& propose_turn(PairwiseState& state, Gateway& gateway, std::string user_text, DeterministicRng& rng);

/// Records the verdict. Ties continue with a coin flip from `rng`. History is
/// extended with the user text and the continued response only. Throws
/// ConflictError when `turn_index` was already decided and StateError when
/// there are no candidates for it.
PairwiseChoice submit_choice(PairwiseState& state, int turn_index, Verdict verdict,
                             std::optional<DimVerdicts> dimensions, DeterministicRng& rng);

/// Re-applies a recorded proposal (no gateway call, no draw).
void restore_proposal(PairwiseState& state, const PendingTurn& pending);
/// Re-applies a recorded choice (no draw).
void restore_choice(PairwiseState& state, const PairwiseChoice& choice);

// ---------------------------------------------------------------------------
// Logs (JSON lines)
// ---------------------------------------------------------------------------

std::string choice_to_json_line(const PairwiseChoice& c);
PairwiseChoice choice_from_json_line(std::string_view line);
std::string rating_to_json_line(const PointwiseRating& r);
PointwiseRating rating_from_json_line(std::string_view line);
std::string tag_to_json_line(const FineGrainedTag& t);
FineGrainedTag tag_from_json_line(std::string_view line);

std::vector<PairwiseChoice> load_choice_log(const std::string& path);
std::vector<PointwiseRating> load_rating_log(const std::string& path);
std::vector<FineGrainedTag> load_tag_log(const std::string& path);
std::string write_choice_log(const std::vector<PairwiseChoice>& choices);

}  // namespace chardial
