#pragma once

// Reference result cells and integer counts that reproduce them.
// Counts were found by gen_pairwise_counts.py and checked independently by
// check_pairwise_counts.py; they are frozen here.

#include <array>
#include <string_view>

namespace fixtures {

struct Cell {
    int win;
    int tie;
    int lose;
};

struct Counts {
    int win;
    int tie;
    int lose;
};

// Focal model against five opponents, by character category. Each cell is
// reproduced by a 100-choice log, so counts equal the percentages.
inline constexpr std::array<std::string_view, 5> kOpponents = {"GPT-3.5", "MiniMax", "GPT-4", "CharacterGLM-6B",
                                                               "CharacterGLM-12B"};
inline constexpr std::array<std::string_view, 4> kCategoryNames = {"Celebrities", "DailyLife", "GamesVideos",
                                                                   "VirtualLove"};

inline constexpr Cell kByCategory[5][4] = {
    {{45, 14, 41}, {46, 9, 45}, {47, 9, 44}, {48, 12, 40}},
    {{52, 10, 38}, {45, 6, 49}, {48, 6, 46}, {48, 5, 47}},
    {{35, 22, 43}, {40, 13, 47}, {45, 6, 49}, {55, 4, 41}},
    {{63, 2, 35}, {69, 3, 28}, {67, 3, 30}, {70, 1, 29}},
    {{53, 7, 40}, {57, 8, 35}, {61, 8, 31}, {61, 4, 35}},
};
inline constexpr int kByCategoryAdvantage[5][4] = {
    {4, 1, 3, 8}, {14, -4, 2, 1}, {-8, -7, -4, 14}, {28, 41, 37, 41}, {13, 22, 30, 26},
};

// By topic (ChitChat, Interview, Love) with a pooled Overall column.
inline constexpr Counts kByTopicCounts[5][3] = {
    {{91, 18, 90}, {63, 21, 59}, {57, 14, 48}},
    {{71, 9, 71}, {92, 17, 79}, {30, 4, 30}},
    {{77, 16, 86}, {26, 16, 32}, {41, 4, 30}},
    {{115, 4, 53}, {132, 5, 62}, {95, 1, 43}},
    {{53, 4, 31}, {58, 7, 42}, {117, 15, 60}},
};
inline constexpr Cell kByTopic[5][4] = {
    {{46, 9, 45}, {44, 15, 41}, {48, 12, 40}, {46, 11, 43}},
    {{47, 6, 47}, {49, 9, 42}, {47, 6, 47}, {48, 7, 45}},
    {{43, 9, 48}, {35, 22, 43}, {55, 5, 40}, {44, 11, 45}},
    {{67, 2, 31}, {66, 3, 31}, {68, 1, 31}, {67, 2, 31}},
    {{60, 5, 35}, {54, 7, 39}, {61, 8, 31}, {59, 7, 34}},
};
inline constexpr int kByTopicAdvantage[5][4] = {
    {1, 3, 8, 3}, {0, 7, 0, 3}, {-5, -8, 15, -1}, {36, 35, 37, 36}, {25, 15, 30, 25},
};

// Focal model against MiniMax by turn interval (rows) and topic (columns).
// Turn indices used for each interval row.
inline constexpr std::array<int, 4> kIntervalTurns = {3, 8, 13, 18};
inline constexpr Counts kByIntervalCounts[4][3] = {
    {{41, 4, 51}, {47, 10, 50}, {56, 7, 51}},
    {{33, 4, 37}, {53, 8, 43}, {95, 9, 94}},
    {{99, 10, 89}, {89, 16, 64}, {61, 9, 73}},
    {{46, 7, 40}, {55, 9, 41}, {51, 6, 50}},
};
inline constexpr Cell kByInterval[4][4] = {
    {{43, 4, 53}, {44, 9, 47}, {49, 6, 45}, {45, 7, 48}},
    {{45, 5, 50}, {51, 8, 41}, {48, 5, 47}, {48, 6, 46}},
    {{50, 5, 45}, {53, 9, 38}, {43, 6, 51}, {49, 7, 44}},
    {{49, 8, 43}, {52, 9, 39}, {48, 6, 47}, {50, 7, 43}},
};
inline constexpr int kByIntervalAdvantage[4][4] = {
    {-10, -3, 4, -3}, {-5, 10, 1, 2}, {5, 15, -8, 5}, {6, 13, 1, 7},
};

// Response length: index 0 is MiniMax longer, 1 is the focal model longer.
// Counts are from the longer side's view, per topic.
inline constexpr Counts kLongerCounts[2][3] = {
    {{22, 3, 27}, {59, 10, 49}, {54, 6, 62}},
    {{27, 3, 23}, {34, 7, 30}, {65, 9, 59}},
};
inline constexpr Cell kLongerPreference[2][4] = {
    {{42, 6, 52}, {50, 8, 42}, {44, 5, 51}, {46, 7, 47}},
    {{51, 6, 43}, {48, 10, 42}, {49, 7, 44}, {49, 7, 44}},
};
inline constexpr int kLongerAdvantage[2][4] = {{-10, 8, -7, -1}, {8, 6, 5, 5}};
// Share of unequal-length turns where MiniMax is longer, per topic then overall.
inline constexpr std::array<int, 4> kMiniMaxLongerShare = {50, 62, 48, 53};

// Fine-grained error percentages: OOC, Contradiction, Repetition, LessQuality,
// LessInfo, Proactivity, then the reported overall.
struct ErrorRow {
    std::string_view model;
    std::array<double, 6> percent;
    double overall;
};

inline constexpr std::array<ErrorRow, 11> kErrorRows = {{
    {"ChatGLM2", {52.5, 2.8, 22.5, 31.5, 0.0, 5.5}, 103.8},
    {"Claude-2", {43.5, 6.3, 24.8, 42.8, 1.5, 4.3}, 114.6},
    {"GPT-3.5", {16.8, 0.3, 12.3, 9.8, 0.3, 3.5}, 36.0},
    {"SparkDesk", {18.3, 2.5, 72.5, 11.0, 0.8, 3.0}, 102.1},
    {"ERNIEBot", {23.5, 1.8, 15.3, 6.0, 8.8, 3.5}, 51.9},
    {"Xingchen", {18.8, 3.3, 7.0, 12.3, 0.3, 12.8}, 28.8},
    {"Baichuan", {7.8, 0.8, 10.5, 6.0, 0.0, 0.0}, 25.1},
    {"Qwen", {6.0, 0.3, 27.8, 11.3, 0.3, 13.8}, 31.9},
    {"MiniMax", {10.9, 0.0, 2.1, 9.1, 2.3, 1.6}, 22.8},
    {"GPT-4", {3.5, 1.0, 17.3, 8.5, 0.0, 1.0}, 29.3},
    {"CharacterGLM-66B", {8.0, 1.2, 5.3, 2.9, 3.4, 5.1}, 15.7},
}};

// 400 tagged turns whose one-decimal proportions match the Xingchen row and
// whose unrounded overall (28.75) rounds to the reported 28.8.
inline constexpr int kXingchenTurns = 400;
inline constexpr std::array<int, 6> kXingchenCounts = {75, 13, 28, 49, 1, 51};

// Pointwise fixture: per-dimension score sums over 100 ratings (attribute and
// behavior consistency, human-likeness, engagement, quality, safety,
// correctness) and the overall sum.
inline constexpr int kPointwiseRatings = 100;
inline constexpr std::array<int, 7> kPointwiseSums = {430, 406, 433, 423, 444, 499, 487};
inline constexpr int kPointwiseOverallSum = 421;

}  // namespace fixtures
