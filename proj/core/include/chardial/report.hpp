#pragma once

#include "chardial/dialogue.hpp"
#include "chardial/eval.hpp"

#include <string>
#include <vector>

namespace chardial {

enum class OutputFormat { Table, Csv };

/// A rendered grid: header plus rows of cells. Rendering is deterministic.
struct TextTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string aligned() const;
    std::string csv() const;
    std::string render(OutputFormat f) const { return f == OutputFormat::Csv ? csv() : aligned(); }
};

/// RFC 4180 parsing, for reading reports back.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

TextTable stats_table(const CorpusStats& s);

/// Columns: group, n, win, tie, lose, advantage (percentages at `decimals`).
TextTable pairwise_table(const PairwiseTable& t, int decimals);
/// Columns: interval, n, advantage.
TextTable advantage_series_table(const std::vector<PairwiseChoice>& choices, std::string_view focal,
                                 std::optional<PairwiseDimension> dimension, int decimals);
/// Columns: model, n, Overall, Consistency, Human-likeness, Engagement,
/// Quality, Safety, Correctness, plus the two consistency components. 2 decimals.
TextTable pointwise_table(const std::vector<PointwiseRow>& rows);
/// Columns: model, turns, Overall, OOC, ..., Proactivity. 1 decimal.
TextTable finegrained_table(const std::vector<FineGrainedRow>& rows);
/// Longer-share and conditional preference rows per group.
TextTable length_share_table(const LengthReport& r, int decimals);
TextTable length_preference_table(const LengthReport& r, int decimals);

}  // namespace chardial
