#include "chardial/report.hpp"

#include "chardial/text.hpp"

#include <algorithm>
#include <cctype>

namespace chardial {

namespace {

bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (!(std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) return false;
    return true;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string TextTable::aligned() const {
    const std::size_t cols = header.size();
    std::vector<std::size_t> width(cols, 0);
    for (std::size_t c = 0; c < cols; ++c) width[c] = scalar_length(header[c]);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < cols && c < row.size(); ++c) width[c] = std::max(width[c], scalar_length(row[c]));

    const auto line = [&](const std::vector<std::string>& cells, bool is_header) {
        std::string out;
        for (std::size_t c = 0; c < cols; ++c) {
            const std::string cell = c < cells.size() ? cells[c] : "";
            const std::size_t pad = width[c] - scalar_length(cell);
            const bool right = !is_header && c > 0 && looks_numeric(cell);
            if (c) out += "  ";
            if (right) out.append(pad, ' ');
            out += cell;
            if (!right && c + 1 < cols) out.append(pad, ' ');
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };

    std::string out = line(header, true);
    std::size_t total = 0;
    for (std::size_t c = 0; c < cols; ++c) total += width[c] + (c ? 2 : 0);
    out += std::string(total, '-') + "\n";
    for (const auto& row : rows) out += line(row, false);
    return out;
}

std::string TextTable::csv() const {
    const auto line = [](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out += ',';
            out += csv_cell(cells[c]);
        }
        return out + "\n";
    };
    std::string out = line(header);
    for (const auto& row : rows) out += line(row);
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        any = true;
        switch (c) {
            case '"': quoted = true; break;
            case ',':
                row.push_back(std::move(cell));
                cell.clear();
                break;
            case '\r': break;
            case '\n':
                row.push_back(std::move(cell));
                cell.clear();
                out.push_back(std::move(row));
                row.clear();
                any = false;
                break;
            default: cell += c;
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV cell", out.size() + 1);
    if (any || !cell.empty() || !row.empty()) {
        row.push_back(std::move(cell));
        out.push_back(std::move(row));
    }
    return out;
}

TextTable stats_table(const CorpusStats& s) {
    TextTable t;
    t.header = {"metric", "value"};
    const auto count = [](std::size_t v) { return std::to_string(v); };
    const auto avg = [](double v) { return format_fixed(v, 2); };
    t.rows = {
        {"dialogues", count(s.n_dialogues)},
        {"avg_rounds", avg(s.avg_rounds)},
        {"characters", count(s.n_characters)},
        {"avg_profile_length", avg(s.avg_profile_length)},
        {"utterances_total", count(s.n_utterances_total)},
        {"utterances_character", count(s.n_utterances_character)},
        {"utterances_user", count(s.n_utterances_user)},
        {"avg_utterance_length_total", avg(s.avg_utterance_length_total)},
        {"avg_utterance_length_character", avg(s.avg_utterance_length_character)},
        {"avg_utterance_length_user", avg(s.avg_utterance_length_user)},
    };
    return t;
}

namespace {

std::vector<std::string> wtl_cells(const WinTieLose& w, int decimals) {
    const auto r = round_row(w, decimals);
    return {std::to_string(w.total()), format_fixed(r.win, decimals), format_fixed(r.tie, decimals),
            format_fixed(r.lose, decimals), format_signed(r.advantage, decimals)};
}

}  // namespace

TextTable pairwise_table(const PairwiseTable& t, int decimals) {
    TextTable out;
    out.header = {"group", "n", "win", "tie", "lose", "advantage"};
    WinTieLose total;
    for (const auto& row : t.rows) {
        auto cells = wtl_cells(row.counts, decimals);
        cells.insert(cells.begin(), row.group);
        out.rows.push_back(std::move(cells));
        total += row.counts;
    }
    if (!t.keys.empty() && !t.rows.empty()) {
        auto cells = wtl_cells(total, decimals);
        cells.insert(cells.begin(), "Overall");
        out.rows.push_back(std::move(cells));
    }
    return out;
}

TextTable advantage_series_table(const std::vector<PairwiseChoice>& choices, std::string_view focal,
                                 std::optional<PairwiseDimension> dimension, int decimals) {
    const auto table = aggregate_pairwise(choices, focal, {GroupKey::Interval}, dimension);
    TextTable out;
    out.header = {"interval", "n", "advantage"};
    for (const auto& row : table.rows)
        out.rows.push_back({row.group, std::to_string(row.counts.total()),
                            format_signed(round_to(row.counts.advantage(), decimals), decimals)});
    return out;
}

TextTable pointwise_table(const std::vector<PointwiseRow>& rows) {
    TextTable out;
    out.header = {"model",  "n",      "overall",     "consistency",           "human_likeness",
                  "engagement", "quality", "safety", "correctness", "attribute_consistency",
                  "behavior_consistency"};
    const auto f = [](double v) { return format_fixed(v, 2); };
    for (const auto& r : rows) {
        out.rows.push_back({r.model, std::to_string(r.n), f(r.overall), f(r.consistency()),
                            f(r.mean(RatingDimension::HumanLikeness)), f(r.mean(RatingDimension::Engagement)),
                            f(r.mean(RatingDimension::Quality)), f(r.mean(RatingDimension::Safety)),
                            f(r.mean(RatingDimension::Correctness)),
                            f(r.mean(RatingDimension::AttributeConsistency)),
                            f(r.mean(RatingDimension::BehaviorConsistency))});
    }
    return out;
}

TextTable finegrained_table(const std::vector<FineGrainedRow>& rows) {
    TextTable out;
    out.header = {"model", "turns", "overall"};
    for (std::size_t i = 0; i < kErrorTagCount; ++i) out.header.emplace_back(to_string(static_cast<ErrorTag>(i)));
    for (const auto& r : rows) {
        std::vector<std::string> cells{r.model, std::to_string(r.total_turns), format_fixed(r.overall, 1)};
        for (std::size_t i = 0; i < kErrorTagCount; ++i) cells.push_back(format_fixed(r.proportions[i], 1));
        out.rows.push_back(std::move(cells));
    }
    return out;
}

TextTable length_share_table(const LengthReport& r, int decimals) {
    TextTable out;
    out.header = {"group", "turns", "equal", r.models[0] + " longer", r.models[1] + " longer"};
    for (const auto& g : r.groups) {
        out.rows.push_back({g.group, std::to_string(g.turns), std::to_string(g.equal),
                            format_fixed(g.share(0), decimals), format_fixed(g.share(1), decimals)});
    }
    return out;
}

TextTable length_preference_table(const LengthReport& r, int decimals) {
    TextTable out;
    out.header = {"longer", "group", "n", "win", "tie", "lose", "advantage"};
    for (std::size_t i = 0; i < 2; ++i) {
        for (const auto& g : r.groups) {
            auto cells = wtl_cells(g.when_longer[i], decimals);
            cells.insert(cells.begin(), g.group);
            cells.insert(cells.begin(), r.models[i]);
            out.rows.push_back(std::move(cells));
        }
    }
    return out;
}

}  // namespace chardial
