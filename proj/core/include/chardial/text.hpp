#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace chardial {

/// Number of Unicode scalar values in a UTF-8 string. Each byte of a malformed
/// sequence counts as one scalar (as if replaced by U+FFFD).
std::size_t scalar_length(std::string_view utf8) noexcept;

bool is_valid_utf8(std::string_view utf8) noexcept;

/// Trims ASCII whitespace and U+3000 (ideographic space).
std::string_view trim(std::string_view s) noexcept;

std::vector<std::string_view> split_lines(std::string_view text);

bool starts_with(std::string_view s, std::string_view prefix) noexcept;

/// Decodes the scalar starting at `pos`, advancing `pos`. Malformed bytes yield U+FFFD.
char32_t decode_scalar(std::string_view utf8, std::size_t& pos) noexcept;

/// Joins with a separator; separators only between non-empty pieces.
std::string join(const std::vector<std::string>& pieces, std::string_view sep);

/// Round half away from zero to `decimals` places. A relative nudge of 1e-9
/// absorbs binary representation error in sums like 16.8 + 0.3 + ...
double round_to(double value, int decimals) noexcept;

/// Fixed-point rendering with exactly `decimals` places (after round_to).
std::string format_fixed(double value, int decimals);

/// Same as format_fixed but with an explicit sign for non-zero values ("+4", "-8", "0").
std::string format_signed(double value, int decimals);

/// Placeholders are `{name}`; `{{` and `}}` are literal braces. Throws
/// TemplateError on an unmatched brace or a placeholder missing from `values`.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values);

/// Placeholder names referenced by a template, in order of appearance.
std::vector<std::string> template_placeholders(std::string_view tmpl);

}  // namespace chardial
