#include "chardial/text.hpp"

#include "chardial/error.hpp"

#include <cmath>
#include <cstdio>

namespace chardial {

char32_t decode_scalar(std::string_view s, std::size_t& pos) noexcept {
    constexpr char32_t kReplacement = 0xFFFD;
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    const unsigned char lead = byte(pos);
    if (lead < 0x80) {
        ++pos;
        return lead;
    }
    std::size_t need = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((lead & 0xE0) == 0xC0) {
        need = 1;
        cp = lead & 0x1F;
        min = 0x80;
    } else if ((lead & 0xF0) == 0xE0) {
        need = 2;
        cp = lead & 0x0F;
        min = 0x800;
    } else if ((lead & 0xF8) == 0xF0) {
        need = 3;
        cp = lead & 0x07;
        min = 0x10000;
    } else {
        ++pos;
        return kReplacement;
    }
    if (pos + need >= s.size()) {
        ++pos;
        return kReplacement;
    }
    for (std::size_t i = 1; i <= need; ++i) {
        const unsigned char c = byte(pos + i);
        if ((c & 0xC0) != 0x80) {
            ++pos;
            return kReplacement;
        }
        cp = (cp << 6) | (c & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++pos;
        return kReplacement;
    }
    pos += need + 1;
    return cp;
}

std::size_t scalar_length(std::string_view utf8) noexcept {
    std::size_t n = 0;
    for (std::size_t pos = 0; pos < utf8.size(); ++n) decode_scalar(utf8, pos);
    return n;
}

bool is_valid_utf8(std::string_view utf8) noexcept {
    for (std::size_t pos = 0; pos < utf8.size();) {
        const std::size_t before = pos;
        const char32_t cp = decode_scalar(utf8, pos);
        // A genuine U+FFFD is three bytes; a replacement for bad input advances one.
        if (cp == 0xFFFD && pos - before != 3) return false;
    }
    return true;
}

namespace {
bool is_space_at(std::string_view s, std::size_t i, std::size_t& width) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        width = 1;
        return true;
    }
    // U+3000 IDEOGRAPHIC SPACE = E3 80 80
    if (s.substr(i, 3) == "\xE3\x80\x80") {
        width = 3;
        return true;
    }
    return false;
}
}  // namespace

std::string_view trim(std::string_view s) noexcept {
    std::size_t w = 0;
    while (!s.empty() && is_space_at(s, 0, w)) s.remove_prefix(w);
    while (!s.empty()) {
        const std::size_t last = s.size() - 1;
        if (is_space_at(s, last, w)) {
            s.remove_suffix(1);
        } else if (s.size() >= 3 && s.substr(s.size() - 3) == "\xE3\x80\x80") {
            s.remove_suffix(3);
        } else {
            break;
        }
    }
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (nl == std::string_view::npos) {
            if (!line.empty()) lines.push_back(line);
            break;
        }
        lines.push_back(line);
        start = nl + 1;
    }
    return lines;
}

bool starts_with(std::string_view s, std::string_view prefix) noexcept {
    return s.substr(0, prefix.size()) == prefix;
}

std::string join(const std::vector<std::string>& pieces, std::string_view sep) {
    std::string out;
    for (const auto& p : pieces) {
        if (p.empty()) continue;
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

double round_to(double value, int decimals) noexcept {
    const double scale = std::pow(10.0, decimals);
    double scaled = value * scale;
    scaled += std::copysign(std::abs(scaled) * 1e-9, scaled);
    const double r = std::round(scaled) / scale;
    return r == 0.0 ? 0.0 : r;  // no negative zero
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, round_to(value, decimals));
    return buf;
}

std::string format_signed(double value, int decimals) {
    const double r = round_to(value, decimals);
    std::string s = format_fixed(r, decimals);
    if (r > 0) s.insert(s.begin(), '+');
    return s;
}

namespace {

/// Walks a template, calling `literal` for text and `field` for each placeholder.
template <typename Literal, typename Field>
void scan_template(std::string_view tmpl, Literal&& literal, Field&& field) {
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const char c = tmpl[i];
        if (c == '{') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
                literal("{");
                i += 2;
                continue;
            }
            const std::size_t close = tmpl.find('}', i + 1);
            if (close == std::string_view::npos) throw TemplateError("unmatched '{' in template");
            const std::string_view name = tmpl.substr(i + 1, close - i - 1);
            if (name.empty() || name.find('{') != std::string_view::npos)
                throw TemplateError("malformed placeholder in template");
            field(name);
            i = close + 1;
        } else if (c == '}') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
                literal("}");
                i += 2;
                continue;
            }
            throw TemplateError("unmatched '}' in template");
        } else {
            const std::size_t next = tmpl.find_first_of("{}", i);
            const std::size_t end = next == std::string_view::npos ? tmpl.size() : next;
            literal(tmpl.substr(i, end - i));
            i = end;
        }
    }
}

}  // namespace

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
    std::string out;
    scan_template(
        tmpl, [&](std::string_view lit) { out += lit; },
        [&](std::string_view name) {
            const auto it = values.find(name);
            if (it == values.end()) throw TemplateError("unknown placeholder {" + std::string(name) + "}");
            out += it->second;
        });
    return out;
}

std::vector<std::string> template_placeholders(std::string_view tmpl) {
    std::vector<std::string> names;
    scan_template(
        tmpl, [](std::string_view) {}, [&](std::string_view name) { names.emplace_back(name); });
    return names;
}

}  // namespace chardial
