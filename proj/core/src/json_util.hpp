#pragma once

// Internal helpers around nlohmann::json. Not installed.

#include "chardial/error.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace chardial::detail {

using json = nlohmann::ordered_json;

inline std::string dump_line(const json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

inline json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what(), 0);
    }
}

template <typename T>
T get_field(const json& j, const char* key, std::string_view what) {
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string(what) + ": missing field '" + key + "'", 0);
    try {
        return it->template get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string(what) + ": bad field '" + key + "': " + e.what(), 0);
    }
}

template <typename T>
std::optional<T> opt_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->template get<T>();
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->template get<T>();
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace chardial::detail
