#include "chardial/error.hpp"

namespace chardial {

std::string describe(const std::vector<Violation>& violations) {
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v.field.empty() ? v.rule : v.field + ": " + v.rule;
    }
    return out;
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error("validation failed: " + describe(violations)), violations_(std::move(violations)) {}

ValidationError::ValidationError(Violation violation)
    : ValidationError(std::vector<Violation>{std::move(violation)}) {}

ValidationError::ValidationError(const std::string& what, std::vector<Violation> violations)
    : Error(what + ": " + describe(violations)), violations_(std::move(violations)) {}

}  // namespace chardial
