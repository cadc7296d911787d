#pragma once

#include "chardial/dialogue.hpp"
#include "chardial/eval.hpp"
#include "chardial/gateway.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chardial {

/// A scripted session: fixed user turns (and, in pairwise mode, fixed verdicts)
/// sent through the gateway. With a replay cassette the run is fully offline and
/// byte-reproducible.
///
///   {"session_id","character_id","category","topic","system_prompt","greeting",
///    "models":[one or two ids],"seed","params"?:{"temperature","max_output_tokens"},
///    "turns":[{"user":..,"verdict":"A"|"B"|"Tie","dimensions"?:{"Consistency":"A",..}}]}
struct ScriptStep {
    std::string user_text;
    std::optional<Verdict> verdict;
    std::optional<DimVerdicts> dimensions;
};

struct SessionScript {
    std::string session_id = "script";
    std::string character_id = "character";
    CharacterCategory category = CharacterCategory::DailyLife;
    SceneTopic topic = SceneTopic::Unrestricted;
    std::string system_prompt;
    std::string greeting;
    std::vector<std::string> models;
    std::uint64_t seed = 0;
    std::optional<GenerationParams> params;
    std::vector<ScriptStep> steps;

    bool pairwise() const noexcept { return models.size() == 2; }
};

SessionScript parse_session_script(std::string_view json_text);
SessionScript load_session_script(const std::string& path);

struct ScriptRun {
    DialogueSession transcript;
    std::vector<PairwiseChoice> choices;  // pairwise only
};

/// Runs every step in order. Pairwise steps need a verdict; ties are broken by
/// the script seed.
ScriptRun run_session_script(const SessionScript& script, Gateway& gateway);

}  // namespace chardial
