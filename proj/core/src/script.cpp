#include "chardial/script.hpp"

#include "chardial/rng.hpp"
#include "chardial/text.hpp"
#include "json_util.hpp"

namespace chardial {

namespace {

std::optional<Verdict> verdict_from(std::string_view s) {
    if (s == "A") return Verdict::AWins;
    if (s == "B") return Verdict::BWins;
    return parse_verdict(s);
}

}  // namespace

SessionScript parse_session_script(std::string_view json_text) {
    const auto j = detail::parse_json(json_text, "session script");
    constexpr std::string_view what = "session script";
    SessionScript s;
    try {
        s.session_id = detail::field_or<std::string>(j, "session_id", s.session_id);
        s.character_id = detail::field_or<std::string>(j, "character_id", s.character_id);
        const auto category = detail::field_or<std::string>(j, "category", "DailyLife");
        const auto topic = detail::field_or<std::string>(j, "topic", "Unrestricted");
        if (auto c = parse_category(category)) {
            s.category = *c;
        } else {
            throw ParseError("session script: unknown category '" + category + "'", 0);
        }
        if (auto t = parse_topic(topic)) {
            s.topic = *t;
        } else {
            throw ParseError("session script: unknown topic '" + topic + "'", 0);
        }
        s.system_prompt = detail::field_or<std::string>(j, "system_prompt", "");
        s.greeting = detail::get_field<std::string>(j, "greeting", what);
        s.models = detail::get_field<std::vector<std::string>>(j, "models", what);
        s.seed = detail::field_or<std::uint64_t>(j, "seed", 0);
        if (const auto it = j.find("params"); it != j.end() && !it->is_null()) {
            GenerationParams p;
            p.temperature = detail::field_or<double>(*it, "temperature", p.temperature);
            p.max_output_tokens = detail::field_or<int>(*it, "max_output_tokens", p.max_output_tokens);
            s.params = p;
        }
        for (const auto& t : detail::get_field<detail::json>(j, "turns", what)) {
            ScriptStep step;
            step.user_text = detail::get_field<std::string>(t, "user", what);
            if (const auto v = detail::opt_field<std::string>(t, "verdict")) {
                step.verdict = verdict_from(*v);
                if (!step.verdict) throw ParseError("session script: unknown verdict '" + *v + "'", 0);
            }
            if (const auto it = t.find("dimensions"); it != t.end() && !it->is_null()) {
                DimVerdicts d{};
                for (std::size_t i = 0; i < kPairwiseDimensionCount; ++i) {
                    const auto name = std::string(to_string(static_cast<PairwiseDimension>(i)));
                    const auto v = parse_dim_verdict(detail::get_field<std::string>(*it, name.c_str(), what));
                    if (!v) throw ParseError("session script: bad verdict for " + name, 0);
                    d[i] = *v;
                }
                step.dimensions = d;
            }
            s.steps.push_back(std::move(step));
        }
    } catch (const detail::json::exception& e) {
        throw ParseError(std::string("session script: ") + e.what(), 0);
    }
    if (s.models.empty() || s.models.size() > 2)
        throw ValidationError(Violation{"models", "a script names one or two models"});
    if (s.pairwise())
        for (std::size_t i = 0; i < s.steps.size(); ++i)
            if (!s.steps[i].verdict)
                throw ValidationError(Violation{"turns[" + std::to_string(i) + "]", "pairwise step without verdict"});
    return s;
}

SessionScript load_session_script(const std::string& path) { return parse_session_script(detail::read_file(path)); }

ScriptRun run_session_script(const SessionScript& script, Gateway& gateway) {
    ScriptRun run;
    auto& t = run.transcript;
    t.id = script.session_id;
    t.character_id = script.character_id;
    t.player_id = "script";
    t.topic = script.topic;
    t.provenance = Provenance::RolePlay;

    if (script.pairwise()) {
        PairwiseSessionConfig cfg;
        cfg.session_id = script.session_id;
        cfg.character_id = script.character_id;
        cfg.category = script.category;
        cfg.topic = script.topic;
        cfg.system_prompt = script.system_prompt;
        cfg.greeting = script.greeting;
        cfg.models = {script.models[0], script.models[1]};
        cfg.seed = script.seed;
        cfg.params = script.params;
        PairwiseState state(std::move(cfg));
        DeterministicRng rng(script.seed);
        for (const auto& step : script.steps) {
            const int turn = propose_turn(state, gateway, step.user_text, rng).turn_index;
            run.choices.push_back(submit_choice(state, turn, *step.verdict, step.dimensions, rng));
        }
        for (const auto& h : state.history) t = append_turn(std::move(t), Utterance{h.speaker, h.text, {}, 0});
        t = close_session(std::move(t));
        return run;
    }

    t = append_turn(std::move(t), Utterance{Speaker::Character, script.greeting, {}, 0});
    for (const auto& step : script.steps) {
        ChatRequest req;
        req.system_prompt = script.system_prompt;
        for (const auto& u : t.turns) req.history.push_back({u.speaker, u.text});
        req.history.push_back({Speaker::Player, step.user_text});
        req.params = script.params;
        const auto reply = gateway.generate_reply(script.models[0], req);
        t = append_turn(std::move(t), Utterance{Speaker::Player, step.user_text, {}, 0});
        t = append_turn(std::move(t), Utterance{Speaker::Character, reply.text, {}, 0});
    }
    t = close_session(std::move(t));
    return run;
}

}  // namespace chardial
