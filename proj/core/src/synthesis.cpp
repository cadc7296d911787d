#include "chardial/synthesis.hpp"

#include "chardial/rng.hpp"
#include "chardial/text.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <array>
#include <filesystem>

namespace chardial {

namespace {

constexpr std::array<std::pair<SynthesisStage, std::string_view>, 6> kStages{{
    {SynthesisStage::CharacterProfileGen, "CharacterProfileGen"},
    {SynthesisStage::PlayerProfileGen, "PlayerProfileGen"},
    {SynthesisStage::TopicGen, "TopicGen"},
    {SynthesisStage::DialogueGen, "DialogueGen"},
    {SynthesisStage::ColloquializeQueue, "ColloquializeQueue"},
    {SynthesisStage::Done, "Done"},
}};

SynthesisStage next_stage(SynthesisStage s) {
    return s == SynthesisStage::Done ? s : static_cast<SynthesisStage>(static_cast<int>(s) + 1);
}

}  // namespace

std::string_view to_string(Gender g) noexcept { return g == Gender::Male ? "male" : "female"; }

std::optional<Gender> parse_gender(std::string_view s) noexcept {
    if (s == "male") return Gender::Male;
    if (s == "female") return Gender::Female;
    return std::nullopt;
}

std::string_view to_string(SynthesisStage s) noexcept {
    for (const auto& [stage, name] : kStages)
        if (stage == s) return name;
    return "unknown";
}

std::optional<SynthesisStage> parse_stage(std::string_view s) noexcept {
    for (const auto& [stage, name] : kStages)
        if (name == s) return stage;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

SynthesisTemplates SynthesisTemplates::defaults() {
    SynthesisTemplates t;
    t.character_profile =
        "Please generate a {category} character of {gender} gender. Describe the character's identity "
        "(name, age, occupation), interests, viewpoints, experiences, achievements, social relationships, "
        "way of speaking and personality.";
    t.player_profile =
        "Here is a character profile:\n{character_profile}\n\nPlease generate the profile of a user who talks "
        "with this character, including the social relationship between the two.";
    t.topic =
        "Character profile:\n{character_profile}\n\nUser profile:\n{player_profile}\n\nPropose one {scene} topic "
        "for a conversation between them. Reply with the topic only.";
    t.dialogue =
        "Character profile:\n{character_profile}\n\nUser profile:\n{player_profile}\n\nTopic: {topic}\n\n"
        "Write a conversation of {n_turns} utterances. The character speaks first and the two alternate. "
        "Prefix character lines with \"C:\" and user lines with \"P:\".";
    return t;
}

std::vector<Violation> SynthesisTemplates::validate() const {
    std::vector<Violation> out;
    const auto check = [&](const std::string& field, const std::string& tmpl,
                           std::initializer_list<std::string_view> allowed,
                           std::initializer_list<std::string_view> required) {
        std::vector<std::string> names;
        try {
            names = template_placeholders(tmpl);
        } catch (const TemplateError& e) {
            out.push_back({field, e.what()});
            return;
        }
        for (const auto& n : names)
            if (std::find(allowed.begin(), allowed.end(), n) == allowed.end())
                out.push_back({field, "unknown placeholder {" + n + "}"});
        for (auto r : required)
            if (std::find(names.begin(), names.end(), r) == names.end())
                out.push_back({field, "missing placeholder {" + std::string(r) + "}"});
    };
    check("character_profile", character_profile, {"category", "gender"}, {"category", "gender"});
    check("player_profile", player_profile, {"category", "gender", "character_profile"}, {});
    check("topic", topic, {"category", "gender", "character_profile", "player_profile", "scene"}, {});
    check("dialogue", dialogue,
          {"category", "gender", "character_profile", "player_profile", "scene", "topic", "n_turns"}, {});
    return out;
}

// ---------------------------------------------------------------------------
// Colloquialization tasks
// ---------------------------------------------------------------------------

std::vector<Violation> validate_task(const ColloquializationTask& t) {
    std::vector<Violation> out;
    if (t.status != TaskStatus::Reworked) return out;
    for (std::size_t i = 0; i < t.turns.size(); ++i) {
        const auto field = "turns[" + std::to_string(i) + "]";
        const auto& r = t.turns[i];
        if (r.mode == TurnRework::Mode::Unset) out.push_back({field, "turn has neither rework nor keep mark"});
        if (r.mode == TurnRework::Mode::Rewrite && trim(r.text).empty())
            out.push_back({field, "rework text is empty"});
    }
    return out;
}

DialogueSession apply_rework(const DialogueSession& s, const ColloquializationTask& t) {
    if (t.status != TaskStatus::Reworked) throw StateError("task '" + t.id + "' is not reworked");
    if (t.turns.size() != s.turns.size())
        throw ValidationError(Violation{"turns", "rework covers " + std::to_string(t.turns.size()) + " of " +
                                                     std::to_string(s.turns.size()) + " turns"});
    if (auto v = validate_task(t); !v.empty()) throw ValidationError("incomplete rework", std::move(v));
    DialogueSession out = s;
    for (std::size_t i = 0; i < t.turns.size(); ++i)
        if (t.turns[i].mode == TurnRework::Mode::Rewrite) out.turns[i].text = t.turns[i].text;
    return out;
}

// ---------------------------------------------------------------------------
// Job persistence
// ---------------------------------------------------------------------------

std::string job_to_json(const SynthesisJob& job) {
    detail::json j;
    j["id"] = job.id;
    j["category"] = to_string(job.category);
    j["gender"] = to_string(job.gender);
    j["n_turns"] = job.n_turns;
    j["seed"] = job.seed;
    j["scene"] = to_string(job.scene);
    j["stage"] = to_string(job.stage);
    detail::json artifacts = detail::json::object();
    for (const auto& [stage, text] : job.artifacts) artifacts[std::string(to_string(stage))] = text;
    j["artifacts"] = std::move(artifacts);
    detail::json prompts = detail::json::object();
    for (const auto& [stage, text] : job.prompts) prompts[std::string(to_string(stage))] = text;
    j["prompts"] = std::move(prompts);
    j["last_error"] = job.last_error ? detail::json(*job.last_error) : detail::json(nullptr);
    return j.dump(2);
}

namespace {

template <typename T>
T enum_field(const detail::json& j, const char* key, std::optional<T> (*parse)(std::string_view) noexcept,
             std::optional<T> fallback = std::nullopt) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (fallback) return *fallback;
        throw ParseError(std::string("job: missing field '") + key + "'", 0);
    }
    const auto s = it->get<std::string>();
    const auto v = parse(s);
    if (!v) throw ParseError(std::string("job: bad ") + key + " '" + s + "'", 0);
    return *v;
}

std::map<SynthesisStage, std::string> stage_map(const detail::json& j, const char* key) {
    std::map<SynthesisStage, std::string> out;
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return out;
    for (auto e = it->begin(); e != it->end(); ++e) {
        const auto stage = parse_stage(e.key());
        if (!stage) throw ParseError("job: unknown stage '" + e.key() + "'", 0);
        out[*stage] = e.value().get<std::string>();
    }
    return out;
}

SynthesisJob job_from_value(const detail::json& j) {
    try {
        SynthesisJob job;
        job.id = detail::field_or<std::string>(j, "id", "");
        job.category = enum_field<CharacterCategory>(j, "category", &parse_category);
        job.gender = enum_field<Gender>(j, "gender", &parse_gender);
        job.n_turns = detail::field_or<int>(j, "n_turns", job.n_turns);
        job.seed = detail::field_or<std::uint64_t>(j, "seed", 0);
        job.scene = enum_field<SceneTopic>(j, "scene", &parse_topic, SceneTopic::Unrestricted);
        job.stage = enum_field<SynthesisStage>(j, "stage", &parse_stage, SynthesisStage::CharacterProfileGen);
        job.artifacts = stage_map(j, "artifacts");
        job.prompts = stage_map(j, "prompts");
        job.last_error = detail::opt_field<std::string>(j, "last_error");
        if (job.n_turns < 2) throw ValidationError(Violation{"n_turns", "n_turns must be at least 2"});
        return job;
    } catch (const detail::json::exception& e) {
        throw ParseError(std::string("job: ") + e.what(), 0);
    }
}

}  // namespace

SynthesisJob job_from_json(std::string_view json_text) { return job_from_value(detail::parse_json(json_text, "job")); }

JobStore::JobStore(std::string directory) : directory_(std::move(directory)) {
    std::error_code ec;
    std::filesystem::create_directories(directory_, ec);
    if (!std::filesystem::is_directory(directory_)) throw IoError("job directory '" + directory_ + "' is unusable");
}

void JobStore::save(const SynthesisJob& job) {
    std::lock_guard lock(mutex_);
    if (!directory_.empty()) {
        const auto path = (std::filesystem::path(directory_) / (job.id + ".json")).string();
        const auto tmp = path + ".tmp";
        detail::write_file(tmp, job_to_json(job) + "\n");
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec) throw IoError("cannot save job '" + job.id + "': " + ec.message());
    }
    jobs_[job.id] = job;
}

std::optional<SynthesisJob> JobStore::load(const std::string& id) const {
    std::lock_guard lock(mutex_);
    if (!directory_.empty()) {
        const auto path = (std::filesystem::path(directory_) / (id + ".json")).string();
        if (!std::filesystem::exists(path)) return std::nullopt;
        return job_from_json(detail::read_file(path));
    }
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Running a job
// ---------------------------------------------------------------------------

std::vector<Utterance> parse_dialogue_text(std::string_view text) {
    static constexpr std::array<std::pair<std::string_view, Speaker>, 10> kPrefixes{{
        {"Character:", Speaker::Character},
        {"Player:", Speaker::Player},
        {"User:", Speaker::Player},
        {"C:", Speaker::Character},
        {"P:", Speaker::Player},
        {"角色：", Speaker::Character},
        {"角色:", Speaker::Character},
        {"用户：", Speaker::Player},
        {"用户:", Speaker::Player},
        {"U:", Speaker::Player},
    }};
    std::vector<Utterance> out;
    for (auto raw : split_lines(text)) {
        const auto line = trim(raw);
        if (line.empty()) continue;
        bool matched = false;
        for (const auto& [prefix, speaker] : kPrefixes) {
            if (!starts_with(line, prefix)) continue;
            Utterance u;
            u.speaker = speaker;
            u.text = std::string(trim(line.substr(prefix.size())));
            out.push_back(std::move(u));
            matched = true;
            break;
        }
        if (!matched && !out.empty()) out.back().text = join({out.back().text, std::string(line)}, " ");
    }
    return out;
}

namespace {

using Values = std::map<std::string, std::string, std::less<>>;

Values stage_values(const SynthesisJob& job) {
    Values v{
        {"category", std::string(display_name(job.category))},
        {"gender", std::string(to_string(job.gender))},
        {"n_turns", std::to_string(job.n_turns)},
        {"scene", job.scene == SceneTopic::Unrestricted ? "everyday" : std::string(to_string(job.scene))},
    };
    const auto put = [&](const char* key, SynthesisStage s) {
        const auto it = job.artifacts.find(s);
        v[key] = it == job.artifacts.end() ? "" : it->second;
    };
    put("character_profile", SynthesisStage::CharacterProfileGen);
    put("player_profile", SynthesisStage::PlayerProfileGen);
    put("topic", SynthesisStage::TopicGen);
    return v;
}

const std::string& template_for(const SynthesisTemplates& t, SynthesisStage s) {
    switch (s) {
        case SynthesisStage::CharacterProfileGen: return t.character_profile;
        case SynthesisStage::PlayerProfileGen: return t.player_profile;
        case SynthesisStage::TopicGen: return t.topic;
        default: return t.dialogue;
    }
}

DialogueSession session_from_job(const SynthesisJob& job) {
    DialogueSession s;
    s.id = "synth-" + job.id;
    s.character_id = job.id + "-character";
    s.player_id = job.id + "-player";
    s.topic = job.scene;
    s.provenance = Provenance::Synthetic;
    const auto it = job.artifacts.find(SynthesisStage::DialogueGen);
    if (it == job.artifacts.end()) throw SynthesisError(SynthesisStage::DialogueGen, "no dialogue artifact");
    s.turns = merge_consecutive(parse_dialogue_text(it->second));
    if (s.turns.empty())
        throw SynthesisError(SynthesisStage::DialogueGen, "model output contains no prefixed dialogue lines");
    if (auto v = validate_session(s); !v.empty())
        throw SynthesisError(SynthesisStage::DialogueGen, "generated dialogue is invalid: " + describe(v));
    s.status = SessionStatus::Closed;
    return s;
}

ColloquializationTask task_for(const SynthesisJob& job, const DialogueSession& s) {
    ColloquializationTask t;
    t.id = "colloq-" + job.id;
    t.session_id = s.id;
    t.turns.resize(s.turns.size());
    return t;
}

}  // namespace

SynthesisResult run_synthesis(SynthesisJob& job, Gateway& gateway, std::string_view provider,
                              const SynthesisTemplates& templates, JobStore& store) {
    if (trim(job.id).empty()) throw ValidationError(Violation{"id", "job id empty"});
    if (auto v = templates.validate(); !v.empty()) throw ValidationError("invalid synthesis templates", std::move(v));

    while (job.stage < SynthesisStage::ColloquializeQueue) {
        const SynthesisStage stage = job.stage;
        const std::string prompt = render_template(template_for(templates, stage), stage_values(job));
        job.prompts[stage] = prompt;
        try {
            ChatRequest req;
            req.system_prompt = prompt;
            const auto reply = gateway.generate_reply(provider, req);
            job.artifacts[stage] = reply.text;
            if (stage == SynthesisStage::DialogueGen) session_from_job(job);
        } catch (const std::exception& e) {
            job.artifacts.erase(stage);
            job.last_error = e.what();
            store.save(job);
            if (const auto* se = dynamic_cast<const SynthesisError*>(&e)) throw SynthesisError(*se);
            throw SynthesisError(stage, std::string(to_string(stage)) + " failed: " + e.what());
        }
        job.last_error.reset();
        job.stage = next_stage(stage);
        store.save(job);
    }

    SynthesisResult r;
    r.session = session_from_job(job);
    r.task = task_for(job, r.session);
    r.character_profile_text = job.artifacts.at(SynthesisStage::CharacterProfileGen);
    r.player_profile_text = job.artifacts.at(SynthesisStage::PlayerProfileGen);
    r.topic_text = job.artifacts.at(SynthesisStage::TopicGen);
    if (job.stage == SynthesisStage::ColloquializeQueue) {
        job.stage = SynthesisStage::Done;
        store.save(job);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Job planning
// ---------------------------------------------------------------------------

std::vector<JobPlanEntry> balanced_plan(std::size_t n_jobs, std::uint64_t seed) {
    DeterministicRng rng(seed);
    std::vector<CharacterCategory> cats(std::begin(kAllCategories), std::end(kAllCategories));
    std::vector<Gender> genders{Gender::Male, Gender::Female};
    rng.shuffle(cats);
    rng.shuffle(genders);
    std::vector<JobPlanEntry> plan;
    plan.reserve(n_jobs);
    for (std::size_t i = 0; i < n_jobs; ++i) {
        // The gender offset flips every full pass over the categories so each
        // category alternates genders across passes.
        plan.push_back({cats[i % cats.size()], genders[(i + i / cats.size()) % genders.size()]});
    }
    return plan;
}

std::vector<SynthesisJob> parse_job_specs(std::string_view text) {
    std::vector<detail::json> values;
    const auto first = trim(text);
    if (!first.empty() && first.front() == '[') {
        const auto arr = detail::parse_json(text, "job specs");
        for (const auto& v : arr) values.push_back(v);
    } else {
        std::size_t line_no = 0;
        for (auto line : split_lines(text)) {
            ++line_no;
            if (trim(line).empty()) continue;
            try {
                values.push_back(detail::parse_json(line, "job spec"));
            } catch (const ParseError& e) {
                throw ParseError(std::string("line ") + std::to_string(line_no) + ": " + e.what(), line_no);
            }
        }
    }
    std::vector<SynthesisJob> jobs;
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto job = job_from_value(values[i]);
        if (job.id.empty()) {
            std::string n = std::to_string(i + 1);
            job.id = "job-" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
        }
        job.stage = SynthesisStage::CharacterProfileGen;
        job.artifacts.clear();
        job.prompts.clear();
        job.last_error.reset();
        for (const auto& prev : jobs)
            if (prev.id == job.id) throw ValidationError(Violation{"id", "duplicate job id '" + job.id + "'"});
        jobs.push_back(std::move(job));
    }
    return jobs;
}

std::vector<SynthesisJob> load_job_specs(const std::string& path) { return parse_job_specs(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Queues
// ---------------------------------------------------------------------------

void WorkQueue::add(std::string id, std::string kind) {
    std::lock_guard lock(mutex_);
    if (items_.count(id)) throw ConflictError("work item '" + id + "' already queued");
    order_.push_back(id);
    items_[id] = WorkItem{id, std::move(kind), WorkState::Pending, {}};
}

std::vector<WorkItem> WorkQueue::pending(std::string_view kind) const {
    std::lock_guard lock(mutex_);
    std::vector<WorkItem> out;
    for (const auto& id : order_) {
        const auto& item = items_.at(id);
        if (item.state == WorkState::Pending && (kind.empty() || item.kind == kind)) out.push_back(item);
    }
    return out;
}

WorkItem WorkQueue::claim(const std::string& id, const std::string& worker) {
    std::lock_guard lock(mutex_);
    const auto it = items_.find(id);
    if (it == items_.end()) throw NotFoundError("work item '" + id + "' not found");
    if (it->second.state != WorkState::Pending)
        throw ConflictError("work item '" + id + "' is already " +
                            (it->second.state == WorkState::Claimed ? "claimed by " + it->second.claimed_by
                                                                    : std::string("done")));
    it->second.state = WorkState::Claimed;
    it->second.claimed_by = worker;
    return it->second;
}

WorkItem WorkQueue::complete(const std::string& id, const std::string& worker) {
    std::lock_guard lock(mutex_);
    const auto it = items_.find(id);
    if (it == items_.end()) throw NotFoundError("work item '" + id + "' not found");
    if (it->second.state != WorkState::Claimed || it->second.claimed_by != worker)
        throw ConflictError("work item '" + id + "' is not claimed by " + worker);
    it->second.state = WorkState::Done;
    return it->second;
}

WorkItem WorkQueue::release(const std::string& id, const std::string& worker) {
    std::lock_guard lock(mutex_);
    const auto it = items_.find(id);
    if (it == items_.end()) throw NotFoundError("work item '" + id + "' not found");
    if (it->second.state != WorkState::Claimed || it->second.claimed_by != worker)
        throw ConflictError("work item '" + id + "' is not claimed by " + worker);
    it->second.state = WorkState::Pending;
    it->second.claimed_by.clear();
    return it->second;
}

std::optional<WorkItem> WorkQueue::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = items_.find(id);
    if (it == items_.end()) return std::nullopt;
    return it->second;
}

void ColloquializationQueue::enqueue(ColloquializationTask task, DialogueSession session) {
    if (task.session_id != session.id) throw ValidationError(Violation{"session_id", "task and session differ"});
    task.status = TaskStatus::Pending;
    task.turns.assign(session.turns.size(), TurnRework{});
    std::lock_guard lock(mutex_);
    queue_.add(task.id, "colloquialization");
    sessions_[task.id] = std::move(session);
    tasks_[task.id] = std::move(task);
}

std::vector<ColloquializationTask> ColloquializationQueue::pending() const {
    std::lock_guard lock(mutex_);
    std::vector<ColloquializationTask> out;
    for (const auto& item : queue_.pending()) out.push_back(tasks_.at(item.id));
    return out;
}

ColloquializationTask ColloquializationQueue::claim(const std::string& task_id, const std::string& worker) {
    std::lock_guard lock(mutex_);
    queue_.claim(task_id, worker);
    return tasks_.at(task_id);
}

DialogueSession ColloquializationQueue::submit(const std::string& task_id, const std::string& worker,
                                               std::vector<TurnRework> turns) {
    std::lock_guard lock(mutex_);
    const auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw NotFoundError("task '" + task_id + "' not found");
    const auto item = queue_.find(task_id);
    if (!item || item->state != WorkState::Claimed || item->claimed_by != worker)
        throw ConflictError("task '" + task_id + "' is not claimed by " + worker);

    ColloquializationTask next = it->second;
    next.turns = std::move(turns);
    next.status = TaskStatus::Reworked;
    const auto reworked = apply_rework(sessions_.at(task_id), next);
    queue_.complete(task_id, worker);
    it->second = std::move(next);
    return reworked;
}

ColloquializationTask ColloquializationQueue::task(const std::string& task_id) const {
    std::lock_guard lock(mutex_);
    const auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw NotFoundError("task '" + task_id + "' not found");
    return it->second;
}

DialogueSession ColloquializationQueue::session(const std::string& task_id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(task_id);
    if (it == sessions_.end()) throw NotFoundError("task '" + task_id + "' not found");
    const auto& t = tasks_.at(task_id);
    return t.status == TaskStatus::Reworked ? apply_rework(it->second, t) : it->second;
}

}  // namespace chardial
