#pragma once

#include "chardial/dialogue.hpp"
#include "chardial/error.hpp"
#include "chardial/gateway.hpp"
#include "chardial/profile.hpp"

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chardial {

enum class Gender { Male, Female };
std::string_view to_string(Gender g) noexcept;
std::optional<Gender> parse_gender(std::string_view s) noexcept;

enum class SynthesisStage { CharacterProfileGen, PlayerProfileGen, TopicGen, DialogueGen, ColloquializeQueue, Done };
std::string_view to_string(SynthesisStage s) noexcept;
std::optional<SynthesisStage> parse_stage(std::string_view s) noexcept;

struct SynthesisJob {
    std::string id;
    CharacterCategory category = CharacterCategory::DailyLife;
    Gender gender = Gender::Female;
    int n_turns = 10;
    std::uint64_t seed = 0;
    SceneTopic scene = SceneTopic::Unrestricted;
    SynthesisStage stage = SynthesisStage::CharacterProfileGen;
    /// Model output of each completed generation stage.
    std::map<SynthesisStage, std::string> artifacts;
    /// Prompt issued at each generation stage (kept for audit).
    std::map<SynthesisStage, std::string> prompts;
    std::optional<std::string> last_error;

    bool operator==(const SynthesisJob&) const = default;
};

/// Prompt templates with `{placeholder}` fields. The character-profile template
/// must reference {category} and {gender}.
struct SynthesisTemplates {
    std::string character_profile;
    std::string player_profile;
    std::string topic;
    std::string dialogue;

    static SynthesisTemplates defaults();
    std::vector<Violation> validate() const;
};

class SynthesisError : public Error {
  public:
    SynthesisError(SynthesisStage stage, const std::string& what) : Error(what), stage_(stage) {}
    SynthesisStage stage() const noexcept { return stage_; }

  private:
    SynthesisStage stage_;
};

enum class TaskStatus { Pending, Reworked };

/// Per-turn outcome of a colloquialization pass: keep the turn or replace its text.
struct TurnRework {
    enum class Mode { Unset, Keep, Rewrite };
    Mode mode = Mode::Unset;
    std::string text;

    bool operator==(const TurnRework&) const = default;
};

struct ColloquializationTask {
    std::string id;
    std::string session_id;
    TaskStatus status = TaskStatus::Pending;
    std::vector<TurnRework> turns;
    /// Optional machine draft per turn; never applied automatically.
    std::vector<std::string> drafts;
    /// Free-form low-quality markers from inspection.
    std::vector<std::string> quality_flags;

    bool operator==(const ColloquializationTask&) const = default;
};

std::vector<Violation> validate_task(const ColloquializationTask& t);
/// Session with every Rewrite applied. The task must be Reworked.
DialogueSession apply_rework(const DialogueSession& s, const ColloquializationTask& t);

/// Persistence for job state between stages. The default keeps jobs in memory;
/// with a directory each job is a JSON file `<dir>/<id>.json`.
class JobStore {
  public:
    JobStore() = default;
    explicit JobStore(std::string directory);

    void save(const SynthesisJob& job);
    std::optional<SynthesisJob> load(const std::string& id) const;

  private:
    std::string directory_;
    mutable std::mutex mutex_;
    std::map<std::string, SynthesisJob> jobs_;
};

std::string job_to_json(const SynthesisJob& job);
SynthesisJob job_from_json(std::string_view json_text);

struct SynthesisResult {
    DialogueSession session;
    ColloquializationTask task;
    std::string character_profile_text;
    std::string player_profile_text;
    std::string topic_text;
};

/// Runs the job from its current stage to Done, saving after every stage. On
/// failure the job stays at the failing stage (artifacts of earlier stages kept)
/// and SynthesisError is thrown; calling again resumes from there.
SynthesisResult run_synthesis(SynthesisJob& job, Gateway& gateway, std::string_view provider,
                              const SynthesisTemplates& templates, JobStore& store);

/// Parses "C: ..." / "P: ..." style dialogue text (also "Character:", "Player:",
/// "角色：", "用户："). Unprefixed lines continue the previous utterance.
std::vector<Utterance> parse_dialogue_text(std::string_view text);

/// Balanced (category x gender) job plan: seeded category and gender orders,
/// then round-robin so that any prefix keeps both marginals within one.
struct JobPlanEntry {
    CharacterCategory category;
    Gender gender;
};
std::vector<JobPlanEntry> balanced_plan(std::size_t n_jobs, std::uint64_t seed);

/// Job spec file: JSON array or JSON lines of {"category","gender","n_turns","seed"[,"id","scene"]}.
std::vector<SynthesisJob> parse_job_specs(std::string_view text);
std::vector<SynthesisJob> load_job_specs(const std::string& path);

// ---------------------------------------------------------------------------
// Work queue
// ---------------------------------------------------------------------------

enum class WorkState { Pending, Claimed, Done };

struct WorkItem {
    std::string id;
    std::string kind;
    WorkState state = WorkState::Pending;
    std::string claimed_by;
};

/// Claim/complete queue. Each transition is atomic; a second claim of the same
/// item raises ConflictError.
class WorkQueue {
  public:
    void add(std::string id, std::string kind);
    std::vector<WorkItem> pending(std::string_view kind = {}) const;
    WorkItem claim(const std::string& id, const std::string& worker);
    WorkItem complete(const std::string& id, const std::string& worker);
    /// Returns a claimed item to Pending (reviewer gave up).
    WorkItem release(const std::string& id, const std::string& worker);
    std::optional<WorkItem> find(const std::string& id) const;

  private:
    mutable std::mutex mutex_;
    std::map<std::string, WorkItem> items_;
    std::vector<std::string> order_;
};

/// Colloquialization tasks over a WorkQueue.
class ColloquializationQueue {
  public:
    void enqueue(ColloquializationTask task, DialogueSession session);
    std::vector<ColloquializationTask> pending() const;
    ColloquializationTask claim(const std::string& task_id, const std::string& worker);
    /// Validates coverage of every turn, marks the task Reworked and returns the reworked session.
    DialogueSession submit(const std::string& task_id, const std::string& worker, std::vector<TurnRework> turns);
    ColloquializationTask task(const std::string& task_id) const;
    DialogueSession session(const std::string& task_id) const;

  private:
    WorkQueue queue_;
    mutable std::mutex mutex_;
    std::map<std::string, ColloquializationTask> tasks_;
    std::map<std::string, DialogueSession> sessions_;
};

}  // namespace chardial
