#include "cli.hpp"

#include "chardial/dialogue.hpp"
#include "chardial/eval.hpp"
#include "chardial/gateway.hpp"
#include "chardial/literary.hpp"
#include "chardial/profile.hpp"
#include "chardial/report.hpp"
#include "chardial/rng.hpp"
#include "chardial/script.hpp"
#include "chardial/service.hpp"
#include "chardial/sft.hpp"
#include "chardial/synthesis.hpp"
#include "chardial/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <pthread.h>

namespace chardial::cli {

namespace {

using json = nlohmann::ordered_json;

struct Globals {
    std::uint64_t seed = 0;
    std::string format = "table";
    int jobs = 1;

    OutputFormat output() const { return format == "csv" ? OutputFormat::Csv : OutputFormat::Table; }
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    if (!out) throw IoError("write to '" + path + "' failed");
}

void require_file(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw IoError("no such file: '" + path + "'");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string job_id(std::size_t i) {
    std::string n = std::to_string(i + 1);
    return "job-" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

/// Gateway over a provider config file, optionally recording to or replaying from a cassette.
struct GatewaySetup {
    SystemClock clock;
    Gateway gateway{clock};
    std::shared_ptr<Cassette> cassette;

    GatewaySetup(const std::string& providers, const std::string& cassette_path, const std::string& mode) {
        require_file(providers);
        if (!cassette_path.empty()) {
            const auto m = mode == "record" ? CassetteMode::Record : CassetteMode::Replay;
            if (m == CassetteMode::Replay) require_file(cassette_path);
            cassette = std::make_shared<Cassette>(m, cassette_path);
        }
        populate_gateway(gateway, load_provider_configs(providers), std::make_shared<HttpTransport>(), cassette);
    }
};

std::string task_to_json_line(const ColloquializationTask& t) {
    json j;
    j["id"] = t.id;
    j["session_id"] = t.session_id;
    j["status"] = t.status == TaskStatus::Pending ? "Pending" : "Reworked";
    auto turns = json::array();
    for (const auto& r : t.turns) {
        switch (r.mode) {
            case TurnRework::Mode::Unset: turns.push_back(json{{"mode", "unset"}}); break;
            case TurnRework::Mode::Keep: turns.push_back(json{{"mode", "keep"}}); break;
            case TurnRework::Mode::Rewrite: turns.push_back(json{{"mode", "rewrite"}, {"text", r.text}}); break;
        }
    }
    j["turns"] = std::move(turns);
    j["drafts"] = t.drafts;
    j["quality_flags"] = t.quality_flags;
    return j.dump();
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

void add_stats(CLI::App& app, const Globals& g, std::ostream& out, std::function<void()>& action) {
    auto* cmd = app.add_subcommand("stats", "Corpus statistics for a corpus JSONL file");
    auto path = std::make_shared<std::string>();
    auto lenient = std::make_shared<bool>(false);
    cmd->add_option("corpus", *path, "Corpus file (one session per line)")->required();
    cmd->add_flag("--lenient", *lenient, "Count sessions that fail validation instead of rejecting the corpus");
    cmd->callback([&, path, lenient] {
        action = [&, path, lenient] {
            require_file(*path);
            const auto corpus = load_corpus_file(*path);
            StatsOptions opts;
            opts.require_valid = !*lenient;
            out << stats_table(compute_corpus_stats(corpus, opts)).render(g.output());
        };
    });
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

void add_synth(CLI::App& app, const Globals& g, std::ostream& out, std::ostream& err, std::function<void()>& action,
               int& exit_code) {
    auto* cmd = app.add_subcommand("synth", "Run the dialogue synthesis pipeline");
    struct Opts {
        std::string providers, provider, spec, store, out_path, tasks, cassette, cassette_mode = "replay";
        std::size_t count = 0;
        int turns = 10;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--providers", o->providers, "Provider config file")->required();
    cmd->add_option("--provider", o->provider, "Provider used for every stage")->required();
    auto* spec = cmd->add_option("--spec", o->spec, "Job spec file (JSON array or JSON lines)");
    auto* count = cmd->add_option("--count", o->count, "Plan N jobs balanced over category and gender");
    spec->excludes(count);
    cmd->add_option("--turns", o->turns, "Turns per planned dialogue")->check(CLI::Range(2, 1000));
    cmd->add_option("--store", o->store, "Job state directory (enables resume)")->required();
    cmd->add_option("--out", o->out_path, "Output corpus file")->required();
    cmd->add_option("--tasks", o->tasks, "Write colloquialization tasks (JSON lines)");
    cmd->add_option("--cassette", o->cassette, "Record/replay cassette");
    cmd->add_option("--cassette-mode", o->cassette_mode, "record or replay")
        ->check(CLI::IsMember({"record", "replay"}));
    cmd->callback([&, o] {
        action = [&, o] {
            if (o->spec.empty() && o->count == 0) throw ValidationError(Violation{"--spec", "give --spec or --count"});
            std::vector<SynthesisJob> jobs;
            if (!o->spec.empty()) {
                require_file(o->spec);
                jobs = load_job_specs(o->spec);
            } else {
                const auto plan = balanced_plan(o->count, g.seed);
                const DeterministicRng root(g.seed);
                for (std::size_t i = 0; i < plan.size(); ++i) {
                    SynthesisJob j;
                    j.id = job_id(i);
                    j.category = plan[i].category;
                    j.gender = plan[i].gender;
                    j.n_turns = o->turns;
                    j.seed = root.derive(i + 1).seed();
                    jobs.push_back(std::move(j));
                }
            }
            if (!std::filesystem::is_directory(o->store)) std::filesystem::create_directories(o->store);
            GatewaySetup setup(o->providers, o->cassette, o->cassette_mode);
            if (!setup.gateway.has_provider(o->provider))
                throw ValidationError(Violation{"--provider", "unknown provider '" + o->provider + "'"});
            JobStore store(o->store);
            const auto templates = SynthesisTemplates::defaults();

            std::vector<std::optional<SynthesisResult>> results(jobs.size());
            std::vector<std::string> errors(jobs.size());
            std::atomic<std::size_t> next{0};
            const auto worker = [&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++) {
                    auto& job = jobs[i];
                    if (auto saved = store.load(job.id)) job = *saved;  // resume
                    try {
                        results[i] = run_synthesis(job, setup.gateway, o->provider, templates, store);
                    } catch (const std::exception& e) {
                        errors[i] = e.what();
                    }
                }
            };
            const int n_threads = std::max(1, std::min<int>(g.jobs, static_cast<int>(jobs.size())));
            std::vector<std::thread> threads;
            for (int t = 1; t < n_threads; ++t) threads.emplace_back(worker);
            worker();
            for (auto& t : threads) t.join();

            Corpus corpus;
            std::string tasks;
            TextTable table;
            table.header = {"job", "category", "gender", "stage", "turns", "status"};
            std::size_t failed = 0;
            for (std::size_t i = 0; i < jobs.size(); ++i) {
                const auto& job = jobs[i];
                std::string status = "ok";
                std::string turns = "0";
                if (results[i]) {
                    corpus.sessions.push_back(results[i]->session);
                    corpus.profile_texts[results[i]->session.character_id] = results[i]->character_profile_text;
                    tasks += task_to_json_line(results[i]->task) + "\n";
                    turns = std::to_string(results[i]->session.turns.size());
                } else {
                    ++failed;
                    status = "failed";
                    err << job.id << ": " << errors[i] << "\n";
                }
                table.rows.push_back({job.id, std::string(to_string(job.category)), std::string(to_string(job.gender)),
                                      std::string(to_string(job.stage)), turns, status});
            }
            save_corpus_file(corpus, o->out_path);
            if (!o->tasks.empty()) write_text(o->tasks, tasks);
            out << table.render(g.output());
            if (failed) exit_code = kExitProvider;
        };
    });
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

void add_ingest(CLI::App& app, const Globals& g, std::ostream& out, std::function<void()>& action, int& exit_code) {
    auto* cmd = app.add_subcommand("ingest", "Ingest literary dialogue records");
    struct Opts {
        std::string input, out_path;
        bool no_merge = false, reject_non_verbal = false;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("input", o->input, "Literary records file")->required();
    cmd->add_option("--out", o->out_path, "Write accepted sessions to this corpus file");
    cmd->add_flag("--no-merge", o->no_merge, "Report consecutive same-speaker lines instead of merging them");
    cmd->add_flag("--reject-non-verbal", o->reject_non_verbal, "Reject records with non-verbal-only turns");
    cmd->callback([&, o] {
        action = [&, o] {
            require_file(o->input);
            const auto records = parse_literary(read_text(o->input));
            IngestOptions opts;
            opts.merge_statements = !o->no_merge;
            opts.non_verbal = o->reject_non_verbal ? IngestOptions::NonVerbal::Reject : IngestOptions::NonVerbal::Flag;
            Corpus corpus;
            TextTable table;
            table.header = {"record", "title", "status", "turns", "notes"};
            std::size_t rejected = 0;
            for (std::size_t i = 0; i < records.size(); ++i) {
                const auto r = ingest_literary(records[i], opts);
                std::vector<std::string> notes;
                for (const auto& v : r.violations) notes.push_back(v.rule);
                for (const auto& f : r.flags) notes.push_back("flag: " + f.rule);
                std::string turns = "0";
                if (r.accepted()) {
                    corpus.sessions.push_back(*r.session);
                    corpus.profile_texts[r.session->character_id] = r.character->summary;
                    turns = std::to_string(r.session->turns.size());
                } else {
                    ++rejected;
                }
                table.rows.push_back({std::to_string(i + 1), records[i].source_title,
                                      r.accepted() ? "accepted" : "rejected", turns, join(notes, "; ")});
            }
            if (!o->out_path.empty()) save_corpus_file(corpus, o->out_path);
            out << table.render(g.output());
            if (rejected) exit_code = kExitValidation;
        };
    });
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

void add_export(CLI::App& app, const Globals& g, std::ostream& out, std::function<void()>& action) {
    auto* cmd = app.add_subcommand("export", "Build the fine-tuning corpus (one record per session and prompt variant)");
    struct Opts {
        std::string corpus, profiles, out_path, template_id = "canonical", augment, style, providers, provider;
        std::string cassette, cassette_mode = "replay";
        bool player_targets = false;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--corpus", o->corpus, "Corpus file")->required();
    cmd->add_option("--profiles", o->profiles, "Character profile document")->required();
    cmd->add_option("--out", o->out_path, "Output JSONL; a .manifest.json is written beside it")->required();
    cmd->add_option("--template", o->template_id, "Verbalization template (canonical, canonical-zh)");
    cmd->add_option("--augment", o->augment, "Extra variants: summarized,paraphrased,stylized");
    cmd->add_option("--style", o->style, "Target style for stylized variants");
    cmd->add_option("--providers", o->providers, "Provider config (needed with --augment)");
    cmd->add_option("--provider", o->provider, "Provider used for augmentation");
    cmd->add_option("--cassette", o->cassette, "Record/replay cassette for augmentation calls");
    cmd->add_option("--cassette-mode", o->cassette_mode, "record or replay")
        ->check(CLI::IsMember({"record", "replay"}));
    cmd->add_flag("--include-player-targets", o->player_targets, "Also mark player turns as training targets");
    cmd->callback([&, o] {
        action = [&, o] {
            require_file(o->corpus);
            require_file(o->profiles);
            const auto corpus = load_corpus_file(o->corpus);
            const auto profiles = load_profiles_file(o->profiles);
            const auto library = TemplateLibrary::builtin();
            if (!library.contains(o->template_id))
                throw ValidationError(Violation{"--template", "unknown template '" + o->template_id + "'"});

            std::vector<VariantKind> kinds;
            for (const auto& k : split_list(o->augment)) {
                const auto kind = parse_variant_kind(k);
                if (!kind || *kind == VariantKind::Canonical)
                    throw ValidationError(Violation{"--augment", "unknown augmentation '" + k + "'"});
                kinds.push_back(*kind);
            }
            std::unique_ptr<GatewaySetup> setup;
            std::unique_ptr<GatewayTransformer> transformer;
            if (!kinds.empty()) {
                if (o->providers.empty() || o->provider.empty())
                    throw ValidationError(Violation{"--provider", "--augment needs --providers and --provider"});
                setup = std::make_unique<GatewaySetup>(o->providers, o->cassette, o->cassette_mode);
                transformer = std::make_unique<GatewayTransformer>(setup->gateway, o->provider);
            }

            VariantStore store;
            for (const auto& p : profiles) {
                const auto canonical = store.add(verbalize_profile(p, o->template_id, library));
                for (auto kind : kinds) augment_prompt(canonical, kind, *transformer, store, o->style);
            }
            TrainingOptions opts;
            opts.include_player_targets = o->player_targets;
            std::vector<TrainingRecord> records;
            for (const auto& s : corpus.sessions) {
                const auto variants = store.list(s.character_id);
                if (variants.empty())
                    throw ValidationError(Violation{"session " + s.id, "no profile for character '" + s.character_id + "'"});
                auto built = build_training_records(s, variants, opts);
                records.insert(records.end(), built.begin(), built.end());
            }
            const auto m = export_corpus(records, o->out_path);
            TextTable t;
            t.header = {"metric", "value"};
            t.rows = {{"sessions", std::to_string(corpus.sessions.size())},
                      {"variants", std::to_string(store.size())},
                      {"records_in", std::to_string(m.records_in)},
                      {"records_written", std::to_string(m.records_written)},
                      {"duplicates_removed", std::to_string(m.duplicates_removed)},
                      {"bytes", std::to_string(m.bytes)},
                      {"sha256", m.sha256}};
            out << t.render(g.output());
        };
    });
}

// ---------------------------------------------------------------------------
// eval-report
// ---------------------------------------------------------------------------

void add_eval_report(CLI::App& app, const Globals& g, std::ostream& out, std::function<void()>& action) {
    auto* cmd = app.add_subcommand("eval-report", "Aggregate evaluation logs into report tables");
    struct Opts {
        std::string pairwise, pointwise, finegrained, lengths, focal, by = "overall", dimension;
        int decimals = 0;
        bool series = false, no_min_turns = false, exclude_directions = false;
    };
    auto o = std::make_shared<Opts>();
    auto* pw = cmd->add_option("--pairwise", o->pairwise, "Pairwise choice log");
    auto* pt = cmd->add_option("--pointwise", o->pointwise, "Pointwise rating log");
    auto* fg = cmd->add_option("--finegrained", o->finegrained, "Fine-grained tag log");
    auto* ln = cmd->add_option("--lengths", o->lengths, "Pairwise choice log for response-length analysis");
    for (auto* a : {pw, pt, fg, ln})
        for (auto* b : {pw, pt, fg, ln})
            if (a != b) a->excludes(b);
    cmd->add_option("--focal", o->focal, "Focal model (default: first model id in sort order)");
    cmd->add_option("--by", o->by, "Grouping keys, comma separated: category, topic, interval, overall");
    cmd->add_option("--decimals", o->decimals, "Percent decimals (0 or 1)")->check(CLI::IsMember({0, 1}));
    cmd->add_option("--dimension", o->dimension, "Per-dimension verdicts: Consistency, HumanLikeness, Engagement");
    cmd->add_flag("--series", o->series, "Advantage per turn interval");
    cmd->add_flag("--no-min-turns", o->no_min_turns, "Accept ratings of sessions shorter than 20 turns");
    cmd->add_flag("--exclude-stage-directions", o->exclude_directions,
                  "Do not count parenthesized stage directions in response length");
    cmd->callback([&, o] {
        action = [&, o] {
            const auto focal_of = [&](const std::vector<PairwiseChoice>& choices) {
                if (!o->focal.empty()) return o->focal;
                std::set<std::string> models;
                for (const auto& c : choices) {
                    models.insert(c.a.model);
                    models.insert(c.b.model);
                }
                if (models.empty()) throw ValidationError(Violation{"log", "no choices"});
                return *models.begin();
            };
            if (!o->pairwise.empty()) {
                require_file(o->pairwise);
                const auto choices = load_choice_log(o->pairwise);
                const auto focal = focal_of(choices);
                std::optional<PairwiseDimension> dim;
                if (!o->dimension.empty()) {
                    dim = parse_pairwise_dimension(o->dimension);
                    if (!dim) throw ValidationError(Violation{"--dimension", "unknown dimension '" + o->dimension + "'"});
                }
                if (o->series) {
                    out << advantage_series_table(choices, focal, dim, o->decimals).render(g.output());
                    return;
                }
                std::vector<GroupKey> keys;
                for (const auto& k : split_list(o->by)) {
                    const auto key = parse_group_key(k);
                    if (!key) throw ValidationError(Violation{"--by", "unknown grouping '" + k + "'"});
                    keys.push_back(*key);
                }
                out << pairwise_table(aggregate_pairwise(choices, focal, keys, dim), o->decimals).render(g.output());
            } else if (!o->pointwise.empty()) {
                require_file(o->pointwise);
                out << pointwise_table(aggregate_pointwise(load_rating_log(o->pointwise), !o->no_min_turns))
                           .render(g.output());
            } else if (!o->finegrained.empty()) {
                require_file(o->finegrained);
                out << finegrained_table(aggregate_finegrained(load_tag_log(o->finegrained))).render(g.output());
            } else if (!o->lengths.empty()) {
                require_file(o->lengths);
                const auto choices = load_choice_log(o->lengths);
                LengthOptions opts;
                opts.count_stage_directions = !o->exclude_directions;
                const auto report = length_analysis(choices, focal_of(choices), opts);
                out << length_share_table(report, o->decimals).render(g.output());
                out << "\n";
                out << length_preference_table(report, o->decimals).render(g.output());
            } else {
                throw ValidationError(Violation{"log", "give one of --pairwise, --pointwise, --finegrained, --lengths"});
            }
        };
    });
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

void add_replay(CLI::App& app, const Globals& g, std::ostream& out, std::function<void()>& action, int& exit_code) {
    auto* cmd = app.add_subcommand("replay", "Re-run a scripted session from a cassette, or rebuild service state");
    struct Opts {
        std::string cassette, session, providers, out_path, choices, expect, events;
        bool record = false;
    };
    auto o = std::make_shared<Opts>();
    auto* cas = cmd->add_option("--cassette", o->cassette, "Cassette file");
    auto* ses = cmd->add_option("--session", o->session, "Session script (JSON)");
    cmd->add_option("--providers", o->providers, "Provider config (request defaults feed the cassette key)");
    cmd->add_flag("--record", o->record, "Call the providers and record into the cassette instead of replaying");
    cmd->add_option("--out", o->out_path, "Write the transcript here instead of stdout");
    cmd->add_option("--choices", o->choices, "Write the pairwise choice log here");
    cmd->add_option("--expect", o->expect, "Compare the transcript byte-for-byte with this file");
    auto* ev = cmd->add_option("--events", o->events, "Service storage directory to replay");
    ev->excludes(cas)->excludes(ses);
    cmd->callback([&, o] {
        action = [&, o] {
            if (!o->events.empty()) {
                if (!std::filesystem::is_directory(o->events)) throw IoError("no such directory: '" + o->events + "'");
                const auto log = (std::filesystem::path(o->events) / "events.jsonl").string();
                require_file(log);
                ManualClock clock;
                Gateway gateway(clock);
                ServiceConfig cfg;
                cfg.storage_dir = o->events;
                cfg.seed = g.seed;
                AnnotationService service(cfg, gateway, clock);
                out << service.snapshot() << "\n";
                return;
            }
            if (o->session.empty() || o->cassette.empty() || o->providers.empty())
                throw ValidationError(Violation{"replay", "give --events, or --cassette, --session and --providers"});
            require_file(o->session);
            const auto script = load_session_script(o->session);
            GatewaySetup setup(o->providers, o->cassette, o->record ? "record" : "replay");
            const auto run = run_session_script(script, setup.gateway);
            const auto transcript = session_to_json_line(run.transcript) + "\n";
            if (!o->choices.empty()) write_text(o->choices, write_choice_log(run.choices));
            if (o->out_path.empty()) {
                out << transcript;
            } else {
                write_text(o->out_path, transcript);
            }
            if (!o->expect.empty()) {
                require_file(o->expect);
                if (read_text(o->expect) != transcript) {
                    exit_code = kExitValidation;
                    throw ValidationError(Violation{"--expect", "transcript differs from " + o->expect});
                }
            }
        };
    });
}

// ---------------------------------------------------------------------------
// serve
// ---------------------------------------------------------------------------

void add_serve(CLI::App& app, const Globals& g, std::ostream& out, std::function<void()>& action) {
    auto* cmd = app.add_subcommand("serve", "Run the annotation HTTP service");
    struct Opts {
        std::string config;
        std::optional<int> port;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--config", o->config, "Service config file")->required();
    cmd->add_option("--port", o->port, "Override the configured port (0 picks a free port)");
    auto* seed_opt = app.get_option("--seed");
    cmd->callback([&, o, seed_opt] {
        action = [&, o, seed_opt] {
            require_file(o->config);
            auto cfg = load_service_config(o->config);
            if (o->port) cfg.port = *o->port;
            if (seed_opt->count()) cfg.seed = g.seed;
            SystemClock clock;
            Gateway gateway(clock);
            std::shared_ptr<Cassette> cassette;
            if (cfg.cassette_path) {
                if (cfg.cassette_mode == CassetteMode::Replay) require_file(*cfg.cassette_path);
                cassette = std::make_shared<Cassette>(cfg.cassette_mode, *cfg.cassette_path);
            }
            if (!cfg.providers_path.empty()) {
                require_file(cfg.providers_path);
                populate_gateway(gateway, load_provider_configs(cfg.providers_path), std::make_shared<HttpTransport>(),
                                 cassette);
            }
            AnnotationService service(cfg, gateway, clock);

            sigset_t signals;
            sigemptyset(&signals);
            sigaddset(&signals, SIGINT);
            sigaddset(&signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &signals, nullptr);

            HttpServer server(service);
            const int port = server.bind(cfg.host, cfg.port);
            out << "listening on " << cfg.host << ":" << port << std::endl;
            std::thread serving([&] { server.run(); });
            int sig = 0;
            sigwait(&signals, &sig);
            server.stop();
            serving.join();
            pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
        };
    });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Character dialogue data, evaluation and annotation toolkit", "chardial"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"table", "csv"}))->capture_default_str();
    app.add_option("--jobs", g.jobs, "Parallel synthesis jobs")->check(CLI::PositiveNumber)->capture_default_str();

    std::function<void()> action;
    int exit_code = 0;
    add_stats(app, g, out, action);
    add_synth(app, g, out, err, action, exit_code);
    add_ingest(app, g, out, action, exit_code);
    add_export(app, g, out, action);
    add_eval_report(app, g, out, action);
    add_replay(app, g, out, action, exit_code);
    add_serve(app, g, out, action);
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.emplace_back("chardial");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (action) action();
        return exit_code;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitBadPath;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitBadPath;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        if (!e.violations().empty()) err << describe(e.violations()) << "\n";
        return kExitValidation;
    } catch (const ProviderError& e) {
        err << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const TransformerError& e) {
        err << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const SynthesisError& e) {
        err << "synthesis failed at " << to_string(e.stage()) << ": " << e.what() << "\n";
        return kExitProvider;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace chardial::cli
