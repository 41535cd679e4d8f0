// cohortforge command-line front end.
//
// Orchestrates the full synthetic-note pipeline (`run`) and exposes every
// stage as an independent subcommand so intermediate artifacts can be
// inspected, regenerated, or swapped out. Progress goes to standard error;
// data goes to files or standard output only.
//
// Exit codes: 0 success, 1 validation/strict failure, 2 usage error,
// 3 transport/backend error.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cohortforge/default_config.hpp"
#include "cohortforge/pipeline.hpp"

namespace {

using namespace cohortforge;

DistributionConfig load_config_or_default(const std::string& path) {
    if (path.empty()) {
        return default_config();
    }
    return load_config_file(path);
}

// Stage commands optionally cross-check their config against a dataset
// manifest so mixed-provenance artifacts are rejected early.
void check_manifest_digest(const std::string& manifest_path, const DistributionConfig& cfg,
                           const std::string& stage) {
    if (manifest_path.empty()) {
        return;
    }
    const DatasetManifest manifest = read_manifest(manifest_path);
    const std::string digest = config_digest(cfg);
    if (manifest.config_digest != digest) {
        throw SchemaError("stage '" + stage + "' config digest " + digest +
                          " does not match manifest '" + manifest_path + "' (digest " +
                          manifest.config_digest + ", written by stage 'run')");
    }
}

FidelityTolerances load_tolerances(const std::string& path) {
    FidelityTolerances tol;
    if (path.empty()) {
        return tol;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open tolerance overrides file '" + path + "'");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("tolerance overrides '" + path + "': " + e.what());
    }
    if (!j.is_object()) {
        throw SchemaError("tolerance overrides '" + path + "' must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) {
            throw SchemaError("tolerance override '" + key + "' must be a number");
        }
        const double v = value.get<double>();
        if (!(v > 0.0)) {
            throw ValidationError("tolerance override '" + key + "' must be positive");
        }
        if (key == "cohort_l1") {
            tol.cohort_l1 = v;
        } else if (key == "category_l1") {
            tol.category_l1 = v;
        } else if (key == "count_relative") {
            tol.count_relative = v;
        } else if (key == "visit_relative") {
            tol.visit_relative = v;
        } else {
            throw SchemaError("unknown tolerance override '" + key + "'");
        }
    }
    return tol;
}

nlohmann::json stats_to_json(const DatasetStats& stats) {
    return {{"category_counts", stats.category_counts},
            {"proportions", stats.proportions},
            {"total_sentences", stats.total_sentences},
            {"positive_sentences", stats.positive_sentences},
            {"negative_sentences", stats.negative_sentences}};
}

void print_stats_table(const DatasetStats& stats, std::ostream& out) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-28s %12s %12s\n", "category", "count", "proportion");
    out << line;
    for (const char* label : kAnnotationLabelIds) {
        std::snprintf(line, sizeof(line), "%-28s %12llu %12.4f\n", label,
                      static_cast<unsigned long long>(stats.category_counts.at(label)),
                      stats.proportions.at(label));
        out << line;
    }
    out << "\n";
    std::snprintf(line, sizeof(line), "total sentences: %llu (positive %llu, negative %llu)\n",
                  static_cast<unsigned long long>(stats.total_sentences),
                  static_cast<unsigned long long>(stats.positive_sentences),
                  static_cast<unsigned long long>(stats.negative_sentences));
    out << line;
}

void print_report_summary(const FidelityReport& report, std::ostream& err) {
    std::size_t failed = 0;
    std::size_t skipped = 0;
    for (const auto& check : report.checks) {
        if (check.skipped) {
            ++skipped;
        } else if (!check.passed) {
            ++failed;
            err << "  FAIL " << check.name << ": observed " << check.observed_value
                << " vs target " << check.target_value << " (tolerance " << check.tolerance
                << (check.relative ? " relative" : "") << ")\n";
        }
    }
    err << "validate: " << report.checks.size() << " checks, " << failed << " failed, " << skipped
        << " skipped -> " << (report.overall_pass() ? "PASS" : "FAIL") << "\n";
}

struct CommonArgs {
    std::string config_path;
    std::string manifest_path;
};

int run_cli(int argc, char** argv) {
    CLI::App app{"cohortforge: deterministic synthetic longitudinal clinical-note pipeline"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    int exit_code = 0;

    // init-config
    {
        auto* cmd = app.add_subcommand("init-config",
                                       "Write the built-in default configuration for editing");
        auto out_path = std::make_shared<std::string>();
        cmd->add_option("--out", *out_path, "Destination path (omit to print to stdout)");
        cmd->callback([out_path]() {
            const std::string text = serialize_config(default_config());
            if (out_path->empty()) {
                std::cout << text;
            } else {
                write_file_atomic(*out_path, text);
                std::cerr << "init-config: wrote " << *out_path << "\n";
            }
        });
    }

    // sample-cohort
    {
        auto* cmd = app.add_subcommand("sample-cohort",
                                       "Sample a demographically calibrated persona cohort");
        auto args = std::make_shared<CommonArgs>();
        auto n = std::make_shared<std::uint64_t>(0);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto threads = std::make_shared<unsigned>(1);
        auto out_path = std::make_shared<std::string>();
        cmd->add_option("--config", args->config_path, "Config file (omit for defaults)");
        cmd->add_option("--n", *n, "Number of personas")->required();
        cmd->add_option("--seed", *seed, "Master seed")->required();
        cmd->add_option("--out", *out_path, "Output personas.jsonl")->required();
        cmd->add_option("--threads", *threads, "Worker threads (output is thread-invariant)");
        cmd->add_option("--manifest", args->manifest_path, "Manifest to cross-check digests");
        cmd->callback([args, n, seed, threads, out_path]() {
            const auto cfg = load_config_or_default(args->config_path);
            check_manifest_digest(args->manifest_path, cfg, "sample-cohort");
            const auto personas = sample_cohort(cfg, *n, *seed, *threads);
            write_records(*out_path, personas);
            std::cerr << "sample-cohort: wrote " << personas.size() << " personas to "
                      << *out_path << "\n";
        });
    }

    // plan-visits
    {
        auto* cmd = app.add_subcommand("plan-visits",
                                       "Simulate visit trajectories for each persona");
        auto args = std::make_shared<CommonArgs>();
        auto personas_path = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        cmd->add_option("--config", args->config_path, "Config file (omit for defaults)");
        cmd->add_option("--personas", *personas_path, "Input personas.jsonl")->required();
        cmd->add_option("--out", *out_path, "Output plans.jsonl")->required();
        cmd->add_option("--manifest", args->manifest_path, "Manifest to cross-check digests");
        cmd->callback([args, personas_path, out_path]() {
            const auto cfg = load_config_or_default(args->config_path);
            check_manifest_digest(args->manifest_path, cfg, "plan-visits");
            const auto personas = read_records<Persona>(*personas_path);
            std::vector<VisitPlan> plans;
            plans.reserve(personas.size());
            std::size_t note_total = 0;
            for (const auto& persona : personas) {
                plans.push_back(build_visit_plan(cfg, persona));
                note_total += plans.back().notes.size();
            }
            write_records(*out_path, plans);
            std::cerr << "plan-visits: wrote " << plans.size() << " plans (" << note_total
                      << " note specs) to " << *out_path << "\n";
        });
    }

    // sample-keywords
    {
        auto* cmd = app.add_subcommand(
            "sample-keywords", "Sample trend-aligned keyword mentions into each note spec");
        auto args = std::make_shared<CommonArgs>();
        auto plans_path = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        cmd->add_option("--config", args->config_path, "Config file (omit for defaults)");
        cmd->add_option("--plans", *plans_path, "Input plans.jsonl")->required();
        cmd->add_option("--out", *out_path, "Output plans with mentions")->required();
        cmd->add_option("--manifest", args->manifest_path, "Manifest to cross-check digests");
        cmd->callback([args, plans_path, out_path]() {
            const auto cfg = load_config_or_default(args->config_path);
            check_manifest_digest(args->manifest_path, cfg, "sample-keywords");
            const auto plans = read_records<VisitPlan>(*plans_path);
            std::vector<VisitPlan> populated;
            populated.reserve(plans.size());
            std::size_t mention_total = 0;
            for (const auto& plan : plans) {
                populated.push_back(populate_mentions(cfg, plan));
                for (const auto& note : populated.back().notes) {
                    mention_total += note.mentions.size();
                }
            }
            write_records(*out_path, populated);
            std::cerr << "sample-keywords: wrote " << populated.size() << " plans ("
                      << mention_total << " mentions) to " << *out_path << "\n";
        });
    }

    // generate-notes
    {
        auto* cmd = app.add_subcommand("generate-notes",
                                       "Generate note text for every planned visit");
        auto args = std::make_shared<CommonArgs>();
        auto plans_path = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        auto backend = std::make_shared<std::string>();
        auto concurrency = std::make_shared<int>(0);
        cmd->add_option("--config", args->config_path, "Config file (omit for defaults)");
        cmd->add_option("--plans", *plans_path, "Input plans with mentions")->required();
        cmd->add_option("--backend", *backend, "Backend: mock or http")
            ->check(CLI::IsMember({"mock", "http"}));
        cmd->add_option("--out", *out_path, "Output notes.jsonl")->required();
        cmd->add_option("--concurrency", *concurrency, "Concurrent in-flight requests");
        cmd->add_option("--manifest", args->manifest_path, "Manifest to cross-check digests");
        cmd->callback([args, plans_path, out_path, backend, concurrency]() {
            const auto cfg = load_config_or_default(args->config_path);
            check_manifest_digest(args->manifest_path, cfg, "generate-notes");
            const auto plans = read_records<VisitPlan>(*plans_path);
            const std::string backend_name =
                backend->empty() ? cfg.generation_params.backend : *backend;
            const int workers =
                *concurrency > 0 ? *concurrency : cfg.generation_params.concurrency;
            Gateway gateway = make_gateway(backend_name, cfg);
            std::vector<GenerationRequest> requests;
            std::vector<const NoteSpec*> specs;
            for (const auto& plan : plans) {
                for (const auto& note : plan.notes) {
                    GenerationRequest request;
                    request.bundle = build_note_prompt(plan, note, cfg);
                    request.temperature = cfg.generation_params.temperature;
                    request.max_output_tokens = cfg.generation_params.max_output_tokens;
                    request.request_id = note.note_id;
                    requests.push_back(std::move(request));
                    specs.push_back(&note);
                }
            }
            const auto outcomes = gateway.generate_batch(requests, workers);
            std::vector<SyntheticNote> notes;
            notes.reserve(outcomes.size());
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                if (!outcomes[i].ok()) {
                    detail::rethrow_outcome(outcomes[i], "generate-notes");
                }
                SyntheticNote note;
                note.note_id = specs[i]->note_id;
                note.patient_id = specs[i]->patient_id;
                note.year_before_dx = specs[i]->year_before_dx;
                note.note_type = specs[i]->note_type;
                note.stage = specs[i]->stage;
                note.prompt_hash = requests[i].bundle.prompt_hash;
                note.backend_id = outcomes[i].result->backend_id;
                note.text = outcomes[i].result->text;
                notes.push_back(std::move(note));
            }
            write_records(*out_path, notes);
            std::cerr << "generate-notes: wrote " << notes.size() << " notes to " << *out_path
                      << " via '" << backend_name << "'\n";
        });
    }

    // annotate
    {
        auto* cmd = app.add_subcommand("annotate",
                                       "Annotate note sentences into symptom categories");
        auto args = std::make_shared<CommonArgs>();
        auto notes_path = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        auto backend = std::make_shared<std::string>();
        auto concurrency = std::make_shared<int>(0);
        cmd->add_option("--config", args->config_path, "Config file (omit for defaults)");
        cmd->add_option("--notes", *notes_path, "Input notes.jsonl")->required();
        cmd->add_option("--backend", *backend, "Backend: mock or http")
            ->check(CLI::IsMember({"mock", "http"}));
        cmd->add_option("--out", *out_path, "Output sentences.jsonl")->required();
        cmd->add_option("--concurrency", *concurrency, "Concurrent in-flight requests");
        cmd->add_option("--manifest", args->manifest_path, "Manifest to cross-check digests");
        cmd->callback([args, notes_path, out_path, backend, concurrency]() {
            const auto cfg = load_config_or_default(args->config_path);
            check_manifest_digest(args->manifest_path, cfg, "annotate");
            const auto notes = read_records<SyntheticNote>(*notes_path);
            const std::string backend_name =
                backend->empty() ? cfg.generation_params.backend : *backend;
            const unsigned workers = static_cast<unsigned>(
                *concurrency > 0 ? *concurrency : cfg.generation_params.concurrency);
            Gateway gateway = make_gateway(backend_name, cfg);
            std::vector<AnnotationOutcome> outcomes(notes.size());
            parallel_for(notes.size(), workers,
                         [&](std::size_t i) { outcomes[i] = annotate_note(notes[i], gateway); });
            std::vector<LabeledSentence> sentences;
            std::size_t failed = 0;
            for (const auto& outcome : outcomes) {
                sentences.insert(sentences.end(), outcome.sentences.begin(),
                                 outcome.sentences.end());
                failed += outcome.failed_sentence_ids.size();
            }
            write_records(*out_path, sentences);
            std::cerr << "annotate: wrote " << sentences.size() << " sentences to " << *out_path
                      << " (" << failed << " failed) via '" << backend_name << "'\n";
        });
    }

    // validate
    {
        auto* cmd = app.add_subcommand(
            "validate", "Check sampled artifacts against the configured distributions");
        auto args = std::make_shared<CommonArgs>();
        auto personas_path = std::make_shared<std::string>();
        auto plans_path = std::make_shared<std::string>();
        auto overrides_path = std::make_shared<std::string>();
        auto report_path = std::make_shared<std::string>();
        cmd->add_option("--config", args->config_path, "Config file (omit for defaults)");
        cmd->add_option("--personas", *personas_path, "Input personas.jsonl")->required();
        cmd->add_option("--plans", *plans_path, "Input plans with mentions (optional)");
        cmd->add_option("--tolerance-overrides", *overrides_path,
                        "JSON object overriding default tolerances");
        cmd->add_option("--report", *report_path, "Output report.json")->required();
        cmd->add_option("--manifest", args->manifest_path, "Manifest to cross-check digests");
        cmd->callback([args, personas_path, plans_path, overrides_path, report_path,
                       &exit_code]() {
            const auto cfg = load_config_or_default(args->config_path);
            check_manifest_digest(args->manifest_path, cfg, "validate");
            const auto tol = load_tolerances(*overrides_path);
            const auto personas = read_records<Persona>(*personas_path);
            FidelityReport report = validate_cohort(personas, cfg, tol);
            if (!plans_path->empty()) {
                const auto plans = read_records<VisitPlan>(*plans_path);
                report.append(validate_keyword_alignment(plans, cfg, tol));
                report.append(validate_visit_alignment(plans, cfg, tol));
            }
            write_file_atomic(*report_path, to_json(report).dump(2) + "\n");
            print_report_summary(report, std::cerr);
            std::cerr << "validate: report written to " << *report_path << "\n";
            if (!report.overall_pass()) {
                exit_code = 1;
            }
        });
    }

    // stats
    {
        auto* cmd = app.add_subcommand("stats", "Per-category sentence counts and proportions");
        auto sentences_path = std::make_shared<std::string>();
        auto unique = std::make_shared<bool>(false);
        auto as_json = std::make_shared<bool>(false);
        cmd->add_option("--sentences", *sentences_path, "Input sentences.jsonl")->required();
        cmd->add_flag("--unique-sentences", *unique,
                      "Count each sentence once, under its highest-priority label");
        cmd->add_flag("--json", *as_json, "Print JSON instead of a table");
        cmd->callback([sentences_path, unique, as_json]() {
            const auto records = read_records<LabeledSentence>(*sentences_path);
            const auto stats = dataset_stats(records, *unique);
            if (*as_json) {
                std::cout << stats_to_json(stats).dump(2) << "\n";
            } else {
                print_stats_table(stats, std::cout);
            }
        });
    }

    // subsample
    {
        auto* cmd = app.add_subcommand(
            "subsample", "Extract a proportion-preserving subset of positive sentences");
        auto sentences_path = std::make_shared<std::string>();
        auto target = std::make_shared<std::uint64_t>(0);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto out_path = std::make_shared<std::string>();
        cmd->add_option("--sentences", *sentences_path, "Input sentences.jsonl")->required();
        cmd->add_option("--target", *target, "Subsample size")->required();
        cmd->add_option("--seed", *seed, "Selection seed")->required();
        cmd->add_option("--out", *out_path, "Output sentences.jsonl")->required();
        cmd->callback([sentences_path, target, seed, out_path]() {
            const auto records = read_records<LabeledSentence>(*sentences_path);
            const auto subset = subsample_matched(records, *target, *seed);
            write_records(*out_path, subset);
            std::cerr << "subsample: wrote " << subset.size() << " of " << records.size()
                      << " records to " << *out_path << "\n";
        });
    }

    // assemble
    {
        auto* cmd = app.add_subcommand(
            "assemble", "Combine positives with ratio-controlled sampled negatives");
        auto positives_path = std::make_shared<std::string>();
        auto negatives_path = std::make_shared<std::string>();
        auto ratio = std::make_shared<double>(0.0);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto out_path = std::make_shared<std::string>();
        cmd->add_option("--positives", *positives_path, "Labeled sentences")->required();
        cmd->add_option("--negatives", *negatives_path, "Unlabeled sentence pool")->required();
        cmd->add_option("--ratio", *ratio, "Negatives per positive")->required();
        cmd->add_option("--seed", *seed, "Sampling/shuffle seed")->required();
        cmd->add_option("--out", *out_path, "Output sentences.jsonl")->required();
        cmd->callback([positives_path, negatives_path, ratio, seed, out_path]() {
            const auto positives = read_records<LabeledSentence>(*positives_path);
            const auto pool = read_records<LabeledSentence>(*negatives_path);
            const auto combined = assemble_training_set(positives, pool, *ratio, *seed);
            write_records(*out_path, combined);
            std::cerr << "assemble: wrote " << combined.size() << " records (" << positives.size()
                      << " positive) to " << *out_path << "\n";
        });
    }

    // render-prompt
    {
        auto* cmd = app.add_subcommand("render-prompt",
                                       "Render one prompt bundle to stdout (fixture format)");
        auto args = std::make_shared<CommonArgs>();
        auto plan_path = std::make_shared<std::string>();
        auto notes_path = std::make_shared<std::string>();
        auto index = std::make_shared<std::uint64_t>(0);
        auto kind = std::make_shared<std::string>("note");
        cmd->add_option("--config", args->config_path, "Config file (omit for defaults)");
        cmd->add_option("--plan", *plan_path, "Plans with mentions (for --kind note)");
        cmd->add_option("--notes", *notes_path, "Notes file (for --kind annotation)");
        cmd->add_option("--index", *index, "Zero-based note index across the input file")
            ->required();
        cmd->add_option("--kind", *kind, "Prompt kind: note or annotation")
            ->check(CLI::IsMember({"note", "annotation"}));
        cmd->callback([args, plan_path, notes_path, index, kind]() {
            const auto cfg = load_config_or_default(args->config_path);
            if (*kind == "note") {
                if (plan_path->empty()) {
                    throw UsageError("render-prompt --kind note requires --plan");
                }
                const auto plans = read_records<VisitPlan>(*plan_path);
                std::uint64_t current = 0;
                for (const auto& plan : plans) {
                    for (const auto& note : plan.notes) {
                        if (current == *index) {
                            std::cout << render_bundle(build_note_prompt(plan, note, cfg));
                            return;
                        }
                        ++current;
                    }
                }
                throw UsageError("render-prompt: index " + std::to_string(*index) +
                                 " out of range (" + std::to_string(current) + " notes)");
            }
            if (notes_path->empty()) {
                throw UsageError("render-prompt --kind annotation requires --notes");
            }
            const auto notes = read_records<SyntheticNote>(*notes_path);
            if (*index >= notes.size()) {
                throw UsageError("render-prompt: index " + std::to_string(*index) +
                                 " out of range (" + std::to_string(notes.size()) + " notes)");
            }
            std::cout << render_bundle(build_annotation_prompt(
                notes[static_cast<std::size_t>(*index)].text, kAnnotationProtocol));
        });
    }

    // run
    {
        auto* cmd = app.add_subcommand("run", "Run the full pipeline and write a dataset");
        auto args = std::make_shared<CommonArgs>();
        auto n = std::make_shared<std::uint64_t>(0);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto backend = std::make_shared<std::string>();
        auto out_dir = std::make_shared<std::string>();
        auto strict = std::make_shared<bool>(false);
        auto concurrency = std::make_shared<unsigned>(0);
        auto overrides_path = std::make_shared<std::string>();
        cmd->add_option("--config", args->config_path, "Config file (omit for defaults)");
        cmd->add_option("--n", *n, "Cohort size")->required();
        cmd->add_option("--seed", *seed, "Master seed")->required();
        cmd->add_option("--backend", *backend, "Backend: mock or http")
            ->check(CLI::IsMember({"mock", "http"}));
        cmd->add_option("--out-dir", *out_dir, "Directory receiving dataset/<id>/")->required();
        cmd->add_flag("--strict", *strict, "Exit nonzero when fidelity validation fails");
        cmd->add_option("--concurrency", *concurrency, "Concurrent in-flight requests");
        cmd->add_option("--tolerance-overrides", *overrides_path,
                        "JSON object overriding default tolerances");
        cmd->callback([args, n, seed, backend, out_dir, strict, concurrency, overrides_path,
                       &exit_code]() {
            RunSpec spec;
            spec.cfg = load_config_or_default(args->config_path);
            spec.master_seed = *seed;
            spec.cohort_size = *n;
            spec.backend = *backend;
            spec.out_dir = *out_dir;
            spec.strict = *strict;
            spec.concurrency = *concurrency;
            spec.tolerances = load_tolerances(*overrides_path);
            const RunResult result = run_pipeline(spec, &std::cerr);
            print_report_summary(result.report, std::cerr);
            std::cout << result.dataset_dir.string() << "\n";
            if (spec.strict && !result.report.overall_pass()) {
                std::cerr << "run: fidelity validation failed under --strict\n";
                exit_code = 1;
            }
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const cohortforge::TransportError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const cohortforge::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
