#pragma once

// End-to-end pipeline orchestration: cohort sampling, visit planning, keyword
// sampling, note generation, annotation, fidelity validation, and dataset
// statistics, with every artifact persisted under a content-derived dataset
// directory. Under the mock backend the entire dataset is a pure function of
// (config bytes, master seed, cohort size).

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cohortforge/annotator.hpp"
#include "cohortforge/config.hpp"
#include "cohortforge/dataset.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/fidelity.hpp"
#include "cohortforge/gateway.hpp"
#include "cohortforge/http_backend.hpp"
#include "cohortforge/mock_backend.hpp"
#include "cohortforge/parallel.hpp"
#include "cohortforge/persona.hpp"
#include "cohortforge/prompt.hpp"
#include "cohortforge/records.hpp"
#include "cohortforge/semantic.hpp"
#include "cohortforge/trajectory.hpp"
#include "cohortforge/version.hpp"

namespace cohortforge {

struct RunSpec {
    DistributionConfig cfg;
    std::uint64_t master_seed = 0;
    std::uint64_t cohort_size = 0;
    std::string backend;            // empty -> cfg.generation_params.backend
    std::filesystem::path out_dir;
    bool strict = false;
    unsigned concurrency = 0;       // 0 -> cfg.generation_params.concurrency
    FidelityTolerances tolerances;
};

struct RunResult {
    DatasetManifest manifest;
    FidelityReport report;
    DatasetStats stats;
    std::filesystem::path dataset_dir;
};

inline std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
#if defined(_WIN32)
    gmtime_s(&utc, &now);
#else
    gmtime_r(&now, &utc);
#endif
    char buffer[80];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02dT%02d:%02d:%02dZ", utc.tm_year + 1900,
                  utc.tm_mon + 1, utc.tm_mday, utc.tm_hour, utc.tm_min, utc.tm_sec);
    return buffer;
}

// Builds the gateway for a named backend. The mock backend needs the config
// to reply with lexicon-consistent text; the HTTP backend reads its endpoint,
// model, and key from the environment.
inline Gateway make_gateway(const std::string& backend, const DistributionConfig& cfg) {
    RetryPolicy policy;
    policy.max_retries = cfg.generation_params.max_retries;
    std::shared_ptr<Backend> impl;
    if (backend == "mock") {
        impl = std::make_shared<MockBackend>(cfg);
    } else if (backend == "http") {
        auto http_cfg = HttpBackendConfig::from_env();
        if (http_cfg.model.empty()) {
            http_cfg.model = cfg.generation_params.model;
        }
        impl = std::make_shared<HttpBackend>(http_cfg);
    } else {
        throw UsageError("unknown backend '" + backend + "' (expected 'mock' or 'http')");
    }
    return Gateway(std::move(impl), policy);
}

namespace detail {

inline void progress(std::ostream* os, const std::string& message) {
    if (os != nullptr) {
        (*os) << "[cohortforge] " << message << "\n";
        os->flush();
    }
}

// Turns a failed batch slot back into the exception kind the backend raised.
[[noreturn]] inline void rethrow_outcome(const BatchOutcome& outcome, const std::string& stage) {
    const std::string message = stage + ": " + outcome.error_message;
    if (outcome.error_kind == "auth") {
        throw AuthError(message);
    }
    if (outcome.error_kind == "protocol") {
        throw ProtocolError(message);
    }
    if (outcome.error_kind == "transport") {
        throw TransportError(message);
    }
    throw Error(message);
}

} // namespace detail

// Runs every stage in order, persisting artifacts under
// out_dir/<dataset_id>/. A failing stage leaves partial artifacts behind with
// the manifest marked incomplete, then rethrows. A failing fidelity report is
// not a stage error; callers decide how strictly to treat it.
inline RunResult run_pipeline(const RunSpec& spec, std::ostream* progress_out = nullptr) {
    if (spec.cohort_size == 0) {
        throw UsageError("run_pipeline: cohort size must be positive");
    }
    if (spec.out_dir.empty()) {
        throw UsageError("run_pipeline: output directory required");
    }
    const std::string backend_name =
        spec.backend.empty() ? spec.cfg.generation_params.backend : spec.backend;
    const unsigned concurrency =
        spec.concurrency == 0 ? static_cast<unsigned>(spec.cfg.generation_params.concurrency)
                              : spec.concurrency;
    if (concurrency == 0) {
        throw UsageError("run_pipeline: concurrency must be positive");
    }

    const std::string digest = config_digest(spec.cfg);
    RunResult result;
    result.manifest.dataset_id = make_dataset_id(digest, spec.master_seed, spec.cohort_size);
    result.manifest.config_digest = digest;
    result.manifest.master_seed = spec.master_seed;
    result.manifest.created_at = iso8601_utc_now();
    result.manifest.tool_version = kToolVersion;
    result.manifest.backend_id = backend_name;
    result.manifest.complete = false;
    result.dataset_dir = spec.out_dir / result.manifest.dataset_id;

    std::filesystem::create_directories(result.dataset_dir);
    const auto manifest_path = result.dataset_dir / "manifest.json";
    write_manifest(manifest_path, result.manifest);
    write_file_atomic(result.dataset_dir / "config.json", serialize_config(spec.cfg));

    try {
        detail::progress(progress_out, "dataset " + result.manifest.dataset_id + " -> " +
                                           result.dataset_dir.string());

        // Stage 1: cohort sampling.
        const auto personas =
            sample_cohort(spec.cfg, spec.cohort_size, spec.master_seed, concurrency);
        write_records(result.dataset_dir / "personas.jsonl", personas);
        result.manifest.record_counts["personas"] = personas.size();
        detail::progress(progress_out,
                         "sample-cohort: " + std::to_string(personas.size()) + " personas");

        // Stages 2 + 3: visit planning, then keyword sampling on each plan.
        std::vector<VisitPlan> plans(personas.size());
        parallel_for(personas.size(), concurrency, [&](std::size_t i) {
            plans[i] = populate_mentions(spec.cfg, build_visit_plan(spec.cfg, personas[i]));
        });
        write_records(result.dataset_dir / "plans.jsonl", plans);
        result.manifest.record_counts["plans"] = plans.size();
        std::size_t note_total = 0;
        for (const auto& plan : plans) {
            note_total += plan.notes.size();
        }
        detail::progress(progress_out, "plan-visits + sample-keywords: " +
                                           std::to_string(note_total) + " note specs");

        // Stage 4: note generation through the gateway.
        Gateway gateway = make_gateway(backend_name, spec.cfg);
        std::vector<GenerationRequest> requests;
        std::vector<const NoteSpec*> specs;
        requests.reserve(note_total);
        specs.reserve(note_total);
        for (const auto& plan : plans) {
            for (const auto& note : plan.notes) {
                GenerationRequest request;
                request.bundle = build_note_prompt(plan, note, spec.cfg);
                request.temperature = spec.cfg.generation_params.temperature;
                request.max_output_tokens = spec.cfg.generation_params.max_output_tokens;
                request.request_id = note.note_id;
                requests.push_back(std::move(request));
                specs.push_back(&note);
            }
        }
        const auto outcomes = gateway.generate_batch(requests, static_cast<int>(concurrency));
        std::vector<SyntheticNote> notes;
        notes.reserve(outcomes.size());
        const BatchOutcome* first_failure = nullptr;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            if (!outcomes[i].ok()) {
                if (first_failure == nullptr) {
                    first_failure = &outcomes[i];
                }
                continue;
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
        write_records(result.dataset_dir / "notes.jsonl", notes);
        result.manifest.record_counts["notes"] = notes.size();
        if (first_failure != nullptr) {
            detail::rethrow_outcome(*first_failure, "generate-notes");
        }
        detail::progress(progress_out, "generate-notes: " + std::to_string(notes.size()) +
                                           " notes via '" + backend_name + "'");

        // Stage 5: sentence annotation.
        std::vector<AnnotationOutcome> annotations(notes.size());
        parallel_for(notes.size(), concurrency, [&](std::size_t i) {
            annotations[i] = annotate_note(notes[i], gateway);
        });
        std::vector<LabeledSentence> sentences;
        std::size_t failed_sentences = 0;
        for (const auto& outcome : annotations) {
            for (const auto& sentence : outcome.sentences) {
                sentences.push_back(sentence);
            }
            failed_sentences += outcome.failed_sentence_ids.size();
        }
        write_records(result.dataset_dir / "sentences.jsonl", sentences);
        result.manifest.record_counts["sentences"] = sentences.size();
        result.manifest.record_counts["annotation_failures"] = failed_sentences;
        detail::progress(progress_out, "annotate: " + std::to_string(sentences.size()) +
                                           " sentences (" + std::to_string(failed_sentences) +
                                           " failed)");

        // Stage 6: fidelity validation.
        result.report = validate_cohort(personas, spec.cfg, spec.tolerances);
        result.report.append(validate_keyword_alignment(plans, spec.cfg, spec.tolerances));
        result.report.append(validate_visit_alignment(plans, spec.cfg, spec.tolerances));
        write_file_atomic(result.dataset_dir / "report.json", to_json(result.report).dump(2) + "\n");
        detail::progress(progress_out,
                         std::string("validate: ") +
                             (result.report.overall_pass() ? "pass" : "FAIL") + " (" +
                             std::to_string(result.report.checks.size()) + " checks)");

        // Stage 7: dataset statistics.
        result.stats = dataset_stats(sentences);
        detail::progress(progress_out,
                         "stats: " + std::to_string(result.stats.positive_sentences) +
                             " positive / " + std::to_string(result.stats.negative_sentences) +
                             " negative sentences");

        result.manifest.complete = true;
        write_manifest(manifest_path, result.manifest);
        return result;
    } catch (...) {
        result.manifest.complete = false;
        write_manifest(manifest_path, result.manifest);
        throw;
    }
}

} // namespace cohortforge
