#pragma once

// Sentence-level annotation: segments a generated note, sends the sentences
// with the labeling protocol through the gateway, parses the line-oriented
// response, and emits labeled sentence records. Malformed responses get one
// repair retry; sentences that still cannot be parsed fail individually
// without failing the note.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cohortforge/errors.hpp"
#include "cohortforge/gateway.hpp"
#include "cohortforge/prompt.hpp"
#include "cohortforge/records_types.hpp"
#include "cohortforge/segmentation.hpp"

namespace cohortforge {

enum class AnnotationCategory {
    cognitive_impairment,
    concern_by_others,
    requires_assistance,
    physiological_changes,
    neuropsychiatric_symptoms,
};

inline const char* to_string(AnnotationCategory c) {
    return kAnnotationLabelIds[static_cast<std::size_t>(c)];
}

inline AnnotationCategory annotation_category_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kAnnotationLabelIds.size(); ++i) {
        if (name == kAnnotationLabelIds[i]) {
            return static_cast<AnnotationCategory>(i);
        }
    }
    throw LookupError("unknown annotation category: " + std::string(name));
}

inline bool is_annotation_label(std::string_view name) {
    for (const char* label : kAnnotationLabelIds) {
        if (name == label) {
            return true;
        }
    }
    return false;
}

// Deduplicates and orders labels by canonical category priority.
inline std::vector<std::string> normalize_labels(const std::vector<std::string>& labels) {
    std::vector<std::string> out;
    for (const char* canonical : kAnnotationLabelIds) {
        if (std::find(labels.begin(), labels.end(), canonical) != labels.end()) {
            out.emplace_back(canonical);
        }
    }
    return out;
}

// Single-label projection for classifier-style exports: the highest-priority
// label in canonical order, or empty for negative sentences.
inline std::string primary_label(const std::vector<std::string>& labels) {
    for (const char* canonical : kAnnotationLabelIds) {
        if (std::find(labels.begin(), labels.end(), canonical) != labels.end()) {
            return canonical;
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Annotation protocol (shipped labeling guideline)
// ---------------------------------------------------------------------------

// The project's sentence-labeling protocol. Five classes of observable signs
// and symptoms; deliberately excludes categories such as cognitive
// assessments and diagnostic tests, which typically follow rather than
// precede clinical suspicion. A sentence may belong to several classes.
inline constexpr const char* kAnnotationProtocol = R"PROTO(Label every sentence with all classes that apply; a sentence with no applicable class is labeled none.

Class 1 — Cognitive impairment (cognitive_impairment)
Trouble remembering, learning, concentrating, or making decisions that affects everyday life; includes both patient statements and clinician statements.
Cues: memory loss; forgetting appointments, dates, recent conversations or events; difficulty understanding directions or instructions; losing the sense of direction or getting lost in familiar places; losing the ability to organize or plan tasks (following a recipe, tracking monthly bills); becoming more impulsive; frequently asking the same question or repeating the same story (perseveration); not recognizing familiar people or places; trouble exercising judgment (e.g., knowing what to do in an emergency); losing the train of thought or the thread of conversations; problems with speech or language; mental decline, confusion (especially in the evening), disorientation, forgetfulness, making things up, difficulty concentrating, inability to create new memories, inability to do simple math, impaired communication, difficulty remembering names or events; changes in abstract reasoning ability.

Class 2 — Notice/concern by others (concern_by_others)
Changes noticed or concerns expressed by family, friends, caregivers, or neighbors — not by the provider. May co-occur with any other class, including cognitive, functional, physiological, or neuropsychiatric observations.
Cues: family complains of a change in ability or speed; concern expressed by family or friends; complaints that the patient is easily angered; daughter reports that she repeatedly asks the same question or had difficulties using her smartphone; daughter reports issues with banking, decreased personal hygiene, forgetting to take medications, forgetting where food is kept; family concerned that the patient went out at 1:30 a.m. without telling anyone; daughter says her mother has repeatedly changed the medications in the pill boxes arranged for her.

Class 3 — Requires assistance / functional impairment (requires_assistance)
Needs help from a person with, or has lost the ability to perform, ADLs or iADLs; difficulty with self-care or managing belongings.
ADLs: dressing, eating, toileting, bathing, grooming, mobility. iADLs: housekeeping-related activities (cleaning, cooking, laundry) and complex activities (telephone use, medication intake, transportation or driving, budget and finance management, shopping).
Cues: requires assistance with complex medical, legal, and financial decision-making; needs 24-hour supervision for safety; direct supervision required for medications using a pillbox; best not to use the stove; needs a guardian alert or camera surveillance if left alone; can make a meal, dress, bathe, and shave but needs help with finances; spouse has to remind about appointments; driving should not be permitted; needs assistance with all iADLs and most ADLs; limited night driving; resides in an assisted living facility or nursing home.

Class 4 — Physiological changes (physiological_changes)
Early physiological signs: senses — vision, hearing, or smell loss (including sensorineural hearing loss, hard of hearing); sleep — excessive daytime sleepiness, changes in sleep patterns; speech/swallowing — jumbled speech, difficulty speaking, dysphagia, difficulty swallowing; movement — difficulty walking, problems with gait and balance, gait slowing, loss of muscle coordination.
Focus on early associations; late-stage changes such as seizures are out of scope here.

Class 5 — Neuropsychiatric symptoms (neuropsychiatric_symptoms)
Mood changes: depression, irritability, aggression, anxiety, apathy, personality changes, behavioral changes, agitation, short temper, quick to anger, mood instability or lability, hypervigilance, negative cognitions, anhedonia; feeling increasingly overwhelmed by making decisions and plans; paranoia, delusions, hallucinations, psychosis, hearing voices or seeing things.
)PROTO";

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    return std::string(text.substr(begin, end - begin));
}

struct ParsedAnnotation {
    std::map<std::size_t, std::vector<std::string>> labels_by_index;
    std::vector<std::string> problems; // parse issues, empty when fully valid
};

// Parses "index: labels" lines. Out-of-range indices are a protocol error;
// other malformations are collected so the caller can retry or fail
// per-sentence.
inline ParsedAnnotation parse_annotation_response(const std::string& response,
                                                  std::size_t sentence_count) {
    ParsedAnnotation parsed;
    std::istringstream in(response);
    std::string raw_line;
    while (std::getline(in, raw_line)) {
        const std::string line = trim(raw_line);
        if (line.empty()) {
            continue;
        }
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            parsed.problems.push_back("line without ':': " + line);
            continue;
        }
        const std::string index_text = trim(line.substr(0, colon));
        std::size_t index = 0;
        bool numeric = !index_text.empty();
        for (const char c : index_text) {
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            parsed.problems.push_back("non-numeric sentence index: " + index_text);
            continue;
        }
        index = std::stoull(index_text);
        if (index >= sentence_count) {
            throw ProtocolError("annotation response references sentence " +
                                std::to_string(index) + " but the note has only " +
                                std::to_string(sentence_count) + " sentences");
        }
        if (parsed.labels_by_index.count(index)) {
            parsed.problems.push_back("duplicate line for sentence " + std::to_string(index));
            continue;
        }
        std::vector<std::string> labels;
        const std::string labels_text = trim(line.substr(colon + 1));
        if (!labels_text.empty()) {
            std::istringstream items(labels_text);
            std::string item;
            bool bad = false;
            while (std::getline(items, item, ',')) {
                const std::string label = trim(item);
                if (label.empty()) {
                    continue;
                }
                if (label == "none" || label == "None" || label == "NONE") {
                    continue;
                }
                if (!is_annotation_label(label)) {
                    parsed.problems.push_back("unknown label '" + label + "' for sentence " +
                                              std::to_string(index));
                    bad = true;
                    break;
                }
                labels.push_back(label);
            }
            if (bad) {
                continue;
            }
        }
        parsed.labels_by_index.emplace(index, normalize_labels(labels));
    }
    for (std::size_t i = 0; i < sentence_count; ++i) {
        if (!parsed.labels_by_index.count(i)) {
            parsed.problems.push_back("missing line for sentence " + std::to_string(i));
        }
    }
    return parsed;
}

} // namespace detail

inline std::string make_sentence_id(const std::string& note_id, std::size_t sentence_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "-S%04zu", sentence_index);
    return note_id + buf;
}

struct AnnotationOutcome {
    std::vector<LabeledSentence> sentences; // successfully labeled, in note order
    std::vector<std::string> failed_sentence_ids;
    std::vector<std::string> failure_reasons;
    int attempts = 0;
};

inline AnnotationOutcome annotate_note(const SyntheticNote& note, Gateway& gateway,
                                       const std::string& protocol_text = kAnnotationProtocol) {
    if (note.text.empty()) {
        throw ValidationError("annotate_note: note '" + note.note_id + "' has empty text");
    }
    const Segmentation seg = segment_sentences(note.text);
    const std::size_t count = seg.parts.size();

    PromptBundle bundle = build_annotation_prompt(note.text, protocol_text);
    detail::ParsedAnnotation parsed;
    AnnotationOutcome outcome;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        outcome.attempts = attempt;
        GenerationRequest req;
        req.bundle = bundle;
        req.temperature = 0.0; // labeling should be as deterministic as the backend allows
        req.max_output_tokens = 4096;
        req.request_id = "annotate-" + note.note_id + "-a" + std::to_string(attempt);
        const GenerationResult result = gateway.generate(req);
        parsed = detail::parse_annotation_response(result.text, count);
        if (parsed.problems.empty()) {
            break;
        }
        if (attempt == 1) {
            // One repair pass: restate the schema along with what was wrong.
            std::string repair = bundle.user_text;
            repair += "\n## Repair\nYour previous reply was not in the required format (";
            repair += parsed.problems.front();
            repair += "). Reply again with exactly one line per sentence: \"<index>: "
                      "<comma-separated category identifiers, or none>\".\n";
            bundle = make_bundle(PromptKind::sentence_annotation, bundle.system_text, repair);
        }
    }

    for (std::size_t i = 0; i < count; ++i) {
        const auto it = parsed.labels_by_index.find(i);
        if (it == parsed.labels_by_index.end()) {
            outcome.failed_sentence_ids.push_back(make_sentence_id(note.note_id, i));
            continue;
        }
        LabeledSentence sentence;
        sentence.sentence_id = make_sentence_id(note.note_id, i);
        sentence.note_id = note.note_id;
        sentence.patient_id = note.patient_id;
        sentence.year_before_dx = note.year_before_dx;
        sentence.sentence_text = seg.parts[i].text;
        sentence.labels = it->second;
        outcome.sentences.push_back(std::move(sentence));
    }
    if (!outcome.failed_sentence_ids.empty()) {
        outcome.failure_reasons = parsed.problems;
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Record validation
// ---------------------------------------------------------------------------

struct LabeledValidationReport {
    struct Violation {
        std::size_t record_index = 0;
        std::string sentence_id;
        std::string message;
    };
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

// Structural checks over labeled-sentence records: closed label set,
// reference integrity (when a note-id universe is supplied), non-empty text,
// year range, and duplicate sentence ids.
inline LabeledValidationReport validate_labeled(const std::vector<LabeledSentence>& records,
                                                const std::set<std::string>* known_note_ids =
                                                    nullptr) {
    LabeledValidationReport report;
    std::set<std::string> seen_ids;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        auto flag = [&](std::string message) {
            report.violations.push_back({i, rec.sentence_id, std::move(message)});
        };
        if (rec.sentence_id.empty()) {
            flag("empty sentence_id");
        } else if (!seen_ids.insert(rec.sentence_id).second) {
            flag("duplicate sentence_id");
        }
        if (rec.sentence_text.empty()) {
            flag("empty sentence_text");
        }
        if (rec.year_before_dx < kMinYearBeforeDx || rec.year_before_dx > kMaxYearBeforeDx) {
            flag("year_before_dx outside [1, 10]");
        }
        for (const auto& label : rec.labels) {
            if (!is_annotation_label(label)) {
                flag("label '" + label + "' outside the five-category closed set");
            }
        }
        if (known_note_ids && !known_note_ids->count(rec.note_id)) {
            flag("note_id '" + rec.note_id + "' does not resolve within the dataset");
        }
    }
    return report;
}

} // namespace cohortforge
