#pragma once

// Deterministic prompt assembly. The note-generation prompt carries the full
// persona profile, the visit's temporal context, the required symptom
// keywords, and SOAP/style directives. The annotation prompt carries the
// labeling protocol, the pre-segmented sentences, and a strict line-oriented
// response schema. Prompt hashes are content digests over (kind, system,
// user).

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohortforge/config.hpp"
#include "cohortforge/digest.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/persona.hpp"
#include "cohortforge/segmentation.hpp"
#include "cohortforge/trajectory.hpp"

namespace cohortforge {

enum class PromptKind {
    note_generation,
    sentence_annotation,
};

inline const char* to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::note_generation: return "note_generation";
        case PromptKind::sentence_annotation: return "sentence_annotation";
    }
    throw ProtocolError("unknown prompt kind");
}

inline PromptKind prompt_kind_from_string(std::string_view name) {
    if (name == "note_generation") return PromptKind::note_generation;
    if (name == "sentence_annotation") return PromptKind::sentence_annotation;
    throw LookupError("unknown prompt kind: " + std::string(name));
}

struct PromptBundle {
    PromptKind kind = PromptKind::note_generation;
    std::string system_text;
    std::string user_text;
    std::string prompt_hash;

    bool operator==(const PromptBundle&) const = default;
};

inline std::string compute_prompt_hash(PromptKind kind, std::string_view system_text,
                                       std::string_view user_text) {
    Sha256 hasher;
    hasher.update(to_string(kind));
    hasher.update("\x1f");
    hasher.update(system_text);
    hasher.update("\x1f");
    hasher.update(user_text);
    return to_hex(hasher.finish());
}

inline PromptBundle make_bundle(PromptKind kind, std::string system_text, std::string user_text) {
    if (system_text.empty() || user_text.empty()) {
        throw ValidationError("prompt bundle requires non-empty system and user text");
    }
    PromptBundle bundle;
    bundle.kind = kind;
    bundle.prompt_hash = compute_prompt_hash(kind, system_text, user_text);
    bundle.system_text = std::move(system_text);
    bundle.user_text = std::move(user_text);
    return bundle;
}

// ---------------------------------------------------------------------------
// Rendering helpers
// ---------------------------------------------------------------------------

namespace detail {

// "family_history_of_ad" -> "Family history of AD".
inline std::string prettify_identifier(std::string_view identifier) {
    static const std::map<std::string_view, std::string_view> kAcronyms = {
        {"ad", "AD"}, {"tbi", "TBI"}, {"ptsd", "PTSD"}, {"hbpc", "HBPC"},
    };
    std::string out;
    out.reserve(identifier.size());
    std::size_t pos = 0;
    bool first_token = true;
    while (pos <= identifier.size()) {
        const std::size_t next = identifier.find('_', pos);
        const std::size_t end = next == std::string_view::npos ? identifier.size() : next;
        std::string_view token = identifier.substr(pos, end - pos);
        if (!token.empty()) {
            if (!first_token) {
                out.push_back(' ');
            }
            auto it = kAcronyms.find(token);
            if (it != kAcronyms.end()) {
                out.append(it->second);
            } else {
                out.append(token);
            }
            first_token = false;
        }
        if (next == std::string_view::npos) {
            break;
        }
        pos = next + 1;
    }
    if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') {
        out[0] = static_cast<char>(out[0] - 'a' + 'A');
    }
    return out;
}

inline std::string quote_json(std::string_view text) {
    return nlohmann::json(std::string(text)).dump();
}

} // namespace detail

// Marker every rendered prompt uses in place of names and dates.
inline constexpr const char* kRedactedMarker = "[redacted]";

inline constexpr const char* kNoteSystemPrompt =
    "You are an experienced clinician writing fully de-identified notes for a synthetic "
    "patient cohort. Follow the instructions exactly. Never invent real identifiers: render "
    "all names and dates as [redacted].";

// ---------------------------------------------------------------------------
// Note-generation prompt
// ---------------------------------------------------------------------------

inline PromptBundle build_note_prompt(const std::map<std::string, std::string>& assignments,
                                      const std::string& patient_id, const NoteSpec& note,
                                      const DistributionConfig& cfg) {
    if (note.mentions.empty()) {
        throw ValidationError("build_note_prompt: note '" + note.note_id +
                              "' has no keyword mentions");
    }
    if (patient_id != note.patient_id) {
        throw ValidationError("build_note_prompt: persona '" + patient_id + "' does not own note '" +
                              note.note_id + "'");
    }
    std::ostringstream user;
    user << "Write one realistic clinical note for the synthetic patient described below.\n\n";
    user << "## Patient profile\n";
    for (const auto& factor : cfg.factors) {
        const auto it = assignments.find(factor.name);
        if (it == assignments.end()) {
            throw ValidationError("build_note_prompt: assignments missing factor '" + factor.name +
                                  "'");
        }
        user << "- " << detail::prettify_identifier(factor.name) << ": " << it->second << "\n";
    }
    user << "\n## Visit context\n";
    user << "- Visit type: " << detail::prettify_identifier(note.note_type) << "\n";
    if (note.year_before_dx == 1) {
        user << "- Timeline: 1 year before the index diagnosis\n";
    } else {
        user << "- Timeline: " << note.year_before_dx << " years before the index diagnosis\n";
    }
    user << "- Disease stage: " << note.stage << "\n";
    user << "\n## Required symptom keywords\n";
    user << "Work each keyword naturally into the note text:\n";
    std::set<std::string> seen;
    for (const auto& mention : note.mentions) {
        if (seen.insert(mention.keyword).second) {
            user << "- " << mention.keyword << " [" << mention.category << "]\n";
        }
    }
    user << "\n## Style requirements\n";
    user << "- Structure the note with SOAP sections: Subjective, Objective, Assessment, Plan.\n";
    user << "- Write in an authentic clinical voice; abbreviations, domain-specific phrasing, "
            "and occasional typos are acceptable.\n";
    user << "- Render all names and dates as " << kRedactedMarker << ".\n";
    user << "- Do not mention that the patient or the note is synthetic.\n";
    return make_bundle(PromptKind::note_generation, kNoteSystemPrompt, user.str());
}

inline PromptBundle build_note_prompt(const Persona& persona, const NoteSpec& note,
                                      const DistributionConfig& cfg) {
    return build_note_prompt(persona.assignments, persona.patient_id, note, cfg);
}

inline PromptBundle build_note_prompt(const VisitPlan& plan, const NoteSpec& note,
                                      const DistributionConfig& cfg) {
    return build_note_prompt(plan.assignments, plan.patient_id, note, cfg);
}

// ---------------------------------------------------------------------------
// Annotation prompt
// ---------------------------------------------------------------------------

inline constexpr const char* kAnnotationSystemPrompt =
    "You are a clinical annotation assistant. Label each sentence strictly according to the "
    "protocol. Reply only in the requested format, nothing else.";

// The five label identifiers, in canonical order.
inline constexpr std::array<const char*, 5> kAnnotationLabelIds = {
    "cognitive_impairment", "concern_by_others", "requires_assistance", "physiological_changes",
    "neuropsychiatric_symptoms",
};

inline PromptBundle build_annotation_prompt(const std::string& note_text,
                                            const std::string& protocol_text) {
    if (note_text.empty()) {
        throw ValidationError("build_annotation_prompt: empty note text");
    }
    if (protocol_text.empty()) {
        throw ValidationError("build_annotation_prompt: empty protocol text");
    }
    const Segmentation seg = segment_sentences(note_text);
    if (seg.parts.empty()) {
        throw ValidationError("build_annotation_prompt: note contains no sentences");
    }
    std::ostringstream user;
    user << "Annotate every sentence of the clinical note below.\n\n";
    user << "## Annotation protocol\n" << protocol_text;
    if (protocol_text.back() != '\n') {
        user << "\n";
    }
    user << "\n## Label set\nUse exactly these category identifiers:\n";
    for (const char* label : kAnnotationLabelIds) {
        user << "- " << label << "\n";
    }
    user << "\n## Sentences\n";
    for (std::size_t i = 0; i < seg.parts.size(); ++i) {
        user << "S" << i << ": " << detail::quote_json(seg.parts[i].text) << "\n";
    }
    user << "\n## Response format\n";
    user << "Reply with exactly one line per sentence, in order:\n";
    user << "<index>: <comma-separated category identifiers, or none>\n";
    user << "Example:\n0: cognitive_impairment\n1: none\n";
    return make_bundle(PromptKind::sentence_annotation, kAnnotationSystemPrompt, user.str());
}

// Canonical plain-text rendering used by fixtures and the render-prompt
// command.
inline std::string render_bundle(const PromptBundle& bundle) {
    std::ostringstream out;
    out << "kind: " << to_string(bundle.kind) << "\n";
    out << "prompt_hash: " << bundle.prompt_hash << "\n";
    out << "--- system ---\n" << bundle.system_text << "\n";
    out << "--- user ---\n" << bundle.user_text;
    return out.str();
}

} // namespace cohortforge
