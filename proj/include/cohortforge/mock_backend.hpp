#pragma once

// Deterministic local backend used for tests and offline runs.
//
// Note generation: emits a SOAP-skeleton note containing one sentence per
// required keyword (parsed back out of the prompt), with fixed header and
// filler lines. The same bundle always yields byte-identical text.
//
// Sentence annotation: labels each sentence by a fixed rule set — a
// case-insensitive scan for lexicon keywords mapped onto the annotation
// taxonomy, plus a deterministic observer-report rule (family/caregiver
// mentions something) that yields the concern-by-others label. Because the
// rules are enumerable, pipeline-level label proportions are exactly
// computable in tests.

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohortforge/config.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/gateway.hpp"

namespace cohortforge {

namespace detail {

inline std::string to_lower_copy(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Maps a lexicon (generation-side) category onto the annotation taxonomy.
inline const char* annotation_label_for_lexicon_category(std::string_view category) {
    if (category == "speech_language" || category == "memory" ||
        category == "learning_perception") {
        return "cognitive_impairment";
    }
    if (category == "assistance_needed") {
        return "requires_assistance";
    }
    if (category == "physiological_changes") {
        return "physiological_changes";
    }
    if (category == "neuropsychiatric_symptoms") {
        return "neuropsychiatric_symptoms";
    }
    throw LookupError("no annotation label for lexicon category '" + std::string(category) + "'");
}

} // namespace detail

class MockBackend : public Backend {
public:
    explicit MockBackend(const DistributionConfig& cfg) {
        for (const char* category : kLexiconCategories) {
            for (const auto& keyword : cfg.lexicon.category_keywords(category)) {
                keyword_labels_.emplace(detail::to_lower_copy(keyword),
                                        detail::annotation_label_for_lexicon_category(category));
            }
        }
    }

    std::string backend_id() const override { return "mock"; }

    std::string complete(const GenerationRequest& req) override {
        switch (req.bundle.kind) {
            case PromptKind::note_generation:
                return make_note(req.bundle.user_text);
            case PromptKind::sentence_annotation:
                return make_annotation(req.bundle.user_text);
        }
        throw ProtocolError("mock backend: unknown prompt kind");
    }

    // The fixed sentence templates keywords are embedded into. Template 1 is
    // an observer report on purpose, so a deterministic share of mock
    // sentences exercises the concern-by-others label.
    static std::string keyword_sentence(const std::string& keyword) {
        Sha256 hasher;
        hasher.update(keyword);
        const auto digest = hasher.finish();
        switch (digest[0] % 4) {
            case 0: return "Patient reports ongoing issues with " + keyword + " at this visit.";
            case 1: return "Daughter notes trouble with " + keyword + " since the last visit.";
            case 2: return "Clinician observed " + keyword + " while examining the patient.";
            default: return "Chart review documents " + keyword + " again this quarter.";
        }
    }

    // Label rule set used for sentence_annotation prompts; exposed so tests
    // can compute expected labels independently.
    std::vector<std::string> labels_for_sentence(const std::string& sentence) const {
        std::vector<std::string> labels;
        const std::string lower = detail::to_lower_copy(sentence);
        for (const char* label : kAnnotationLabelIds) {
            bool found = false;
            if (std::string_view(label) == "concern_by_others") {
                found = std::regex_search(lower, observer_pattern());
            } else {
                for (const auto& [keyword, keyword_label] : keyword_labels_) {
                    if (keyword_label == label && lower.find(keyword) != std::string::npos) {
                        found = true;
                        break;
                    }
                }
            }
            if (found) {
                labels.emplace_back(label);
            }
        }
        return labels;
    }

private:
    static const std::regex& observer_pattern() {
        // An observer noun followed, within the sentence, by a reporting verb.
        static const std::regex pattern(
            "\\b(daughter|son|wife|husband|spouse|family|caregiver|friend|neighbor)s?\\b"
            "[^.!?]*"
            "\\b(report|reports|reported|notes|noted|mentions|mentioned|says|said|complains|"
            "complained|notice|notices|noticed|tells|told|concern|concerns|concerned)\\b");
        return pattern;
    }

    static std::vector<std::string> parse_required_keywords(const std::string& user_text) {
        std::vector<std::string> keywords;
        std::istringstream in(user_text);
        std::string line;
        bool in_section = false;
        while (std::getline(in, line)) {
            if (line.rfind("## ", 0) == 0) {
                in_section = line == "## Required symptom keywords";
                continue;
            }
            if (!in_section || line.rfind("- ", 0) != 0) {
                continue;
            }
            const std::size_t bracket = line.rfind(" [");
            if (bracket == std::string::npos || line.back() != ']') {
                continue;
            }
            keywords.push_back(line.substr(2, bracket - 2));
        }
        if (keywords.empty()) {
            throw ProtocolError("mock backend: prompt lists no required keywords");
        }
        return keywords;
    }

    static std::string make_note(const std::string& user_text) {
        const auto keywords = parse_required_keywords(user_text);
        std::ostringstream note;
        note << "Patient Name: [redacted]  Date: [redacted]\n";
        note << "Provider: Dr. [redacted]\n";
        note << "\n";
        note << "Subjective:\n";
        for (const auto& keyword : keywords) {
            note << keyword_sentence(keyword) << "\n";
        }
        note << "\n";
        note << "Objective:\n";
        note << "Vitals reviewed and within expected limits for age.\n";
        note << "General exam otherwise unchanged from prior documentation.\n";
        note << "\n";
        note << "Assessment:\n";
        note << "Findings reviewed in detail and correlated with the history above.\n";
        note << "\n";
        note << "Plan:\n";
        note << "Continue current management; follow-up visit arranged.\n";
        note << "Family to call the clinic with any new developments.\n";
        return note.str();
    }

    std::string make_annotation(const std::string& user_text) const {
        std::istringstream in(user_text);
        std::string line;
        bool in_section = false;
        std::vector<std::pair<std::size_t, std::string>> sentences;
        while (std::getline(in, line)) {
            if (line.rfind("## ", 0) == 0) {
                in_section = line == "## Sentences";
                continue;
            }
            if (!in_section || line.empty() || line[0] != 'S') {
                continue;
            }
            const std::size_t colon = line.find(": ");
            if (colon == std::string::npos) {
                continue;
            }
            std::size_t index = 0;
            try {
                index = std::stoull(line.substr(1, colon - 1));
            } catch (const std::exception&) {
                continue;
            }
            nlohmann::json quoted;
            try {
                quoted = nlohmann::json::parse(line.substr(colon + 2));
            } catch (const nlohmann::json::parse_error&) {
                throw ProtocolError("mock backend: malformed sentence line in prompt");
            }
            sentences.emplace_back(index, quoted.get<std::string>());
        }
        if (sentences.empty()) {
            throw ProtocolError("mock backend: prompt lists no sentences");
        }
        std::ostringstream out;
        for (const auto& [index, sentence] : sentences) {
            const auto labels = labels_for_sentence(sentence);
            out << index << ": ";
            if (labels.empty()) {
                out << "none";
            } else {
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    if (i > 0) {
                        out << ", ";
                    }
                    out << labels[i];
                }
            }
            out << "\n";
        }
        return out.str();
    }

    // lowercased keyword -> annotation label
    std::map<std::string, std::string> keyword_labels_;
};

} // namespace cohortforge
