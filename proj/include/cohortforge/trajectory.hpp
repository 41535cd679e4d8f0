#pragma once

// Visit trajectory simulation: for each persona, per-year visit counts by
// note type. Visit-table values are per-window totals spread uniformly over
// the window's years; counts are Poisson around those per-year rates (a
// caller-supplied count sampler can replace Poisson when empirical count
// samples are available).

#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cohortforge/config.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/persona.hpp"
#include "cohortforge/rng.hpp"

namespace cohortforge {

struct KeywordMention {
    std::string category;
    std::string keyword;

    bool operator==(const KeywordMention&) const = default;
};

struct NoteSpec {
    std::string note_id;
    std::string patient_id;
    int year_before_dx = 0;
    std::string note_type;
    std::string stage;
    std::vector<KeywordMention> mentions; // filled by the semantic sampler

    bool operator==(const NoteSpec&) const = default;
};

// A plan embeds the persona's seed and assignments so every downstream stage
// (keyword sampling, prompt building) is reproducible from the plan record
// alone, without re-reading the persona file.
struct VisitPlan {
    std::string patient_id;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> assignments;
    std::vector<NoteSpec> notes; // descending year, then note-type order

    bool operator==(const VisitPlan&) const = default;
};

inline void check_year_range(int year, const char* context) {
    if (year < kMinYearBeforeDx || year > kMaxYearBeforeDx) {
        throw RangeError(std::string(context) + ": year " + std::to_string(year) +
                         " outside modeled horizon [1, 10]");
    }
}

inline const VisitWindow& window_for_year(const VisitTypeTable& table, int year) {
    check_year_range(year, "window_for_year");
    for (const auto& w : table.windows) {
        if (w.contains(year)) {
            return w;
        }
    }
    throw ValidationError("window_for_year: no window covers year " + std::to_string(year));
}

inline const std::string& stage_for_year(const StageMap& stages, int year) {
    check_year_range(year, "stage_for_year");
    auto it = stages.stage_by_year.find(year);
    if (it == stages.stage_by_year.end()) {
        throw ValidationError("stage_for_year: no stage mapped for year " + std::to_string(year));
    }
    return it->second;
}

// Expected notes of a given type in a single year: the window total divided
// by the window length.
inline double per_year_rate(const VisitTypeTable& table, const std::string& note_type, int year) {
    const VisitWindow& window = window_for_year(table, year);
    return table.window_mean(window.id, note_type) / window.length_years();
}

// Hook for substituting the count distribution (e.g. resampling from
// empirical per-patient counts). Receives the per-year mean and cell
// coordinates; must be deterministic given the Rng.
using CountSampler =
    std::function<std::uint64_t(double mean, int year, const std::string& note_type, Rng&)>;

// Draws one count per (year, note type) cell. Draw order is fixed — year 10
// down to 1, note types in declaration order — and zero-mean cells never
// consume randomness, so adding an always-zero row cannot shift other cells.
inline std::map<std::pair<int, std::string>, std::uint64_t>
sample_visit_counts(const DistributionConfig& cfg, Rng& rng, const CountSampler& sampler = {}) {
    std::map<std::pair<int, std::string>, std::uint64_t> counts;
    for (int year = kMaxYearBeforeDx; year >= kMinYearBeforeDx; --year) {
        for (const char* note_type : kNoteTypeNames) {
            const double mean = per_year_rate(cfg.visits, note_type, year);
            std::uint64_t count = 0;
            if (mean > 0.0) {
                count = sampler ? sampler(mean, year, note_type, rng) : sample_poisson(mean, rng);
            }
            counts.emplace(std::make_pair(year, std::string(note_type)), count);
        }
    }
    return counts;
}

inline std::string make_note_id(const std::string& patient_id, std::size_t note_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "-N%04zu", note_index);
    return patient_id + buf;
}

inline VisitPlan build_visit_plan(const DistributionConfig& cfg, const Persona& persona,
                                  const CountSampler& sampler = {}) {
    VisitPlan plan;
    plan.patient_id = persona.patient_id;
    plan.seed = persona.seed;
    plan.assignments = persona.assignments;
    Rng rng(stream_seed(persona.seed, RngStream::visits));
    const auto counts = sample_visit_counts(cfg, rng, sampler);
    std::size_t note_index = 0;
    for (int year = kMaxYearBeforeDx; year >= kMinYearBeforeDx; --year) {
        const std::string& stage = stage_for_year(cfg.stage_map, year);
        for (const char* note_type : kNoteTypeNames) {
            const auto it = counts.find(std::make_pair(year, std::string(note_type)));
            const std::uint64_t count = it == counts.end() ? 0 : it->second;
            for (std::uint64_t k = 0; k < count; ++k) {
                NoteSpec note;
                note.note_id = make_note_id(persona.patient_id, note_index++);
                note.patient_id = persona.patient_id;
                note.year_before_dx = year;
                note.note_type = note_type;
                note.stage = stage;
                plan.notes.push_back(std::move(note));
            }
        }
    }
    return plan;
}

} // namespace cohortforge
