#pragma once

// Semantic alignment: per note, draw how many symptom keywords to mention
// (zero-truncated Poisson around the year trend scaled by the density
// multiplier), then a category per mention from the weighted category
// distribution, then a keyword uniformly within that category.

#include <string>
#include <vector>

#include "cohortforge/config.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/rng.hpp"
#include "cohortforge/trajectory.hpp"

namespace cohortforge {

inline double expected_keyword_count(const DistributionConfig& cfg, int year) {
    check_year_range(year, "expected_keyword_count");
    return cfg.keyword_trend.per_year_mean.at(year) * cfg.keyword_trend.density_multiplier;
}

// Count of keyword mentions for one note: Poisson truncated to >= 1 so every
// note carries at least one symptom mention.
inline std::uint64_t sample_keyword_count(const DistributionConfig& cfg, int year, Rng& rng) {
    return sample_poisson_min1(expected_keyword_count(cfg, year), rng);
}

// A weighted category with its keyword pool; the generic unit the two-stage
// sampler operates on, independent of any full pipeline configuration.
struct CategoryEntry {
    std::string name;
    double weight = 0.0;
    std::vector<std::string> keywords;
};

// Stage 1: pick a category with probability weight / sum(weights), walking
// entries in listed order.
inline const CategoryEntry& sample_weighted_category(const std::vector<CategoryEntry>& entries,
                                                     Rng& rng) {
    if (entries.empty()) {
        throw ValidationError("sample_weighted_category: no categories");
    }
    double total = 0.0;
    for (const auto& entry : entries) {
        if (!(entry.weight > 0.0)) {
            throw ValidationError("sample_weighted_category: non-positive weight for '" +
                                  entry.name + "'");
        }
        total += entry.weight;
    }
    const double u = rng.next_double() * total;
    double cumulative = 0.0;
    for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
        cumulative += entries[i].weight;
        if (u < cumulative) {
            return entries[i];
        }
    }
    return entries.back();
}

// Stage 2: pick a keyword uniformly within the category.
inline const std::string& sample_uniform_keyword(const CategoryEntry& entry, Rng& rng) {
    if (entry.keywords.empty()) {
        throw ValidationError("sample_uniform_keyword: category '" + entry.name +
                              "' has no keywords");
    }
    return entry.keywords[static_cast<std::size_t>(rng.next_below(entry.keywords.size()))];
}

inline KeywordMention sample_mention(const std::vector<CategoryEntry>& entries, Rng& rng) {
    const CategoryEntry& entry = sample_weighted_category(entries, rng);
    return KeywordMention{entry.name, sample_uniform_keyword(entry, rng)};
}

// The configured lexicon and weights flattened into canonical category order.
inline std::vector<CategoryEntry> category_entries(const DistributionConfig& cfg) {
    std::vector<CategoryEntry> entries;
    entries.reserve(kLexiconCategories.size());
    for (const char* category : kLexiconCategories) {
        entries.push_back(CategoryEntry{category, cfg.category_weights.weights.at(category),
                                        cfg.lexicon.category_keywords(category)});
    }
    return entries;
}

// Single category draw with marginals equal to the normalized weights.
inline std::string sample_category(const DistributionConfig& cfg, Rng& rng) {
    return sample_weighted_category(category_entries(cfg), rng).name;
}

// Single uniform keyword draw within a named category.
inline std::string sample_keyword(const DistributionConfig& cfg, const std::string& category,
                                  Rng& rng) {
    const auto& keywords = cfg.lexicon.category_keywords(category);
    CategoryEntry entry{category, 1.0, keywords};
    return sample_uniform_keyword(entry, rng);
}

// Fills every note of the plan with sampled mentions. Randomness comes from
// the plan's own seed on a dedicated stream, so mention sampling is
// independent of how the visit counts were drawn.
inline VisitPlan populate_mentions(const DistributionConfig& cfg, const VisitPlan& plan) {
    VisitPlan out = plan;
    const auto entries = category_entries(cfg);
    Rng rng(stream_seed(plan.seed, RngStream::mentions));
    for (auto& note : out.notes) {
        if (!note.mentions.empty()) {
            throw ValidationError("populate_mentions: note '" + note.note_id +
                                  "' already has mentions");
        }
        const std::uint64_t count = sample_keyword_count(cfg, note.year_before_dx, rng);
        note.mentions.reserve(count);
        for (std::uint64_t k = 0; k < count; ++k) {
            note.mentions.push_back(sample_mention(entries, rng));
        }
    }
    return out;
}

} // namespace cohortforge
