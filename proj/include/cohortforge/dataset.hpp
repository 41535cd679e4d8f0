#pragma once

// Dataset assembly: statistics over labeled sentences, proportion-preserving
// matched subsampling, and ratio-controlled training-set assembly. All
// sampling is deterministic under the caller-provided seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cohortforge/annotator.hpp"
#include "cohortforge/digest.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/records_types.hpp"
#include "cohortforge/rng.hpp"

namespace cohortforge {

struct DatasetStats {
    std::map<std::string, std::uint64_t> category_counts; // all five labels present
    std::uint64_t total_sentences = 0;
    std::uint64_t positive_sentences = 0; // at least one label
    std::uint64_t negative_sentences = 0; // no labels
    std::map<std::string, double> proportions; // count / sum of counts

    bool operator==(const DatasetStats&) const = default;
};

// Counts per category. By default a multi-label sentence contributes once to
// each of its labels (so counts may sum to more than the sentence total);
// with unique_sentences, each positive sentence contributes only to its
// primary label and counts partition the positives.
inline DatasetStats dataset_stats(const std::vector<LabeledSentence>& records,
                                  bool unique_sentences = false) {
    DatasetStats stats;
    for (const char* label : kAnnotationLabelIds) {
        stats.category_counts[label] = 0;
    }
    stats.total_sentences = records.size();
    for (const auto& record : records) {
        if (record.labels.empty()) {
            ++stats.negative_sentences;
            continue;
        }
        ++stats.positive_sentences;
        if (unique_sentences) {
            const std::string primary = primary_label(record.labels);
            const auto it = stats.category_counts.find(primary);
            if (it == stats.category_counts.end()) {
                throw ValidationError("dataset_stats: unknown label '" + primary +
                                      "' in sentence '" + record.sentence_id + "'");
            }
            it->second += 1;
        } else {
            std::set<std::string> seen;
            for (const auto& label : record.labels) {
                if (!seen.insert(label).second) {
                    continue;
                }
                const auto it = stats.category_counts.find(label);
                if (it == stats.category_counts.end()) {
                    throw ValidationError("dataset_stats: unknown label '" + label +
                                          "' in sentence '" + record.sentence_id + "'");
                }
                it->second += 1;
            }
        }
    }
    std::uint64_t label_total = 0;
    for (const auto& [label, count] : stats.category_counts) {
        label_total += count;
    }
    for (const auto& [label, count] : stats.category_counts) {
        stats.proportions[label] =
            label_total == 0 ? 0.0
                             : static_cast<double>(count) / static_cast<double>(label_total);
    }
    return stats;
}

// Selects a fixed-size subset of the positive sentences whose per-category
// composition (by primary label) matches the source as closely as an integer
// allocation allows. Per-category quotas are target_size x category
// proportion; fractional quotas are settled by largest remainder so the
// allocations sum exactly to target_size. Within a category, selection is
// uniform without replacement. Output preserves input record order.
inline std::vector<LabeledSentence> subsample_matched(const std::vector<LabeledSentence>& records,
                                                      std::uint64_t target_size,
                                                      std::uint64_t seed) {
    // Group positives by primary label, in canonical label order.
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].labels.empty()) {
            continue;
        }
        groups[primary_label(records[i].labels)].push_back(i);
    }
    std::vector<std::string> ordered_labels;
    for (const char* label : kAnnotationLabelIds) {
        if (groups.count(label)) {
            ordered_labels.push_back(label);
        }
    }
    for (const auto& [label, indices] : groups) {
        if (!is_annotation_label(label)) {
            throw ValidationError("subsample_matched: unknown label '" + label + "'");
        }
    }
    std::uint64_t positive_total = 0;
    for (const auto& [label, indices] : groups) {
        positive_total += indices.size();
    }
    if (target_size > positive_total) {
        throw ValidationError("subsample_matched: target size " + std::to_string(target_size) +
                              " exceeds positive sentence count " +
                              std::to_string(positive_total));
    }
    if (target_size < ordered_labels.size()) {
        throw ValidationError("subsample_matched: target size " + std::to_string(target_size) +
                              " is below the number of non-empty categories (" +
                              std::to_string(ordered_labels.size()) + ")");
    }
    if (target_size == 0) {
        return {};
    }

    // Largest-remainder allocation: floor every quota, then hand out the
    // leftover units to the largest fractional parts (ties by label order).
    struct Quota {
        std::string label;
        std::uint64_t floor_count;
        double fraction;
    };
    std::vector<Quota> quotas;
    std::uint64_t allocated = 0;
    for (const auto& label : ordered_labels) {
        const double share = static_cast<double>(groups[label].size()) /
                             static_cast<double>(positive_total);
        const double quota = static_cast<double>(target_size) * share;
        const auto floor_count = static_cast<std::uint64_t>(std::floor(quota));
        quotas.push_back({label, floor_count, quota - static_cast<double>(floor_count)});
        allocated += floor_count;
    }
    if (allocated > target_size) {
        throw ValidationError("subsample_matched: internal allocation overflow");
    }
    std::uint64_t leftover = target_size - allocated;
    std::vector<std::size_t> order(quotas.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return quotas[a].fraction > quotas[b].fraction;
    });
    std::map<std::string, std::uint64_t> allocation;
    for (const auto& quota : quotas) {
        allocation[quota.label] = quota.floor_count;
    }
    for (std::size_t i = 0; i < order.size() && leftover > 0; ++i, --leftover) {
        allocation[quotas[order[i]].label] += 1;
    }
    for (const auto& label : ordered_labels) {
        if (allocation[label] > groups[label].size()) {
            throw ValidationError("subsample_matched: allocation for '" + label +
                                  "' exceeds available records");
        }
    }

    // Uniform within-category selection, one generator shared across groups
    // walked in canonical order.
    Rng rng(seed);
    std::vector<std::size_t> selected;
    selected.reserve(target_size);
    for (const auto& label : ordered_labels) {
        const auto& indices = groups[label];
        const auto picks = sample_without_replacement(indices.size(), allocation[label], rng);
        for (const std::size_t pick : picks) {
            selected.push_back(indices[pick]);
        }
    }
    std::sort(selected.begin(), selected.end());
    std::vector<LabeledSentence> result;
    result.reserve(selected.size());
    for (const std::size_t index : selected) {
        result.push_back(records[index]);
    }
    return result;
}

// Combines all positives with ratio x |positives| negatives drawn uniformly
// without replacement from the pool, then shuffles deterministically.
inline std::vector<LabeledSentence> assemble_training_set(
    const std::vector<LabeledSentence>& positives,
    const std::vector<LabeledSentence>& negative_pool, double neg_to_pos_ratio,
    std::uint64_t seed) {
    if (!std::isfinite(neg_to_pos_ratio) || neg_to_pos_ratio < 0.0) {
        throw ValidationError("assemble_training_set: ratio must be finite and non-negative");
    }
    for (const auto& record : positives) {
        if (record.labels.empty()) {
            throw ValidationError("assemble_training_set: unlabeled record '" +
                                  record.sentence_id + "' in positives");
        }
    }
    for (const auto& record : negative_pool) {
        if (!record.labels.empty()) {
            throw ValidationError("assemble_training_set: labeled record '" + record.sentence_id +
                                  "' in negative pool");
        }
    }
    const auto need = static_cast<std::uint64_t>(
        std::llround(neg_to_pos_ratio * static_cast<double>(positives.size())));
    if (need > negative_pool.size()) {
        throw ValidationError("assemble_training_set: negative pool holds " +
                              std::to_string(negative_pool.size()) + " records but " +
                              std::to_string(need) + " are required");
    }
    std::vector<LabeledSentence> combined = positives;
    if (need > 0) {
        Rng pick_rng(derive_seed(seed, 0));
        auto picks = sample_without_replacement(negative_pool.size(), need, pick_rng);
        std::sort(picks.begin(), picks.end());
        for (const std::size_t pick : picks) {
            combined.push_back(negative_pool[pick]);
        }
    }
    Rng shuffle_rng(derive_seed(seed, 1));
    shuffle(combined, shuffle_rng);
    return combined;
}

// Stable short identifier for a dataset derived from its inputs.
inline std::string make_dataset_id(const std::string& config_digest, std::uint64_t master_seed,
                                   std::uint64_t cohort_size) {
    const std::string key = config_digest + ":" + std::to_string(master_seed) + ":" +
                            std::to_string(cohort_size);
    return sha256_hex(key).substr(0, 12);
}

} // namespace cohortforge
