#pragma once

// Fidelity validation: quantifies how closely sampled artifacts match the
// configured target distributions. Checks are pure functions over their
// inputs; reports are reproducible and JSON-serializable.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohortforge/config.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/persona.hpp"
#include "cohortforge/semantic.hpp"
#include "cohortforge/stats_math.hpp"
#include "cohortforge/trajectory.hpp"

namespace cohortforge {

struct DivergenceMetrics {
    double l1 = 0.0;         // sum of |observed frequency - expected probability|
    double chi_square = 0.0; // over labels with expected probability > 0
    double p_value = 1.0;    // upper chi-square tail at (k - 1) degrees of freedom
    std::uint64_t observed_total = 0;
    double impossible_mass = 0.0; // observed frequency on zero-probability labels
    bool impossible = false;

    bool operator==(const DivergenceMetrics&) const = default;
};

// Compares observed counts against expected probabilities over an identical
// label set.
inline DivergenceMetrics compare_categorical(const std::map<std::string, std::uint64_t>& observed,
                                             const std::map<std::string, double>& expected) {
    if (observed.size() != expected.size()) {
        throw ValidationError("compare_categorical: observed and expected label sets differ");
    }
    double expected_sum = 0.0;
    std::uint64_t total = 0;
    for (const auto& [label, prob] : expected) {
        if (!observed.count(label)) {
            throw ValidationError("compare_categorical: label '" + label +
                                  "' missing from observed counts");
        }
        if (!std::isfinite(prob) || prob < 0.0) {
            throw ValidationError("compare_categorical: negative expected probability for '" +
                                  label + "'");
        }
        expected_sum += prob;
    }
    if (std::fabs(expected_sum - 1.0) > 1e-6) {
        throw ValidationError("compare_categorical: expected probabilities must sum to 1");
    }
    for (const auto& [label, count] : observed) {
        total += count;
    }
    if (total == 0) {
        throw ValidationError("compare_categorical: no observations");
    }
    DivergenceMetrics metrics;
    metrics.observed_total = total;
    const double n = static_cast<double>(total);
    std::size_t support = 0;
    for (const auto& [label, prob] : expected) {
        const double count = static_cast<double>(observed.at(label));
        const double freq = count / n;
        metrics.l1 += std::fabs(freq - prob);
        if (prob > 0.0) {
            ++support;
            const double expected_count = n * prob;
            const double delta = count - expected_count;
            metrics.chi_square += delta * delta / expected_count;
        } else if (count > 0.0) {
            metrics.impossible = true;
            metrics.impossible_mass += freq;
        }
    }
    if (support >= 2) {
        metrics.p_value = chi_square_tail(metrics.chi_square, static_cast<double>(support - 1));
    } else {
        metrics.p_value = 1.0;
    }
    return metrics;
}

struct FidelityCheck {
    std::string name;
    std::string target;             // human-readable description of the target
    double target_value = 0.0;      // numeric target where one exists
    double observed_value = 0.0;    // the statistic the tolerance applies to
    double tolerance = 0.0;
    bool relative = false;          // whether tolerance is relative to the target
    std::optional<DivergenceMetrics> metrics;
    bool passed = false;
    bool skipped = false; // skipped checks do not affect the overall verdict
};

struct FidelityReport {
    std::vector<FidelityCheck> checks;

    bool overall_pass() const {
        for (const auto& check : checks) {
            if (!check.skipped && !check.passed) {
                return false;
            }
        }
        return true;
    }

    void append(FidelityReport other) {
        for (auto& check : other.checks) {
            checks.push_back(std::move(check));
        }
    }
};

inline nlohmann::json to_json(const FidelityReport& report) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& check : report.checks) {
        nlohmann::json jc = {{"name", check.name},
                             {"target", check.target},
                             {"target_value", check.target_value},
                             {"observed_value", check.observed_value},
                             {"tolerance", check.tolerance},
                             {"relative", check.relative},
                             {"passed", check.passed},
                             {"skipped", check.skipped}};
        if (check.metrics) {
            jc["metrics"] = {{"l1", check.metrics->l1},
                             {"chi_square", check.metrics->chi_square},
                             {"p_value", check.metrics->p_value},
                             {"observed_total", check.metrics->observed_total},
                             {"impossible_mass", check.metrics->impossible_mass},
                             {"impossible", check.metrics->impossible}};
        }
        checks.push_back(std::move(jc));
    }
    return {{"checks", std::move(checks)}, {"overall_pass", report.overall_pass()}};
}

// Default tolerances are sized for Monte-Carlo noise at the documented sample
// sizes (100k personas / plans, 10k notes per year, 1M mentions); they are
// engineering choices, overridable from the CLI.
struct FidelityTolerances {
    double cohort_l1 = 0.01;
    double category_l1 = 0.02;
    double count_relative = 0.02;
    double visit_relative = 0.05;
};

// One check per factor: empirical category frequencies vs configured
// probabilities, pass when L1 distance is within tolerance.
inline FidelityReport validate_cohort(const std::vector<Persona>& personas,
                                      const DistributionConfig& cfg,
                                      const FidelityTolerances& tol = {}) {
    if (personas.empty()) {
        throw ValidationError("validate_cohort: empty cohort");
    }
    FidelityReport report;
    for (const auto& factor : cfg.factors) {
        std::map<std::string, std::uint64_t> observed;
        std::map<std::string, double> expected;
        for (const auto& category : factor.categories) {
            observed[category.label] = 0;
            expected[category.label] = category.probability;
        }
        for (const auto& persona : personas) {
            const auto it = persona.assignments.find(factor.name);
            if (it == persona.assignments.end()) {
                throw ValidationError("validate_cohort: persona '" + persona.patient_id +
                                      "' missing factor '" + factor.name + "'");
            }
            const auto slot = observed.find(it->second);
            if (slot == observed.end()) {
                throw ValidationError("validate_cohort: persona '" + persona.patient_id +
                                      "' has unknown label '" + it->second + "' for factor '" +
                                      factor.name + "'");
            }
            slot->second += 1;
        }
        FidelityCheck check;
        check.name = "factor:" + factor.name;
        check.target = "configured prevalence distribution";
        check.tolerance = tol.cohort_l1;
        check.metrics = compare_categorical(observed, expected);
        check.observed_value = check.metrics->l1;
        check.passed = check.metrics->l1 <= tol.cohort_l1 && !check.metrics->impossible;
        report.checks.push_back(std::move(check));
    }
    return report;
}

// Per-year mean mention count vs multiplier-scaled trend, plus pooled
// category proportions vs normalized weights. Years with no notes are
// reported as skipped.
inline FidelityReport validate_keyword_alignment(const std::vector<VisitPlan>& plans,
                                                 const DistributionConfig& cfg,
                                                 const FidelityTolerances& tol = {}) {
    FidelityReport report;
    std::map<int, std::uint64_t> note_count_by_year;
    std::map<int, std::uint64_t> mention_count_by_year;
    std::map<std::string, std::uint64_t> category_counts;
    for (const char* category : kLexiconCategories) {
        category_counts[category] = 0;
    }
    for (const auto& plan : plans) {
        for (const auto& note : plan.notes) {
            note_count_by_year[note.year_before_dx] += 1;
            mention_count_by_year[note.year_before_dx] += note.mentions.size();
            for (const auto& mention : note.mentions) {
                const auto it = category_counts.find(mention.category);
                if (it == category_counts.end()) {
                    throw ValidationError("validate_keyword_alignment: unknown category '" +
                                          mention.category + "' in note '" + note.note_id + "'");
                }
                it->second += 1;
            }
        }
    }
    for (int year = kMinYearBeforeDx; year <= kMaxYearBeforeDx; ++year) {
        FidelityCheck check;
        check.name = "keyword_count:year_" + std::to_string(year);
        check.target = "density multiplier x per-year trend mean";
        check.target_value = expected_keyword_count(cfg, year);
        check.tolerance = tol.count_relative;
        check.relative = true;
        const auto notes = note_count_by_year.find(year);
        if (notes == note_count_by_year.end() || notes->second == 0) {
            check.skipped = true;
            check.passed = true;
        } else {
            check.observed_value = static_cast<double>(mention_count_by_year[year]) /
                                   static_cast<double>(notes->second);
            check.passed = std::fabs(check.observed_value - check.target_value) <=
                           tol.count_relative * check.target_value;
        }
        report.checks.push_back(std::move(check));
    }
    FidelityCheck categories;
    categories.name = "keyword_categories";
    categories.target = "normalized category weights";
    categories.tolerance = tol.category_l1;
    std::uint64_t total_mentions = 0;
    for (const auto& [category, count] : category_counts) {
        total_mentions += count;
    }
    if (total_mentions == 0) {
        categories.skipped = true;
        categories.passed = true;
    } else {
        categories.metrics =
            compare_categorical(category_counts, normalize_weights(cfg.category_weights.weights));
        categories.observed_value = categories.metrics->l1;
        categories.passed = categories.metrics->l1 <= tol.category_l1;
    }
    report.checks.push_back(std::move(categories));
    return report;
}

// Per-(window, note type) mean notes per patient vs the configured table.
// Zero-mean cells are hard constraints: any observation fails them.
inline FidelityReport validate_visit_alignment(const std::vector<VisitPlan>& plans,
                                               const DistributionConfig& cfg,
                                               const FidelityTolerances& tol = {}) {
    if (plans.empty()) {
        throw ValidationError("validate_visit_alignment: empty plan set");
    }
    std::map<std::string, std::map<std::string, std::uint64_t>> observed;
    for (const auto& plan : plans) {
        for (const auto& note : plan.notes) {
            const auto& window = window_for_year(cfg.visits, note.year_before_dx);
            observed[window.id][note.note_type] += 1;
        }
    }
    FidelityReport report;
    const double n = static_cast<double>(plans.size());
    for (const auto& window : cfg.visits.windows) {
        for (const char* note_type : kNoteTypeNames) {
            FidelityCheck check;
            check.name = "visits:" + window.id + "/" + note_type;
            check.target = "expected notes per patient per window";
            check.target_value = cfg.visits.window_mean(window.id, note_type);
            check.tolerance = tol.visit_relative;
            check.relative = true;
            std::uint64_t count = 0;
            const auto w = observed.find(window.id);
            if (w != observed.end()) {
                const auto t = w->second.find(note_type);
                if (t != w->second.end()) {
                    count = t->second;
                }
            }
            check.observed_value = static_cast<double>(count) / n;
            if (check.target_value == 0.0) {
                check.passed = count == 0;
            } else {
                check.passed = std::fabs(check.observed_value - check.target_value) <=
                               tol.visit_relative * check.target_value;
            }
            report.checks.push_back(std::move(check));
        }
    }
    return report;
}

} // namespace cohortforge
