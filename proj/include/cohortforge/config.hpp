#pragma once

// Configuration model: every statistical table the pipeline consumes, with
// load-time validation, canonical serialization, and digesting. Config
// objects are immutable after validation and safe to share across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohortforge/digest.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/version.hpp"

namespace cohortforge {

// ---------------------------------------------------------------------------
// Closed vocabularies
// ---------------------------------------------------------------------------

enum class FactorGroup {
    demographic_socioeconomic,
    medical_biological,
    lifestyle_environmental,
    psychosocial_stress,
    access_to_care,
    developmental_lifecourse,
};

inline constexpr std::array<const char*, 6> kFactorGroupNames = {
    "demographic_socioeconomic", "medical_biological",  "lifestyle_environmental",
    "psychosocial_stress",       "access_to_care",      "developmental_lifecourse",
};

inline const char* to_string(FactorGroup g) {
    return kFactorGroupNames[static_cast<std::size_t>(g)];
}

inline FactorGroup factor_group_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kFactorGroupNames.size(); ++i) {
        if (name == kFactorGroupNames[i]) {
            return static_cast<FactorGroup>(i);
        }
    }
    throw LookupError("unknown factor group: " + std::string(name));
}

// The six symptom-keyword categories, in canonical sampling order.
inline constexpr std::array<const char*, 6> kLexiconCategories = {
    "speech_language",       "memory",
    "learning_perception",   "assistance_needed",
    "physiological_changes", "neuropsychiatric_symptoms",
};

enum class NoteType {
    primary_care,
    neurology,
    memory_clinic,
    neuropsychology,
    geriatrics,
    psychiatry_mental_health,
    emergency,
    hbpc,
};

inline constexpr std::array<const char*, 8> kNoteTypeNames = {
    "primary_care", "neurology", "memory_clinic",            "neuropsychology",
    "geriatrics",   "psychiatry_mental_health", "emergency", "hbpc",
};

inline const char* to_string(NoteType t) {
    return kNoteTypeNames[static_cast<std::size_t>(t)];
}

inline NoteType note_type_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kNoteTypeNames.size(); ++i) {
        if (name == kNoteTypeNames[i]) {
            return static_cast<NoteType>(i);
        }
    }
    throw LookupError("unknown note type: " + std::string(name));
}

// The four disease-stage labels the stage map may use.
inline constexpr std::array<const char*, 4> kStageVocabulary = {
    "Early prodromal stage",
    "Mild cognitive impairment stage",
    "Mild dementia stage",
    "Moderate dementia stage",
};

inline constexpr int kMinYearBeforeDx = 1;
inline constexpr int kMaxYearBeforeDx = 10;

// ---------------------------------------------------------------------------
// Table types
// ---------------------------------------------------------------------------

struct FactorCategory {
    std::string label;
    double probability = 0.0;

    bool operator==(const FactorCategory&) const = default;
};

struct FactorSpec {
    std::string name;
    FactorGroup group = FactorGroup::demographic_socioeconomic;
    std::vector<FactorCategory> categories; // order defines the sampling CDF

    bool operator==(const FactorSpec&) const = default;
};

struct KeywordLexicon {
    // Keyed by category name; must hold exactly the six canonical categories.
    std::map<std::string, std::vector<std::string>> keywords;

    const std::vector<std::string>& category_keywords(const std::string& category) const {
        auto it = keywords.find(category);
        if (it == keywords.end()) {
            throw LookupError("unknown lexicon category: " + category);
        }
        return it->second;
    }

    std::size_t total_keywords() const {
        std::size_t n = 0;
        for (const auto& [category, list] : keywords) {
            n += list.size();
        }
        return n;
    }

    bool operator==(const KeywordLexicon&) const = default;
};

struct VisitWindow {
    std::string id;
    int year_hi = 0; // inclusive, farther from diagnosis
    int year_lo = 0; // inclusive, closer to diagnosis

    int length_years() const { return year_hi - year_lo + 1; }
    bool contains(int year) const { return year >= year_lo && year <= year_hi; }

    bool operator==(const VisitWindow&) const = default;
};

struct VisitTypeTable {
    std::vector<VisitWindow> windows;
    // means[window_id][note_type] = expected notes per patient per window.
    std::map<std::string, std::map<std::string, double>> means;

    double window_mean(const std::string& window_id, const std::string& note_type) const {
        auto w = means.find(window_id);
        if (w == means.end()) {
            throw LookupError("unknown visit window: " + window_id);
        }
        auto t = w->second.find(note_type);
        if (t == w->second.end()) {
            throw LookupError("unknown note type: " + note_type);
        }
        return t->second;
    }

    bool operator==(const VisitTypeTable&) const = default;
};

struct KeywordTrendTable {
    std::map<int, double> per_year_mean; // keys 1..10
    double density_multiplier = 5.0;

    bool operator==(const KeywordTrendTable&) const = default;
};

struct CategoryWeightTable {
    std::map<std::string, double> weights; // relative to memory = 1.0

    bool operator==(const CategoryWeightTable&) const = default;
};

struct StageMap {
    std::map<int, std::string> stage_by_year; // keys 1..10

    bool operator==(const StageMap&) const = default;
};

struct GenerationParams {
    std::string backend = "mock"; // "mock" or "http"
    std::string model;            // backend model descriptor (may be empty)
    double temperature = 0.7;
    int max_retries = 3;
    int concurrency = 4;
    int max_output_tokens = 1500;

    bool operator==(const GenerationParams&) const = default;
};

struct DistributionConfig {
    std::string version = kConfigVersion;
    std::vector<FactorSpec> factors;
    KeywordLexicon lexicon;
    VisitTypeTable visits;
    KeywordTrendTable keyword_trend;
    CategoryWeightTable category_weights;
    StageMap stage_map;
    GenerationParams generation_params;

    bool operator==(const DistributionConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Normalization helpers
// ---------------------------------------------------------------------------

// Scale positive weights into a probability map summing to 1 (within 1e-12).
inline std::map<std::string, double> normalize_weights(const std::map<std::string, double>& weights) {
    if (weights.empty()) {
        throw ValidationError("normalize_weights: empty weight map");
    }
    double total = 0.0;
    for (const auto& [name, w] : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ValidationError("normalize_weights: weight for '" + name +
                                  "' must be positive and finite");
        }
        total += w;
    }
    std::map<std::string, double> out;
    for (const auto& [name, w] : weights) {
        out[name] = w / total;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

// Probability sums within this of 1 are accepted and renormalized; beyond it
// the config is rejected. Tables are hand-rounded percentages, so tiny
// shortfalls are expected.
constexpr double kRenormalizeTolerance = 1e-6;
// Deviations below this are floating-point noise; left untouched so that
// serialize/load round trips preserve field values exactly.
constexpr double kExactTolerance = 1e-12;

inline void validate_factor(FactorSpec& factor) {
    if (factor.name.empty()) {
        throw ValidationError("factor with empty name");
    }
    if (factor.categories.empty()) {
        throw ValidationError("factor '" + factor.name + "' has no categories");
    }
    std::set<std::string> labels;
    double sum = 0.0;
    for (const auto& cat : factor.categories) {
        if (cat.label.empty()) {
            throw ValidationError("factor '" + factor.name + "' has an empty category label");
        }
        if (!labels.insert(cat.label).second) {
            throw ValidationError("factor '" + factor.name + "' has duplicate category label '" +
                                  cat.label + "'");
        }
        if (!std::isfinite(cat.probability) || cat.probability < 0.0 || cat.probability > 1.0) {
            throw ValidationError("factor '" + factor.name + "' category '" + cat.label +
                                  "' has probability outside [0,1]");
        }
        sum += cat.probability;
    }
    const double deviation = std::fabs(sum - 1.0);
    if (deviation > kRenormalizeTolerance) {
        std::ostringstream msg;
        msg << "factor '" << factor.name << "' probabilities sum to " << sum
            << ", deviating more than " << kRenormalizeTolerance << " from 1";
        throw ValidationError(msg.str());
    }
    if (deviation > kExactTolerance) {
        for (auto& cat : factor.categories) {
            cat.probability /= sum;
        }
    }
}

inline void validate_lexicon(const KeywordLexicon& lexicon) {
    for (const char* category : kLexiconCategories) {
        auto it = lexicon.keywords.find(category);
        if (it == lexicon.keywords.end()) {
            throw SchemaError(std::string("lexicon missing category '") + category + "'");
        }
        if (it->second.empty()) {
            throw ValidationError(std::string("lexicon category '") + category + "' is empty");
        }
    }
    if (lexicon.keywords.size() != kLexiconCategories.size()) {
        throw SchemaError("lexicon must contain exactly the six canonical categories");
    }
    std::map<std::string, std::string> owner;
    for (const auto& [category, list] : lexicon.keywords) {
        for (const auto& kw : list) {
            if (kw.empty()) {
                throw ValidationError("lexicon category '" + category + "' has an empty keyword");
            }
            auto [it, inserted] = owner.emplace(kw, category);
            if (!inserted) {
                throw ValidationError("keyword '" + kw + "' appears in both '" + it->second +
                                      "' and '" + category + "'");
            }
        }
    }
}

inline void validate_visits(const VisitTypeTable& visits) {
    if (visits.windows.empty()) {
        throw ValidationError("visit table has no windows");
    }
    std::set<std::string> ids;
    std::array<int, kMaxYearBeforeDx + 1> covered{}; // index = year
    for (const auto& w : visits.windows) {
        if (w.id.empty()) {
            throw ValidationError("visit window with empty id");
        }
        if (!ids.insert(w.id).second) {
            throw ValidationError("duplicate visit window id '" + w.id + "'");
        }
        if (w.year_lo < kMinYearBeforeDx || w.year_hi > kMaxYearBeforeDx || w.year_lo > w.year_hi) {
            throw ValidationError("visit window '" + w.id + "' has an invalid year range");
        }
        for (int y = w.year_lo; y <= w.year_hi; ++y) {
            covered[static_cast<std::size_t>(y)] += 1;
        }
    }
    for (int y = kMinYearBeforeDx; y <= kMaxYearBeforeDx; ++y) {
        if (covered[static_cast<std::size_t>(y)] != 1) {
            throw ValidationError("visit windows must cover year " + std::to_string(y) +
                                  " exactly once");
        }
    }
    if (visits.means.size() != ids.size()) {
        throw SchemaError("visit means must list exactly the declared windows");
    }
    for (const auto& [window_id, row] : visits.means) {
        if (!ids.count(window_id)) {
            throw SchemaError("visit means reference unknown window '" + window_id + "'");
        }
        if (row.size() != kNoteTypeNames.size()) {
            throw SchemaError("visit means for window '" + window_id +
                              "' must list exactly the known note types");
        }
        for (const char* note_type : kNoteTypeNames) {
            auto it = row.find(note_type);
            if (it == row.end()) {
                throw SchemaError("visit means for window '" + window_id + "' missing note type '" +
                                  note_type + "'");
            }
            if (!std::isfinite(it->second) || it->second < 0.0) {
                throw ValidationError("visit mean for (" + window_id + ", " + note_type +
                                      ") must be finite and >= 0");
            }
        }
    }
    for (const auto& w : visits.windows) {
        if (!visits.means.count(w.id)) {
            throw SchemaError("visit means missing window '" + w.id + "'");
        }
    }
}

inline void validate_trend(const KeywordTrendTable& trend) {
    if (trend.per_year_mean.size() != static_cast<std::size_t>(kMaxYearBeforeDx)) {
        throw SchemaError("keyword trend must cover exactly years 1..10");
    }
    for (int y = kMinYearBeforeDx; y <= kMaxYearBeforeDx; ++y) {
        auto it = trend.per_year_mean.find(y);
        if (it == trend.per_year_mean.end()) {
            throw SchemaError("keyword trend missing year " + std::to_string(y));
        }
        if (!(it->second > 0.0) || !std::isfinite(it->second)) {
            throw ValidationError("keyword trend for year " + std::to_string(y) +
                                  " must be positive");
        }
    }
    if (!(trend.density_multiplier > 0.0) || !std::isfinite(trend.density_multiplier)) {
        throw ValidationError("density multiplier must be positive");
    }
}

inline void validate_category_weights(const CategoryWeightTable& table) {
    if (table.weights.size() != kLexiconCategories.size()) {
        throw SchemaError("category weights must list exactly the six lexicon categories");
    }
    for (const char* category : kLexiconCategories) {
        auto it = table.weights.find(category);
        if (it == table.weights.end()) {
            throw SchemaError(std::string("category weights missing '") + category + "'");
        }
        if (!(it->second > 0.0) || !std::isfinite(it->second)) {
            throw ValidationError(std::string("category weight for '") + category +
                                  "' must be positive");
        }
    }
}

inline void validate_stage_map(const StageMap& stages) {
    if (stages.stage_by_year.size() != static_cast<std::size_t>(kMaxYearBeforeDx)) {
        throw SchemaError("stage map must cover exactly years 1..10");
    }
    for (int y = kMinYearBeforeDx; y <= kMaxYearBeforeDx; ++y) {
        auto it = stages.stage_by_year.find(y);
        if (it == stages.stage_by_year.end()) {
            throw SchemaError("stage map missing year " + std::to_string(y));
        }
        bool known = false;
        for (const char* stage : kStageVocabulary) {
            if (it->second == stage) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ValidationError("stage map year " + std::to_string(y) + " uses unknown label '" +
                                  it->second + "'");
        }
    }
}

inline void validate_generation_params(const GenerationParams& params) {
    if (params.backend != "mock" && params.backend != "http") {
        throw ValidationError("generation backend must be 'mock' or 'http', got '" +
                              params.backend + "'");
    }
    if (!(params.temperature >= 0.0) || !std::isfinite(params.temperature)) {
        throw ValidationError("temperature must be finite and >= 0");
    }
    if (params.max_retries < 0) {
        throw ValidationError("max_retries must be >= 0");
    }
    if (params.concurrency < 1) {
        throw ValidationError("concurrency must be >= 1");
    }
    if (params.max_output_tokens < 1) {
        throw ValidationError("max_output_tokens must be >= 1");
    }
}

} // namespace detail

// Validates the whole config in place. Probability vectors whose sums deviate
// from 1 by at most 1e-6 are renormalized; larger deviations are errors.
inline void validate_config(DistributionConfig& cfg) {
    if (cfg.version != kConfigVersion) {
        throw SchemaError("unknown config version '" + cfg.version + "' (expected '" +
                          kConfigVersion + "')");
    }
    std::set<std::string> names;
    for (auto& factor : cfg.factors) {
        detail::validate_factor(factor);
        if (!names.insert(factor.name).second) {
            throw ValidationError("duplicate factor name '" + factor.name + "'");
        }
    }
    detail::validate_lexicon(cfg.lexicon);
    detail::validate_visits(cfg.visits);
    detail::validate_trend(cfg.keyword_trend);
    detail::validate_category_weights(cfg.category_weights);
    detail::validate_stage_map(cfg.stage_map);
    detail::validate_generation_params(cfg.generation_params);
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const char* context) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw SchemaError(std::string(context) + ": missing field '" + key + "'");
    }
    return *it;
}

inline int parse_year_key(const std::string& key, const char* context) {
    try {
        std::size_t used = 0;
        const int year = std::stoi(key, &used);
        if (used != key.size()) {
            throw std::invalid_argument(key);
        }
        return year;
    } catch (const std::exception&) {
        throw SchemaError(std::string(context) + ": non-numeric year key '" + key + "'");
    }
}

} // namespace detail

inline nlohmann::json config_to_json(const DistributionConfig& cfg) {
    nlohmann::json j;
    j["version"] = cfg.version;
    j["factors"] = nlohmann::json::array();
    for (const auto& factor : cfg.factors) {
        nlohmann::json jf;
        jf["name"] = factor.name;
        jf["group"] = to_string(factor.group);
        jf["categories"] = nlohmann::json::array();
        for (const auto& cat : factor.categories) {
            jf["categories"].push_back({{"label", cat.label}, {"probability", cat.probability}});
        }
        j["factors"].push_back(std::move(jf));
    }
    j["lexicon"] = cfg.lexicon.keywords;
    nlohmann::json jw = nlohmann::json::array();
    for (const auto& w : cfg.visits.windows) {
        jw.push_back({{"id", w.id}, {"years", {w.year_hi, w.year_lo}}});
    }
    j["visits"] = {{"windows", std::move(jw)}, {"means", cfg.visits.means}};
    nlohmann::json jt;
    for (const auto& [year, mean] : cfg.keyword_trend.per_year_mean) {
        jt[std::to_string(year)] = mean;
    }
    j["keyword_trend"] = {{"per_year_mean", std::move(jt)},
                          {"density_multiplier", cfg.keyword_trend.density_multiplier}};
    j["category_weights"] = cfg.category_weights.weights;
    nlohmann::json js;
    for (const auto& [year, stage] : cfg.stage_map.stage_by_year) {
        js[std::to_string(year)] = stage;
    }
    j["stage_map"] = std::move(js);
    j["generation_params"] = {{"backend", cfg.generation_params.backend},
                              {"model", cfg.generation_params.model},
                              {"temperature", cfg.generation_params.temperature},
                              {"max_retries", cfg.generation_params.max_retries},
                              {"concurrency", cfg.generation_params.concurrency},
                              {"max_output_tokens", cfg.generation_params.max_output_tokens}};
    return j;
}

// Canonical text form: 2-space-indented JSON with alphabetically ordered keys.
inline std::string serialize_config(const DistributionConfig& cfg) {
    return config_to_json(cfg).dump(2) + "\n";
}

// Stable content digest of a validated config.
inline std::string config_digest(const DistributionConfig& cfg) {
    return sha256_hex(serialize_config(cfg));
}

inline DistributionConfig config_from_json(const nlohmann::json& j) {
    DistributionConfig cfg;
    try {
        cfg.version = detail::require_field(j, "version", "config").get<std::string>();
        for (const auto& jf : detail::require_field(j, "factors", "config")) {
            FactorSpec factor;
            factor.name = detail::require_field(jf, "name", "factor").get<std::string>();
            factor.group = factor_group_from_string(
                detail::require_field(jf, "group", "factor").get<std::string>());
            for (const auto& jc : detail::require_field(jf, "categories", "factor")) {
                FactorCategory cat;
                cat.label = detail::require_field(jc, "label", "factor category").get<std::string>();
                cat.probability =
                    detail::require_field(jc, "probability", "factor category").get<double>();
                factor.categories.push_back(std::move(cat));
            }
            cfg.factors.push_back(std::move(factor));
        }
        cfg.lexicon.keywords = detail::require_field(j, "lexicon", "config")
                                   .get<std::map<std::string, std::vector<std::string>>>();
        const auto& jv = detail::require_field(j, "visits", "config");
        for (const auto& jw : detail::require_field(jv, "windows", "visits")) {
            VisitWindow w;
            w.id = detail::require_field(jw, "id", "visit window").get<std::string>();
            const auto& years = detail::require_field(jw, "years", "visit window");
            if (!years.is_array() || years.size() != 2) {
                throw SchemaError("visit window 'years' must be [hi, lo]");
            }
            w.year_hi = years[0].get<int>();
            w.year_lo = years[1].get<int>();
            cfg.visits.windows.push_back(std::move(w));
        }
        cfg.visits.means = detail::require_field(jv, "means", "visits")
                               .get<std::map<std::string, std::map<std::string, double>>>();
        const auto& jtrend = detail::require_field(j, "keyword_trend", "config");
        for (const auto& [key, value] :
             detail::require_field(jtrend, "per_year_mean", "keyword_trend").items()) {
            cfg.keyword_trend.per_year_mean[detail::parse_year_key(key, "keyword_trend")] =
                value.get<double>();
        }
        cfg.keyword_trend.density_multiplier =
            detail::require_field(jtrend, "density_multiplier", "keyword_trend").get<double>();
        cfg.category_weights.weights = detail::require_field(j, "category_weights", "config")
                                           .get<std::map<std::string, double>>();
        for (const auto& [key, value] : detail::require_field(j, "stage_map", "config").items()) {
            cfg.stage_map.stage_by_year[detail::parse_year_key(key, "stage_map")] =
                value.get<std::string>();
        }
        const auto& jg = detail::require_field(j, "generation_params", "config");
        cfg.generation_params.backend =
            detail::require_field(jg, "backend", "generation_params").get<std::string>();
        cfg.generation_params.model =
            detail::require_field(jg, "model", "generation_params").get<std::string>();
        cfg.generation_params.temperature =
            detail::require_field(jg, "temperature", "generation_params").get<double>();
        cfg.generation_params.max_retries =
            detail::require_field(jg, "max_retries", "generation_params").get<int>();
        cfg.generation_params.concurrency =
            detail::require_field(jg, "concurrency", "generation_params").get<int>();
        cfg.generation_params.max_output_tokens =
            detail::require_field(jg, "max_output_tokens", "generation_params").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("config does not match schema: ") + e.what());
    } catch (const LookupError& e) {
        throw SchemaError(std::string("config does not match schema: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

inline DistributionConfig load_config_string(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed config: ") + e.what());
    }
    return config_from_json(j);
}

inline DistributionConfig load_config(std::istream& in) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_config_string(buffer.str());
}

inline DistributionConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open config file: " + path);
    }
    return load_config(in);
}

} // namespace cohortforge
