#pragma once

// The shipped default tables: population prevalences for demographics, risk
// factors and social determinants; the six-category symptom keyword lexicon;
// visit-frequency, keyword-trend, and category-weight tables; and the
// year-to-stage map. These defaults are the statistical targets every
// fidelity check measures against.
//
// The four psychiatric-diagnosis factors are published without an explicit
// healthy remainder; a "None" category completes each so the probabilities
// form a proper distribution.

#include <utility>

#include "cohortforge/config.hpp"

namespace cohortforge {

namespace detail {

inline FactorSpec make_factor(std::string name, FactorGroup group,
                              std::initializer_list<FactorCategory> categories) {
    FactorSpec f;
    f.name = std::move(name);
    f.group = group;
    f.categories = categories;
    return f;
}

} // namespace detail

inline DistributionConfig default_config() {
    using detail::make_factor;
    using enum FactorGroup;

    DistributionConfig cfg;
    cfg.version = kConfigVersion;

    cfg.factors = {
        // --- demographic & socioeconomic ---
        make_factor("age", demographic_socioeconomic,
                    {{"<65 (early-onset)", 0.08}, {"65-74", 0.22}, {"75-84", 0.45}, {">=85", 0.25}}),
        make_factor("gender", demographic_socioeconomic,
                    {{"Male", 0.42}, {"Female", 0.56}, {"Non-binary/Other", 0.02}}),
        make_factor("race", demographic_socioeconomic,
                    {{"White", 0.58},
                     {"Black or African American", 0.22},
                     {"Asian", 0.08},
                     {"American Indian or Alaska Native", 0.005},
                     {"Native Hawaiian or Other Pacific Islander", 0.005},
                     {"Mixed/Multiracial", 0.06},
                     {"Others/unknown", 0.05}}),
        make_factor("ethnicity", demographic_socioeconomic,
                    {{"Hispanic/Latino", 0.15}, {"Non-Hispanic/Latino", 0.80}, {"Others/unknown", 0.05}}),
        make_factor("geographic_location", demographic_socioeconomic,
                    {{"Urban", 0.55}, {"Suburban", 0.30}, {"Rural", 0.15}}),
        make_factor("education_level", demographic_socioeconomic,
                    {{"No formal education", 0.03},
                     {"Primary", 0.25},
                     {"Secondary", 0.45},
                     {"College", 0.20},
                     {"Postgraduate", 0.07}}),
        make_factor("financial_status", demographic_socioeconomic,
                    {{"Low income", 0.38}, {"Middle income", 0.55}, {"High income", 0.07}}),
        make_factor("employment_occupation", demographic_socioeconomic,
                    {{"Retired", 0.65}, {"Manual labor", 0.20}, {"Professional", 0.10}, {"Unemployed", 0.05}}),
        make_factor("health_insurance", demographic_socioeconomic,
                    {{"None", 0.05}, {"Public (e.g., Medicare/Medicaid)", 0.75}, {"Private", 0.20}}),
        make_factor("health_literacy", demographic_socioeconomic,
                    {{"Low", 0.35}, {"Moderate", 0.50}, {"High", 0.15}}),
        make_factor("housing_instability", demographic_socioeconomic,
                    {{"Stable", 0.82}, {"Unstable (eviction/foreclosure)", 0.15}, {"Homeless", 0.03}}),
        // --- medical & biological ---
        make_factor("family_history_of_ad", medical_biological, {{"Yes", 0.28}, {"No", 0.72}}),
        make_factor("hypertension", medical_biological, {{"Yes", 0.68}, {"No", 0.32}}),
        make_factor("diabetes", medical_biological, {{"Yes", 0.34}, {"No", 0.66}}),
        make_factor("cardiovascular_disease", medical_biological, {{"Yes", 0.45}, {"No", 0.55}}),
        make_factor("obesity", medical_biological, {{"Yes", 0.41}, {"No", 0.59}}),
        make_factor("stroke_history", medical_biological, {{"Yes", 0.18}, {"No", 0.82}}),
        make_factor("autoimmune_disorders", medical_biological, {{"Yes", 0.12}, {"No", 0.88}}),
        make_factor("traumatic_brain_injury", medical_biological, {{"Yes", 0.09}, {"No", 0.91}}),
        make_factor("epilepsy", medical_biological, {{"Yes", 0.04}, {"No", 0.96}}),
        make_factor("chronic_inflammation", medical_biological, {{"Yes", 0.27}, {"No", 0.73}}),
        make_factor("depression_diagnosis", medical_biological,
                    {{"Diagnosed", 0.22}, {"Undiagnosed", 0.15}, {"Untreated", 0.08}, {"None", 0.55}}),
        make_factor("anxiety_diagnosis", medical_biological,
                    {{"Diagnosed", 0.18}, {"Undiagnosed", 0.12}, {"Untreated", 0.07}, {"None", 0.63}}),
        make_factor("bipolar_disorder_diagnosis", medical_biological,
                    {{"Diagnosed", 0.04}, {"Undiagnosed", 0.02}, {"Untreated", 0.01}, {"None", 0.93}}),
        make_factor("schizophrenia_diagnosis", medical_biological,
                    {{"Diagnosed", 0.03}, {"Undiagnosed", 0.01}, {"Untreated", 0.005}, {"None", 0.955}}),
        make_factor("ptsd", medical_biological, {{"Yes", 0.11}, {"No", 0.89}}),
        make_factor("hearing_loss_severity", medical_biological,
                    {{"None", 0.45}, {"Mild", 0.35}, {"Moderate", 0.15}, {"Severe", 0.05}}),
        make_factor("vision_loss_severity", medical_biological,
                    {{"None", 0.50}, {"Mild", 0.30}, {"Moderate", 0.15}, {"Severe", 0.05}}),
        make_factor("chronic_pain", medical_biological, {{"Yes", 0.39}, {"No", 0.61}}),
        make_factor("acute_pain", medical_biological, {{"Yes", 0.25}, {"No", 0.75}}),
        make_factor("physical_disability", medical_biological, {{"Yes", 0.33}, {"No", 0.67}}),
        make_factor("cognitive_disability", medical_biological, {{"Yes", 0.28}, {"No", 0.72}}),
        // --- lifestyle & environmental ---
        make_factor("diet_type", lifestyle_environmental,
                    {{"Balanced", 0.48}, {"Poor (high processed foods)", 0.52}}),
        make_factor("substance_abuse", lifestyle_environmental, {{"Yes", 0.17}, {"No", 0.83}}),
        make_factor("smoking_status", lifestyle_environmental,
                    {{"Never", 0.45}, {"Former", 0.35}, {"Current", 0.20}}),
        make_factor("alcohol_use", lifestyle_environmental,
                    {{"None", 0.40}, {"Moderate", 0.50}, {"Heavy", 0.10}}),
        make_factor("physical_activity_level", lifestyle_environmental,
                    {{"Sedentary", 0.55}, {"Moderate", 0.35}, {"Active", 0.10}}),
        make_factor("sleep_patterns", lifestyle_environmental, {{"Regular", 0.60}, {"Irregular", 0.40}}),
        make_factor("air_pollution_exposure", lifestyle_environmental, {{"Yes", 0.35}, {"No", 0.65}}),
        // --- psychosocial & stress-related ---
        make_factor("physical_abuse", psychosocial_stress, {{"Yes", 0.07}, {"No", 0.93}}),
        make_factor("emotional_abuse", psychosocial_stress, {{"Yes", 0.15}, {"No", 0.85}}),
        make_factor("sexual_abuse", psychosocial_stress, {{"Yes", 0.04}, {"No", 0.96}}),
        make_factor("combat_exposure", psychosocial_stress, {{"Yes", 0.06}, {"No", 0.94}}),
        make_factor("racism_discrimination", psychosocial_stress, {{"Yes", 0.22}, {"No", 0.78}}),
        make_factor("legal_problems", psychosocial_stress, {{"Yes", 0.09}, {"No", 0.91}}),
        make_factor("cultural_stigma_around_ad", psychosocial_stress, {{"Yes", 0.31}, {"No", 0.69}}),
        make_factor("internalized_shame_guilt", psychosocial_stress, {{"Yes", 0.19}, {"No", 0.81}}),
        make_factor("social_engagement", psychosocial_stress,
                    {{"High (regular social interaction)", 0.35}, {"Moderate", 0.45}, {"Isolated", 0.20}}),
        make_factor("marital_status", psychosocial_stress,
                    {{"Single", 0.15}, {"Married", 0.50}, {"Divorced", 0.25}, {"Widowed", 0.10}}),
        make_factor("caregiver_availability", psychosocial_stress,
                    {{"Family", 0.65}, {"Professional caregiver", 0.25}, {"None", 0.10}}),
        make_factor("stress_levels", psychosocial_stress,
                    {{"Low", 0.25}, {"Moderate", 0.50}, {"High", 0.25}}),
        // --- access to care & structural barriers ---
        make_factor("proximity_to_healthcare", access_to_care,
                    {{"Easy access", 0.60}, {"Limited access", 0.30}, {"Hard", 0.10}}),
        make_factor("public_transport_access", access_to_care,
                    {{"Easy access", 0.55}, {"Limited access", 0.30}, {"No access", 0.15}}),
        make_factor("primary_language", access_to_care,
                    {{"English", 0.82}, {"Spanish", 0.12}, {"Other", 0.06}}),
        // --- developmental & lifecourse ---
        make_factor("childhood_trauma", developmental_lifecourse, {{"Yes", 0.13}, {"No", 0.87}}),
        make_factor("undocumented_immigrant_status", developmental_lifecourse,
                    {{"Yes", 0.04}, {"No", 0.96}}),
    };

    cfg.lexicon.keywords = {
        {"speech_language",
         {"communication", "speech", "speaking", "word-finding", "word-retrieval", "naming",
          "encoding", "phonemic", "aphasia", "paraphasia", "anomia", "dysnomia", "fluency",
          "perseveration", "repetition", "language", "linguistic", "comprehend", "understand",
          "alexia"}},
        {"memory",
         {"memory", "amnesia", "amnestic", "remembering", "recognizing", "recall", "recount",
          "retain", "forget", "lapse"}},
        {"learning_perception",
         {"attention", "concentration", "focus", "learning", "abstraction", "problem-solving",
          "executive function", "cognitive", "neurocognitive", "thinking", "processing",
          "visuospatial", "multidomain", "global", "agnosia", "getting lost", "trouble finding",
          "disoriented", "confusion", "handwriting deterioration"}},
        {"assistance_needed",
         {"ADLs", "eating", "dressing", "grooming", "toileting", "bathing", "mobility", "iADLs",
          "cooking", "housekeeping", "cleaning", "laundry", "shopping", "phone use", "computer use",
          "managing medications", "managing bills", "managing finances", "driving", "transportation",
          "medical and legal decision-making", "healthcare proxy", "HPOA", "guardian",
          "guardianship", "supervision required"}},
        {"physiological_changes",
         {"hearing", "auditory", "SNHL", "HoH", "vision", "smell", "anosmia", "hyposmia",
          "swallowing", "dysphagia", "gait", "balance", "sleep", "insomnia", "pain",
          "incontinence"}},
        {"neuropsychiatric_symptoms",
         {"mood", "affect", "behavior", "apathy", "personality", "depressed", "anhedonia",
          "anxiety", "anxious", "agitation", "hypervigilance", "restless", "overwhelmed", "insight",
          "judgment", "impulsive", "anosognosia", "anger", "short-tempered", "irritable",
          "aggressive", "shouting", "erratic", "rummaging", "wandering", "thought disorder",
          "delusion", "hallucination", "paranoia", "psychosis"}},
    };

    cfg.visits.windows = {
        {"10-7 Years Before", 10, 7},
        {"6-4 Years Before", 6, 4},
        {"3-2 Years Before", 3, 2},
        {"1 Year Before", 1, 1},
    };
    cfg.visits.means = {
        {"10-7 Years Before",
         {{"primary_care", 2.54},
          {"neurology", 0.31},
          {"memory_clinic", 0.31},
          {"neuropsychology", 0.31},
          {"geriatrics", 1.02},
          {"psychiatry_mental_health", 0.51},
          {"emergency", 1.02},
          {"hbpc", 0.00}}},
        {"6-4 Years Before",
         {{"primary_care", 2.59},
          {"neurology", 0.74},
          {"memory_clinic", 0.74},
          {"neuropsychology", 0.74},
          {"geriatrics", 0.74},
          {"psychiatry_mental_health", 0.74},
          {"emergency", 1.11},
          {"hbpc", 0.00}}},
        {"3-2 Years Before",
         {{"primary_care", 2.95},
          {"neurology", 1.18},
          {"memory_clinic", 1.18},
          {"neuropsychology", 1.18},
          {"geriatrics", 0.59},
          {"psychiatry_mental_health", 0.89},
          {"emergency", 1.18},
          {"hbpc", 0.59}}},
        {"1 Year Before",
         {{"primary_care", 5.01},
          {"neurology", 2.51},
          {"memory_clinic", 2.51},
          {"neuropsychology", 2.51},
          {"geriatrics", 1.67},
          {"psychiatry_mental_health", 1.67},
          {"emergency", 2.51},
          {"hbpc", 1.67}}},
    };

    cfg.keyword_trend.per_year_mean = {
        {1, 4.160}, {2, 3.829}, {3, 3.678}, {4, 3.508}, {5, 3.384},
        {6, 3.272}, {7, 3.101}, {8, 2.993}, {9, 2.874}, {10, 2.745},
    };
    cfg.keyword_trend.density_multiplier = 5.0;

    cfg.category_weights.weights = {
        {"speech_language", 2.746},          {"memory", 1.000},
        {"learning_perception", 1.733},      {"assistance_needed", 1.531},
        {"physiological_changes", 8.766},    {"neuropsychiatric_symptoms", 4.399},
    };

    cfg.stage_map.stage_by_year = {
        {10, "Early prodromal stage"},
        {9, "Early prodromal stage"},
        {8, "Early prodromal stage"},
        {7, "Early prodromal stage"},
        {6, "Mild cognitive impairment stage"},
        {5, "Mild cognitive impairment stage"},
        {4, "Mild dementia stage"},
        {3, "Mild dementia stage"},
        {2, "Moderate dementia stage"},
        {1, "Moderate dementia stage"},
    };

    cfg.generation_params = GenerationParams{};

    validate_config(cfg);
    return cfg;
}

} // namespace cohortforge
