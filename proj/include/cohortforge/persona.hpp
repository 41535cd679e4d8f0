#pragma once

// Persona sampling: draws one category per configured factor from the
// configured categorical distributions. Each persona's randomness is isolated
// through a per-patient derived seed, so cohorts are reproducible regardless
// of sampling order or parallelism.

#include <atomic>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "cohortforge/config.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/parallel.hpp"
#include "cohortforge/rng.hpp"

namespace cohortforge {

struct Persona {
    std::string patient_id;
    std::uint64_t seed = 0; // per-patient seed derived from the master seed
    std::map<std::string, std::string> assignments; // factor name -> chosen label

    bool operator==(const Persona&) const = default;
};

// Zero-padded, clearly synthetic identifier: SYN-00000042.
inline std::string make_patient_id(std::uint64_t patient_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "SYN-%08llu", static_cast<unsigned long long>(patient_index));
    return buf;
}

// Inverse-CDF draw over the factor's categories in listed order; the marginal
// probability of each label equals its configured probability.
inline const std::string& sample_factor(const FactorSpec& spec, Rng& rng) {
    if (spec.categories.empty()) {
        throw ValidationError("sample_factor: factor '" + spec.name + "' has no categories");
    }
    const double u = rng.next_double();
    double cumulative = 0.0;
    for (std::size_t i = 0; i + 1 < spec.categories.size(); ++i) {
        cumulative += spec.categories[i].probability;
        if (u < cumulative) {
            return spec.categories[i].label;
        }
    }
    return spec.categories.back().label;
}

// Optional plausibility constraint: personas failing the predicate are
// resampled (fresh randomness per attempt). Off by default.
using PersonaPredicate = std::function<bool(const Persona&)>;

inline constexpr int kMaxPersonaAttempts = 1000;

inline Persona sample_persona(const DistributionConfig& cfg, std::uint64_t patient_index,
                              std::uint64_t master_seed, const PersonaPredicate& accept = {}) {
    Persona persona;
    persona.seed = derive_seed(master_seed, patient_index);
    persona.patient_id = make_patient_id(patient_index);
    const std::uint64_t factor_seed = stream_seed(persona.seed, RngStream::factors);
    for (int attempt = 0; attempt < kMaxPersonaAttempts; ++attempt) {
        // Attempt 0 uses the canonical stream so the unconstrained path is
        // unaffected by the existence of the constraint hook.
        Rng rng(attempt == 0 ? factor_seed
                             : derive_seed(factor_seed, static_cast<std::uint64_t>(attempt)));
        persona.assignments.clear();
        for (const auto& factor : cfg.factors) {
            persona.assignments.emplace(factor.name, sample_factor(factor, rng));
        }
        if (!accept || accept(persona)) {
            return persona;
        }
    }
    throw ValidationError("sample_persona: constraint not satisfied after " +
                          std::to_string(kMaxPersonaAttempts) + " attempts for patient " +
                          persona.patient_id);
}

inline std::vector<Persona> sample_cohort(const DistributionConfig& cfg, std::size_t n,
                                          std::uint64_t master_seed, unsigned threads = 1,
                                          const PersonaPredicate& accept = {}) {
    if (n == 0) {
        throw ValidationError("sample_cohort: cohort size must be at least 1");
    }
    std::vector<Persona> cohort(n);
    parallel_for(n, threads, [&](std::size_t i) {
        cohort[i] = sample_persona(cfg, static_cast<std::uint64_t>(i), master_seed, accept);
    });
    return cohort;
}

} // namespace cohortforge
