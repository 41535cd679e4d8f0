// Statistical sampling stages: persona factor assignment, visit trajectory
// planning, and two-stage keyword mention sampling.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cohortforge/default_config.hpp"
#include "cohortforge/persona.hpp"
#include "cohortforge/semantic.hpp"
#include "cohortforge/trajectory.hpp"

using namespace cohortforge;

TEST_CASE("patient ids are zero-padded and clearly synthetic") {
    CHECK(make_patient_id(0) == "SYN-00000000");
    CHECK(make_patient_id(123) == "SYN-00000123");
    CHECK(make_patient_id(99999999) == "SYN-99999999");
}

TEST_CASE("sample_persona is deterministic and complete") {
    const auto cfg = default_config();
    const auto a = sample_persona(cfg, 7, 42);
    const auto b = sample_persona(cfg, 7, 42);
    CHECK(a == b);
    CHECK(a.patient_id == "SYN-00000007");
    CHECK(a.seed == derive_seed(42, 7));

    // Every factor assigned, and to one of its own labels.
    REQUIRE(a.assignments.size() == cfg.factors.size());
    for (const auto& factor : cfg.factors) {
        const auto it = a.assignments.find(factor.name);
        REQUIRE(it != a.assignments.end());
        const bool known = std::any_of(factor.categories.begin(), factor.categories.end(),
                                       [&](const FactorCategory& c) { return c.label == it->second; });
        CHECK(known);
    }

    // Different index or master seed must change the draw stream.
    CHECK(sample_persona(cfg, 8, 42).assignments != a.assignments);
    CHECK(sample_persona(cfg, 7, 43).seed != a.seed);
}

TEST_CASE("sample_cohort output does not depend on thread count") {
    const auto cfg = default_config();
    const auto serial = sample_cohort(cfg, 500, 42, 1);
    const auto parallel = sample_cohort(cfg, 500, 42, 3);
    CHECK(serial == parallel);
    CHECK_THROWS_AS(sample_cohort(cfg, 0, 42), ValidationError);
}

TEST_CASE("persona marginals track configured prevalences") {
    const auto cfg = default_config();
    const auto cohort = sample_cohort(cfg, 20000, 7, 2);
    std::map<std::string, int> age_counts;
    int hypertension_yes = 0;
    for (const auto& persona : cohort) {
        age_counts[persona.assignments.at("age")]++;
        hypertension_yes += persona.assignments.at("hypertension") == "Yes" ? 1 : 0;
    }
    const double n = static_cast<double>(cohort.size());
    CHECK(std::fabs(age_counts["75-84"] / n - 0.45) < 0.015);
    CHECK(std::fabs(age_counts["<65 (early-onset)"] / n - 0.08) < 0.010);
    CHECK(std::fabs(hypertension_yes / n - 0.68) < 0.015);
}

TEST_CASE("persona constraint hook resamples until satisfied") {
    const auto cfg = default_config();
    const PersonaPredicate wants_hypertension = [](const Persona& p) {
        return p.assignments.at("hypertension") == "Yes";
    };
    const auto cohort = sample_cohort(cfg, 200, 11, 1, wants_hypertension);
    for (const auto& persona : cohort) {
        REQUIRE(persona.assignments.at("hypertension") == "Yes");
    }
    // Re-running yields the identical constrained cohort.
    CHECK(cohort == sample_cohort(cfg, 200, 11, 1, wants_hypertension));

    // A trivially true predicate must not perturb the unconstrained path.
    const PersonaPredicate always = [](const Persona&) { return true; };
    CHECK(sample_persona(cfg, 3, 42, always) == sample_persona(cfg, 3, 42));

    // An unsatisfiable predicate fails loudly rather than spinning forever.
    const PersonaPredicate never = [](const Persona&) { return false; };
    CHECK_THROWS_AS(sample_persona(cfg, 0, 42, never), ValidationError);
}

TEST_CASE("year range checks and window lookups") {
    const auto cfg = default_config();
    CHECK_THROWS_AS(check_year_range(0, "test"), RangeError);
    CHECK_THROWS_AS(check_year_range(11, "test"), RangeError);
    CHECK(window_for_year(cfg.visits, 8).id == "10-7 Years Before");
    CHECK(window_for_year(cfg.visits, 7).id == "10-7 Years Before");
    CHECK(window_for_year(cfg.visits, 6).id == "6-4 Years Before");
    CHECK(window_for_year(cfg.visits, 2).id == "3-2 Years Before");
    CHECK(window_for_year(cfg.visits, 1).id == "1 Year Before");
    CHECK(stage_for_year(cfg.stage_map, 7) == "Early prodromal stage");
    CHECK(stage_for_year(cfg.stage_map, 1) == "Moderate dementia stage");
}

TEST_CASE("per-year rates divide window totals by window length") {
    const auto cfg = default_config();
    CHECK(per_year_rate(cfg.visits, "primary_care", 1) == Catch::Approx(5.01));
    CHECK(per_year_rate(cfg.visits, "neurology", 5) == Catch::Approx(0.74 / 3.0));
    CHECK(per_year_rate(cfg.visits, "primary_care", 9) == Catch::Approx(2.54 / 4.0));
    CHECK(per_year_rate(cfg.visits, "hbpc", 8) == 0.0);
    CHECK(per_year_rate(cfg.visits, "hbpc", 1) == Catch::Approx(1.67));
}

TEST_CASE("visit count sampling walks cells in fixed order and skips zero-mean cells") {
    const auto cfg = default_config();
    std::vector<std::pair<int, std::string>> visited;
    const CountSampler recorder = [&](double mean, int year, const std::string& note_type, Rng&) {
        REQUIRE(mean > 0.0);
        visited.emplace_back(year, note_type);
        return 2;
    };
    Rng rng(1);
    const auto counts = sample_visit_counts(cfg, rng, recorder);

    // All 80 cells present; zero-mean cells are exactly zero and never hit
    // the sampler.
    CHECK(counts.size() == 80);
    for (int year : {10, 9, 8, 7, 6, 5, 4}) {
        CHECK(counts.at({year, "hbpc"}) == 0);
        for (const auto& cell : visited) {
            CHECK_FALSE((cell.first == year && cell.second == "hbpc"));
        }
    }
    CHECK(counts.at({10, "primary_care"}) == 2);
    CHECK(counts.at({1, "hbpc"}) == 2);

    // Cells are visited from year 10 down to 1, note types in declared order.
    REQUIRE(visited.size() == 73); // 80 cells minus 7 zero-mean HBPC cells
    CHECK(visited.front() == std::make_pair(10, std::string("primary_care")));
    CHECK(visited.back() == std::make_pair(1, std::string("hbpc")));
    for (std::size_t i = 1; i < visited.size(); ++i) {
        CHECK(visited[i - 1].first >= visited[i].first);
    }
}

TEST_CASE("build_visit_plan emits ordered, fully attributed note specs") {
    const auto cfg = default_config();
    const auto persona = sample_persona(cfg, 3, 42);
    const CountSampler one_each = [](double, int, const std::string&, Rng&) { return 1; };
    const auto plan = build_visit_plan(cfg, persona, one_each);

    CHECK(plan.patient_id == persona.patient_id);
    CHECK(plan.seed == persona.seed);
    CHECK(plan.assignments == persona.assignments);
    REQUIRE(plan.notes.size() == 73); // one note per nonzero-mean cell

    std::set<std::string> ids;
    int previous_year = kMaxYearBeforeDx;
    for (std::size_t i = 0; i < plan.notes.size(); ++i) {
        const auto& note = plan.notes[i];
        CHECK(note.patient_id == persona.patient_id);
        CHECK(note.note_id == make_note_id(persona.patient_id, i));
        CHECK(ids.insert(note.note_id).second);
        CHECK(note.year_before_dx <= previous_year);
        previous_year = note.year_before_dx;
        CHECK(note.stage == stage_for_year(cfg.stage_map, note.year_before_dx));
        CHECK(note.mentions.empty());
        if (note.note_type == "hbpc") {
            CHECK(note.year_before_dx <= 3);
        }
    }
    CHECK(plan.notes.front().note_type == "primary_care");
    CHECK(plan.notes.front().year_before_dx == 10);
    CHECK(plan.notes.back().note_type == "hbpc");
    CHECK(plan.notes.back().year_before_dx == 1);

    // Plans are reproducible, and the sampled cell counts vary per persona.
    CHECK(build_visit_plan(cfg, persona) == build_visit_plan(cfg, persona));
    const auto cells = [](const VisitPlan& p) {
        std::vector<std::pair<int, std::string>> out;
        for (const auto& n : p.notes) {
            out.emplace_back(n.year_before_dx, n.note_type);
        }
        return out;
    };
    const auto other = build_visit_plan(cfg, sample_persona(cfg, 4, 42));
    CHECK(cells(other) != cells(build_visit_plan(cfg, persona)));
}

TEST_CASE("planned visit counts match the table in expectation") {
    const auto cfg = default_config();
    const int n = 20000;
    double primary_year1 = 0.0;
    double neurology_window64 = 0.0;
    std::uint64_t hbpc_early = 0;
    for (int i = 0; i < n; ++i) {
        const auto persona = sample_persona(cfg, static_cast<std::uint64_t>(i), 99);
        const auto plan = build_visit_plan(cfg, persona);
        for (const auto& note : plan.notes) {
            if (note.note_type == "primary_care" && note.year_before_dx == 1) {
                primary_year1 += 1.0;
            }
            if (note.note_type == "neurology" && note.year_before_dx <= 6 &&
                note.year_before_dx >= 4) {
                neurology_window64 += 1.0;
            }
            if (note.note_type == "hbpc" && note.year_before_dx >= 4) {
                ++hbpc_early;
            }
        }
    }
    CHECK(std::fabs(primary_year1 / n - 5.01) < 0.08);
    CHECK(std::fabs(neurology_window64 / n - 0.74) < 0.03);
    CHECK(hbpc_early == 0);
}

TEST_CASE("expected keyword counts scale the trend by the density multiplier") {
    const auto cfg = default_config();
    CHECK(expected_keyword_count(cfg, 1) == Catch::Approx(20.80));
    CHECK(expected_keyword_count(cfg, 10) == Catch::Approx(13.725));
    CHECK_THROWS_AS(expected_keyword_count(cfg, 0), RangeError);
}

TEST_CASE("keyword counts are zero-truncated with the right mean") {
    const auto cfg = default_config();
    Rng rng(2718);
    const int n = 200000;
    double sum = 0.0;
    std::uint64_t min_seen = 99;
    for (int i = 0; i < n; ++i) {
        const auto k = sample_keyword_count(cfg, 1, rng);
        min_seen = std::min(min_seen, k);
        sum += static_cast<double>(k);
    }
    CHECK(min_seen >= 1);
    // Zero-truncated mean of Poisson(20.8) is 20.8000000193.
    CHECK(std::fabs(sum / n - 20.8000000193) < 0.05);
}

TEST_CASE("two-stage sampling obeys the law of total probability on a toy lexicon") {
    const std::vector<CategoryEntry> entries = {
        {"alpha", 1.0, {"a1", "a2"}},
        {"beta", 2.0, {"b1"}},
        {"gamma", 3.0, {"g1", "g2", "g3"}},
    };
    // Exact marginals: P(kw) = weight/6 / |keywords|.
    const std::map<std::string, double> want = {
        {"a1", 1.0 / 6.0 / 2.0}, {"a2", 1.0 / 6.0 / 2.0}, {"b1", 2.0 / 6.0},
        {"g1", 3.0 / 6.0 / 3.0}, {"g2", 3.0 / 6.0 / 3.0}, {"g3", 3.0 / 6.0 / 3.0},
    };
    Rng rng(31415);
    std::map<std::string, std::uint64_t> counts;
    const int n = 300000;
    for (int i = 0; i < n; ++i) {
        counts[sample_mention(entries, rng).keyword]++;
    }
    for (const auto& [kw, p] : want) {
        INFO("keyword " << kw);
        CHECK(std::fabs(static_cast<double>(counts[kw]) / n - p) < 0.005);
    }
}

TEST_CASE("two-stage sampler rejects degenerate inputs") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_weighted_category({}, rng), ValidationError);
    const std::vector<CategoryEntry> bad_weight = {{"a", 0.0, {"x"}}};
    CHECK_THROWS_AS(sample_weighted_category(bad_weight, rng), ValidationError);
    const CategoryEntry empty_pool{"a", 1.0, {}};
    CHECK_THROWS_AS(sample_uniform_keyword(empty_pool, rng), ValidationError);
}

TEST_CASE("category draws follow the normalized weights") {
    const auto cfg = default_config();
    const auto norm = normalize_weights(cfg.category_weights.weights);
    Rng rng(555);
    std::map<std::string, std::uint64_t> counts;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        counts[sample_category(cfg, rng)]++;
    }
    for (const auto& [category, p] : norm) {
        INFO("category " << category);
        CHECK(std::fabs(static_cast<double>(counts[category]) / n - p) < 0.01);
    }
}

TEST_CASE("populate_mentions fills every note reproducibly") {
    const auto cfg = default_config();
    const auto persona = sample_persona(cfg, 5, 42);
    const auto plan = build_visit_plan(cfg, persona);
    const auto filled = populate_mentions(cfg, plan);

    REQUIRE(filled.notes.size() == plan.notes.size());
    for (const auto& note : filled.notes) {
        REQUIRE(!note.mentions.empty());
        for (const auto& mention : note.mentions) {
            const auto& pool = cfg.lexicon.category_keywords(mention.category);
            CHECK(std::find(pool.begin(), pool.end(), mention.keyword) != pool.end());
        }
    }

    // Input plan is untouched; re-population is identical; double population
    // is rejected.
    CHECK(plan.notes.front().mentions.empty());
    CHECK(populate_mentions(cfg, plan) == filled);
    CHECK_THROWS_AS(populate_mentions(cfg, filled), ValidationError);
}
