// Generation gateway (retry, backoff, batch), the deterministic mock
// backend, and sentence annotation built on top of them.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "cohortforge/annotator.hpp"
#include "cohortforge/config.hpp"
#include "cohortforge/default_config.hpp"
#include "cohortforge/digest.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/gateway.hpp"
#include "cohortforge/mock_backend.hpp"
#include "cohortforge/persona.hpp"
#include "cohortforge/prompt.hpp"
#include "cohortforge/records_types.hpp"
#include "cohortforge/rng.hpp"
#include "cohortforge/segmentation.hpp"
#include "cohortforge/semantic.hpp"
#include "cohortforge/trajectory.hpp"

using namespace cohortforge;

namespace {

// A backend whose behavior per request id is scripted step by step, so retry
// logic can be exercised without any real transport. The last step of a
// script repeats forever; unscripted ids echo their request id.
class ScriptedBackend : public Backend {
public:
    struct Step {
        enum class Kind { text, empty, transient, auth, protocol };
        Kind kind = Kind::text;
        std::string payload;
    };

    static Step reply(std::string text) { return {Step::Kind::text, std::move(text)}; }
    static Step empty_reply() { return {Step::Kind::empty, {}}; }
    static Step transient() { return {Step::Kind::transient, "temporarily unavailable"}; }
    static Step auth_failure() { return {Step::Kind::auth, "bad credentials"}; }
    static Step protocol_failure() { return {Step::Kind::protocol, "malformed response"}; }

    std::string backend_id() const override { return "scripted"; }

    void script(const std::string& request_id, std::vector<Step> steps) {
        std::lock_guard<std::mutex> lock(mu_);
        scripts_[request_id] = std::move(steps);
    }

    void set_latency(std::function<std::chrono::milliseconds(const std::string&)> fn) {
        std::lock_guard<std::mutex> lock(mu_);
        latency_ = std::move(fn);
    }

    int calls(const std::string& request_id) const {
        std::lock_guard<std::mutex> lock(mu_);
        const auto it = calls_.find(request_id);
        return it == calls_.end() ? 0 : it->second;
    }

    std::vector<GenerationRequest> seen() const {
        std::lock_guard<std::mutex> lock(mu_);
        return seen_;
    }

    std::string complete(const GenerationRequest& req) override {
        Step step = reply("echo:" + req.request_id);
        std::function<std::chrono::milliseconds(const std::string&)> latency;
        {
            std::lock_guard<std::mutex> lock(mu_);
            seen_.push_back(req);
            const int call_index = calls_[req.request_id]++;
            const auto it = scripts_.find(req.request_id);
            if (it != scripts_.end() && !it->second.empty()) {
                const auto& steps = it->second;
                const std::size_t i =
                    std::min(static_cast<std::size_t>(call_index), steps.size() - 1);
                step = steps[i];
            }
            latency = latency_;
        }
        if (latency) {
            std::this_thread::sleep_for(latency(req.request_id));
        }
        switch (step.kind) {
            case Step::Kind::text: return step.payload;
            case Step::Kind::empty: return std::string();
            case Step::Kind::transient: throw TransientBackendError(step.payload);
            case Step::Kind::auth: throw AuthError(step.payload);
            case Step::Kind::protocol: throw ProtocolError(step.payload);
        }
        throw Error("unreachable");
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, std::vector<Step>> scripts_;
    std::map<std::string, int> calls_;
    std::vector<GenerationRequest> seen_;
    std::function<std::chrono::milliseconds(const std::string&)> latency_;
};

GenerationRequest make_request(const std::string& request_id,
                               PromptKind kind = PromptKind::note_generation) {
    GenerationRequest req;
    req.bundle.kind = kind;
    req.bundle.system_text = "system";
    req.bundle.user_text = "user";
    req.request_id = request_id;
    return req;
}

// Mirrors the gateway's published backoff contract: sleep is uniform in
// [0, min(base * 2^(attempt-1), max)) with jitter derived from the request id
// and attempt only.
std::chrono::milliseconds expected_backoff(std::uint64_t jitter_seed,
                                           const std::string& request_id, int attempt,
                                           std::chrono::milliseconds base,
                                           std::chrono::milliseconds max) {
    double cap = static_cast<double>(base.count());
    for (int i = 1; i < attempt; ++i) {
        cap *= 2.0;
        if (cap >= static_cast<double>(max.count())) {
            cap = static_cast<double>(max.count());
            break;
        }
    }
    if (cap > static_cast<double>(max.count())) {
        cap = static_cast<double>(max.count());
    }
    Sha256 hasher;
    hasher.update(request_id);
    const auto digest = hasher.finish();
    std::uint64_t key = 0;
    for (int i = 0; i < 8; ++i) {
        key = (key << 8) | digest[static_cast<std::size_t>(i)];
    }
    Rng rng(derive_seed(jitter_seed ^ key, static_cast<std::uint64_t>(attempt)));
    return std::chrono::milliseconds(static_cast<std::int64_t>(rng.next_double() * cap));
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + 1)) {
        ++count;
    }
    return count;
}

// True when any lexicon keyword occurs (case-insensitively) inside the text;
// used to certify that hand-written test sentences isolate the observer rule.
bool mentions_any_keyword(const DistributionConfig& cfg, const std::string& text) {
    const std::string lower = detail::to_lower_copy(text);
    for (const char* category : kLexiconCategories) {
        for (const auto& keyword : cfg.lexicon.category_keywords(category)) {
            if (lower.find(detail::to_lower_copy(keyword)) != std::string::npos) {
                return true;
            }
        }
    }
    return false;
}

} // namespace

TEST_CASE("gateway retries transient failures and reports the attempt count") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->script("req-1", {ScriptedBackend::transient(), ScriptedBackend::transient(),
                              ScriptedBackend::reply("hello")});
    std::vector<std::chrono::milliseconds> delays;
    RetryPolicy policy;
    policy.max_retries = 3;
    Gateway gateway(backend, policy, 99,
                    [&](std::chrono::milliseconds d) { delays.push_back(d); });

    const GenerationResult result = gateway.generate(make_request("req-1"));
    CHECK(result.text == "hello");
    CHECK(result.request_id == "req-1");
    CHECK(result.backend_id == "scripted");
    CHECK(result.attempt_count == 3);
    CHECK(result.latency.count() >= 0);
    CHECK(backend->calls("req-1") == 3);

    REQUIRE(delays.size() == 2);
    CHECK(delays[0].count() >= 0);
    CHECK(delays[0].count() < 250);
    CHECK(delays[1].count() >= 0);
    CHECK(delays[1].count() < 500);
    CHECK(delays[0] == expected_backoff(99, "req-1", 1, policy.base_delay, policy.max_delay));
    CHECK(delays[1] == expected_backoff(99, "req-1", 2, policy.base_delay, policy.max_delay));
}

TEST_CASE("gateway backoff delays are deterministic in the jitter seed") {
    std::vector<std::chrono::milliseconds> first;
    std::vector<std::chrono::milliseconds> second;
    for (auto* sink : {&first, &second}) {
        auto backend = std::make_shared<ScriptedBackend>();
        backend->script("req-jitter",
                        {ScriptedBackend::transient(), ScriptedBackend::transient(),
                         ScriptedBackend::transient(), ScriptedBackend::reply("ok")});
        Gateway gateway(backend, RetryPolicy{}, 7,
                        [sink](std::chrono::milliseconds d) { sink->push_back(d); });
        CHECK(gateway.generate(make_request("req-jitter")).attempt_count == 4);
    }
    REQUIRE(first.size() == 3);
    CHECK(first == second);

    // A different request id draws different jitter under the same seed.
    std::vector<std::chrono::milliseconds> other;
    auto backend = std::make_shared<ScriptedBackend>();
    backend->script("req-other", {ScriptedBackend::transient(), ScriptedBackend::transient(),
                                  ScriptedBackend::transient(), ScriptedBackend::reply("ok")});
    Gateway gateway(backend, RetryPolicy{}, 7,
                    [&](std::chrono::milliseconds d) { other.push_back(d); });
    gateway.generate(make_request("req-other"));
    CHECK(other != first);
}

TEST_CASE("gateway never retries auth or protocol failures") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->script("req-auth", {ScriptedBackend::auth_failure()});
    backend->script("req-proto", {ScriptedBackend::protocol_failure()});
    backend->script("req-empty", {ScriptedBackend::empty_reply()});
    int sleeps = 0;
    Gateway gateway(backend, RetryPolicy{}, 0, [&](std::chrono::milliseconds) { ++sleeps; });

    CHECK_THROWS_AS(gateway.generate(make_request("req-auth")), AuthError);
    CHECK(backend->calls("req-auth") == 1);

    CHECK_THROWS_AS(gateway.generate(make_request("req-proto")), ProtocolError);
    CHECK(backend->calls("req-proto") == 1);

    // An empty completion is a protocol violation and is not retried either.
    CHECK_THROWS_AS(gateway.generate(make_request("req-empty")), ProtocolError);
    CHECK(backend->calls("req-empty") == 1);

    CHECK(sleeps == 0);
}

TEST_CASE("gateway exhausts retries into a transport error") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->script("req-down", {ScriptedBackend::transient()});
    int sleeps = 0;
    RetryPolicy policy;
    policy.max_retries = 2;
    Gateway gateway(backend, policy, 0, [&](std::chrono::milliseconds) { ++sleeps; });

    try {
        gateway.generate(make_request("req-down"));
        FAIL("expected a transport error");
    } catch (const TransportError& e) {
        const std::string message = e.what();
        CHECK(message.find("after 3 attempts") != std::string::npos);
        CHECK(message.find("temporarily unavailable") != std::string::npos);
    }
    CHECK(backend->calls("req-down") == 3);
    CHECK(sleeps == 2);

    SECTION("zero retries means exactly one attempt and no sleeping") {
        backend->script("req-once", {ScriptedBackend::transient()});
        RetryPolicy once;
        once.max_retries = 0;
        int once_sleeps = 0;
        Gateway strict(backend, once, 0, [&](std::chrono::milliseconds) { ++once_sleeps; });
        CHECK_THROWS_AS(strict.generate(make_request("req-once")), TransportError);
        CHECK(backend->calls("req-once") == 1);
        CHECK(once_sleeps == 0);
    }
}

TEST_CASE("gateway constructor validates its inputs") {
    CHECK_THROWS_AS(Gateway(nullptr), UsageError);
    RetryPolicy negative;
    negative.max_retries = -1;
    CHECK_THROWS_AS(Gateway(std::make_shared<ScriptedBackend>(), negative), RangeError);
}

TEST_CASE("generate_batch keeps outcome slots aligned with requests") {
    auto backend = std::make_shared<ScriptedBackend>();
    // Earlier requests take longer, so completions land out of submission
    // order and any index mix-up would be caught.
    backend->set_latency([](const std::string& request_id) {
        const char last = request_id.back();
        return std::chrono::milliseconds(2 * ((12 - (last - '0')) % 10));
    });
    std::vector<GenerationRequest> requests;
    for (int i = 0; i < 12; ++i) {
        requests.push_back(make_request("batch-" + std::to_string(i)));
    }
    Gateway gateway(backend, RetryPolicy{}, 0, [](std::chrono::milliseconds) {});

    const auto outcomes = gateway.generate_batch(requests, 4);
    REQUIRE(outcomes.size() == requests.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        REQUIRE(outcomes[i].ok());
        CHECK(outcomes[i].result->request_id == requests[i].request_id);
        CHECK(outcomes[i].result->text == "echo:" + requests[i].request_id);
    }

    SECTION("more workers than requests is fine") {
        std::vector<GenerationRequest> few = {make_request("batch-0"), make_request("batch-1")};
        const auto wide = gateway.generate_batch(few, 16);
        REQUIRE(wide.size() == 2);
        CHECK(wide[0].result->text == "echo:batch-0");
        CHECK(wide[1].result->text == "echo:batch-1");
    }
}

TEST_CASE("generate_batch confines failures to their own slots") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->script("mix-1", {ScriptedBackend::auth_failure()});
    backend->script("mix-3", {ScriptedBackend::protocol_failure()});
    backend->script("mix-4", {ScriptedBackend::transient()});
    std::vector<GenerationRequest> requests;
    for (int i = 0; i < 6; ++i) {
        requests.push_back(make_request("mix-" + std::to_string(i)));
    }
    RetryPolicy policy;
    policy.max_retries = 1;
    Gateway gateway(backend, policy, 0, [](std::chrono::milliseconds) {});

    const auto outcomes = gateway.generate_batch(requests, 3);
    REQUIRE(outcomes.size() == 6);
    CHECK(outcomes[0].ok());
    CHECK_FALSE(outcomes[1].ok());
    CHECK(outcomes[1].error_kind == "auth");
    CHECK_FALSE(outcomes[1].error_message.empty());
    CHECK(outcomes[2].ok());
    CHECK_FALSE(outcomes[3].ok());
    CHECK(outcomes[3].error_kind == "protocol");
    CHECK_FALSE(outcomes[4].ok());
    CHECK(outcomes[4].error_kind == "transport");
    CHECK(outcomes[5].ok());
    CHECK(backend->calls("mix-4") == 2); // one retry before giving up

    SECTION("input validation") {
        CHECK_THROWS_AS(gateway.generate_batch(requests, 0), RangeError);
        CHECK(gateway.generate_batch({}, 4).empty());
    }
}

TEST_CASE("mock backend writes one deterministic sentence per required keyword") {
    const DistributionConfig cfg = default_config();
    const Persona persona = sample_persona(cfg, 0, 42);
    const VisitPlan plan = populate_mentions(cfg, build_visit_plan(cfg, persona));
    REQUIRE_FALSE(plan.notes.empty());
    const NoteSpec& note = plan.notes.front();
    REQUIRE_FALSE(note.mentions.empty());

    MockBackend mock(cfg);
    CHECK(mock.backend_id() == "mock");

    GenerationRequest req;
    req.bundle = build_note_prompt(plan, note, cfg);
    req.request_id = note.note_id;
    const std::string text = mock.complete(req);
    CHECK(mock.complete(req) == text); // byte-identical on repeat

    CHECK(text.rfind("Patient Name: [redacted]  Date: [redacted]\n"
                     "Provider: Dr. [redacted]\n\nSubjective:\n",
                     0) == 0);
    CHECK(text.find("\nObjective:\n") != std::string::npos);
    CHECK(text.find("\nAssessment:\n") != std::string::npos);
    CHECK(text.find("\nPlan:\n") != std::string::npos);

    std::vector<std::string> distinct;
    for (const auto& mention : note.mentions) {
        if (std::find(distinct.begin(), distinct.end(), mention.keyword) == distinct.end()) {
            distinct.push_back(mention.keyword);
        }
    }
    for (const auto& keyword : distinct) {
        const std::string sentence = MockBackend::keyword_sentence(keyword);
        CHECK(sentence.find(keyword) != std::string::npos);
        CHECK(count_occurrences(text, sentence) == 1);
    }

    SECTION("prompts without the required sections are protocol errors") {
        MockBackend bare(cfg);
        CHECK_THROWS_AS(bare.complete(make_request("x", PromptKind::note_generation)),
                        ProtocolError);
        CHECK_THROWS_AS(bare.complete(make_request("x", PromptKind::sentence_annotation)),
                        ProtocolError);
    }
}

TEST_CASE("mock backend labeling rules are exact and case-insensitive") {
    const DistributionConfig cfg = default_config();
    const MockBackend mock(cfg);

    SECTION("keyword scan maps lexicon categories onto annotation labels") {
        const auto& memory = cfg.lexicon.category_keywords("memory");
        REQUIRE(std::find(memory.begin(), memory.end(), "memory") != memory.end());
        CHECK(mock.labels_for_sentence("Patient reports ongoing issues with memory.") ==
              std::vector<std::string>{"cognitive_impairment"});
        CHECK(mock.labels_for_sentence("PATIENT REPORTS ONGOING ISSUES WITH MEMORY.") ==
              std::vector<std::string>{"cognitive_impairment"});
    }

    SECTION("overlapping keywords may trigger several labels") {
        const auto& assistance = cfg.lexicon.category_keywords("assistance_needed");
        const auto& physiological = cfg.lexicon.category_keywords("physiological_changes");
        REQUIRE(std::find(assistance.begin(), assistance.end(), "supervision required") !=
                assistance.end());
        REQUIRE(std::find(physiological.begin(), physiological.end(), "vision") !=
                physiological.end());
        // "supervision" contains "vision", so both categories fire.
        CHECK(mock.labels_for_sentence("Chart review documents supervision required again.") ==
              std::vector<std::string>{"requires_assistance", "physiological_changes"});
    }

    SECTION("observer rule needs a noun and a reporting verb in one sentence") {
        const std::string observed = "Daughter notes trouble with the thermostat lately.";
        const std::string self_reported = "Patient reports trouble with the thermostat lately.";
        const std::string split = "Daughter was present. Patient notes nothing new.";
        REQUIRE_FALSE(mentions_any_keyword(cfg, observed));
        REQUIRE_FALSE(mentions_any_keyword(cfg, self_reported));
        REQUIRE_FALSE(mentions_any_keyword(cfg, split));

        CHECK(mock.labels_for_sentence(observed) ==
              std::vector<std::string>{"concern_by_others"});
        CHECK(mock.labels_for_sentence(self_reported).empty());
        // The noun and verb must not straddle a sentence boundary.
        CHECK(mock.labels_for_sentence(split).empty());
    }

    SECTION("sentences with no triggers get no labels") {
        const std::string neutral = "The clinic parking lot was repaved in spring.";
        REQUIRE_FALSE(mentions_any_keyword(cfg, neutral));
        CHECK(mock.labels_for_sentence(neutral).empty());
    }

    SECTION("labels come back in canonical order") {
        const std::string mixed =
            "Daughter notes trouble with memory and supervision required at home.";
        CHECK(mock.labels_for_sentence(mixed) ==
              std::vector<std::string>{"cognitive_impairment", "concern_by_others",
                                       "requires_assistance", "physiological_changes"});
    }
}

TEST_CASE("label helpers normalize, project, and validate") {
    const std::vector<std::string> messy = {"neuropsychiatric_symptoms", "cognitive_impairment",
                                            "neuropsychiatric_symptoms"};
    CHECK(normalize_labels(messy) ==
          std::vector<std::string>{"cognitive_impairment", "neuropsychiatric_symptoms"});
    CHECK(normalize_labels({}) == std::vector<std::string>{});

    CHECK(primary_label(messy) == "cognitive_impairment");
    CHECK(primary_label({"physiological_changes"}) == "physiological_changes");
    CHECK(primary_label({}).empty());

    CHECK(is_annotation_label("requires_assistance"));
    CHECK_FALSE(is_annotation_label("banana"));
    CHECK_FALSE(is_annotation_label("none"));

    CHECK(to_string(AnnotationCategory::concern_by_others) ==
          std::string("concern_by_others"));
    CHECK(annotation_category_from_string("concern_by_others") ==
          AnnotationCategory::concern_by_others);
    CHECK_THROWS_AS(annotation_category_from_string("banana"), LookupError);

    CHECK(make_sentence_id("SYN-00000001-N0003", 7) == "SYN-00000001-N0003-S0007");
}

TEST_CASE("annotation response parsing collects problems and rejects bad indices") {
    SECTION("well-formed response") {
        const auto parsed =
            detail::parse_annotation_response("0: cognitive_impairment\n1: none\n", 2);
        CHECK(parsed.problems.empty());
        REQUIRE(parsed.labels_by_index.size() == 2);
        CHECK(parsed.labels_by_index.at(0) ==
              std::vector<std::string>{"cognitive_impairment"});
        CHECK(parsed.labels_by_index.at(1).empty());
    }

    SECTION("labels are deduplicated and reordered canonically") {
        const auto parsed = detail::parse_annotation_response(
            "0: physiological_changes, cognitive_impairment, physiological_changes\n", 1);
        CHECK(parsed.problems.empty());
        CHECK(parsed.labels_by_index.at(0) ==
              std::vector<std::string>{"cognitive_impairment", "physiological_changes"});
    }

    SECTION("none spellings and stray blank lines are tolerated") {
        const auto parsed =
            detail::parse_annotation_response("\n0: None\n\n1: NONE\n", 2);
        CHECK(parsed.problems.empty());
        CHECK(parsed.labels_by_index.at(0).empty());
        CHECK(parsed.labels_by_index.at(1).empty());
    }

    SECTION("each malformation becomes a problem and leaves the index unfilled") {
        const auto no_colon = detail::parse_annotation_response("garbled line", 1);
        REQUIRE(no_colon.problems.size() == 2); // the bad line, then the missing index
        CHECK(no_colon.problems[0].find("line without ':'") != std::string::npos);
        CHECK(no_colon.problems[1].find("missing line for sentence 0") != std::string::npos);

        const auto bad_index = detail::parse_annotation_response("x: none\n0: none\n", 1);
        REQUIRE_FALSE(bad_index.problems.empty());
        CHECK(bad_index.problems[0].find("non-numeric") != std::string::npos);

        const auto unknown = detail::parse_annotation_response("0: banana\n", 1);
        REQUIRE_FALSE(unknown.problems.empty());
        CHECK(unknown.problems[0].find("unknown label 'banana'") != std::string::npos);
        CHECK(unknown.labels_by_index.count(0) == 0);

        const auto duplicate = detail::parse_annotation_response("0: none\n0: none\n", 1);
        REQUIRE_FALSE(duplicate.problems.empty());
        CHECK(duplicate.problems[0].find("duplicate line for sentence 0") != std::string::npos);

        const auto missing = detail::parse_annotation_response("0: none\n", 2);
        REQUIRE(missing.problems.size() == 1);
        CHECK(missing.problems[0].find("missing line for sentence 1") != std::string::npos);
    }

    SECTION("an out-of-range index is a protocol error, not a problem") {
        CHECK_THROWS_AS(detail::parse_annotation_response("5: none\n", 2), ProtocolError);
    }
}

namespace {

SyntheticNote make_note_record(std::string note_id, std::string text) {
    SyntheticNote note;
    note.note_id = std::move(note_id);
    note.patient_id = "SYN-00000001";
    note.year_before_dx = 10;
    note.note_type = "primary_care";
    note.stage = "Early prodromal stage";
    note.prompt_hash = "deadbeef";
    note.backend_id = "scripted";
    note.text = std::move(text);
    return note;
}

} // namespace

TEST_CASE("annotate_note labels every sentence via the mock backend") {
    const DistributionConfig cfg = default_config();
    const Persona persona = sample_persona(cfg, 0, 42);
    const VisitPlan plan = populate_mentions(cfg, build_visit_plan(cfg, persona));
    const NoteSpec& spec = plan.notes.front();

    auto mock = std::make_shared<MockBackend>(cfg);
    Gateway gateway(mock);

    GenerationRequest note_req;
    note_req.bundle = build_note_prompt(plan, spec, cfg);
    note_req.request_id = spec.note_id;
    const GenerationResult generated = gateway.generate(note_req);

    SyntheticNote note = make_note_record(spec.note_id, generated.text);
    note.patient_id = plan.patient_id;
    note.year_before_dx = spec.year_before_dx;

    const AnnotationOutcome outcome = annotate_note(note, gateway);
    CHECK(outcome.attempts == 1);
    CHECK(outcome.failed_sentence_ids.empty());
    CHECK(outcome.failure_reasons.empty());

    const auto sentences = sentence_texts(segment_sentences(note.text));
    REQUIRE(outcome.sentences.size() == sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const LabeledSentence& labeled = outcome.sentences[i];
        CHECK(labeled.sentence_id == make_sentence_id(note.note_id, i));
        CHECK(labeled.note_id == note.note_id);
        CHECK(labeled.patient_id == note.patient_id);
        CHECK(labeled.year_before_dx == note.year_before_dx);
        CHECK(labeled.sentence_text == sentences[i]);
        CHECK(labeled.labels == mock->labels_for_sentence(sentences[i]));
    }

    // Every required keyword sentence carries at least one positive label.
    std::size_t positive = 0;
    for (const auto& labeled : outcome.sentences) {
        positive += labeled.labels.empty() ? 0 : 1;
    }
    std::vector<std::string> distinct;
    for (const auto& mention : spec.mentions) {
        if (std::find(distinct.begin(), distinct.end(), mention.keyword) == distinct.end()) {
            distinct.push_back(mention.keyword);
        }
    }
    CHECK(positive >= distinct.size());

    CHECK_THROWS_AS(annotate_note(make_note_record("N", ""), gateway), ValidationError);
}

TEST_CASE("annotate_note repairs a malformed response once") {
    const std::string text = "Patient reports ongoing issues with the thermostat today.\n"
                             "Daughter notes trouble with the thermostat lately.";
    const SyntheticNote note = make_note_record("NOTE-1", text);

    auto backend = std::make_shared<ScriptedBackend>();
    backend->script("annotate-NOTE-1-a1", {ScriptedBackend::reply("garbled line")});
    backend->script("annotate-NOTE-1-a2",
                    {ScriptedBackend::reply("0: none\n1: concern_by_others\n")});
    Gateway gateway(backend, RetryPolicy{}, 0, [](std::chrono::milliseconds) {});

    const AnnotationOutcome outcome = annotate_note(note, gateway);
    CHECK(outcome.attempts == 2);
    CHECK(outcome.failed_sentence_ids.empty());
    REQUIRE(outcome.sentences.size() == 2);
    CHECK(outcome.sentences[0].labels.empty());
    CHECK(outcome.sentences[1].labels == std::vector<std::string>{"concern_by_others"});

    const auto seen = backend->seen();
    REQUIRE(seen.size() == 2);
    CHECK(seen[0].temperature == 0.0);
    CHECK(seen[0].bundle.kind == PromptKind::sentence_annotation);
    CHECK(seen[0].bundle.user_text.find("## Repair") == std::string::npos);
    CHECK(seen[1].bundle.user_text.find("## Repair") != std::string::npos);
    CHECK(seen[1].bundle.user_text.find("line without ':'") != std::string::npos);
}

TEST_CASE("annotate_note fails unparseable sentences individually") {
    const std::string text = "Sentence one stands alone.\nSentence two stands alone.";
    const SyntheticNote note = make_note_record("NOTE-2", text);

    SECTION("a persistently missing line fails only that sentence") {
        auto backend = std::make_shared<ScriptedBackend>();
        backend->script("annotate-NOTE-2-a1", {ScriptedBackend::reply("0: none\n")});
        backend->script("annotate-NOTE-2-a2", {ScriptedBackend::reply("0: none\n")});
        Gateway gateway(backend, RetryPolicy{}, 0, [](std::chrono::milliseconds) {});

        const AnnotationOutcome outcome = annotate_note(note, gateway);
        CHECK(outcome.attempts == 2);
        REQUIRE(outcome.sentences.size() == 1);
        CHECK(outcome.sentences[0].sentence_id == "NOTE-2-S0000");
        CHECK(outcome.failed_sentence_ids == std::vector<std::string>{"NOTE-2-S0001"});
        REQUIRE_FALSE(outcome.failure_reasons.empty());
        CHECK(outcome.failure_reasons[0].find("missing line for sentence 1") !=
              std::string::npos);
    }

    SECTION("an unknown label fails its sentence after the repair pass") {
        auto backend = std::make_shared<ScriptedBackend>();
        backend->script("annotate-NOTE-2-a1",
                        {ScriptedBackend::reply("0: banana\n1: none\n")});
        backend->script("annotate-NOTE-2-a2",
                        {ScriptedBackend::reply("0: banana\n1: none\n")});
        Gateway gateway(backend, RetryPolicy{}, 0, [](std::chrono::milliseconds) {});

        const AnnotationOutcome outcome = annotate_note(note, gateway);
        CHECK(outcome.attempts == 2);
        REQUIRE(outcome.sentences.size() == 1);
        CHECK(outcome.sentences[0].sentence_id == "NOTE-2-S0001");
        CHECK(outcome.failed_sentence_ids == std::vector<std::string>{"NOTE-2-S0000"});
        REQUIRE_FALSE(outcome.failure_reasons.empty());
        CHECK(outcome.failure_reasons[0].find("unknown label 'banana'") != std::string::npos);
    }

    SECTION("an out-of-range sentence index propagates as a protocol error") {
        auto backend = std::make_shared<ScriptedBackend>();
        backend->script("annotate-NOTE-2-a1", {ScriptedBackend::reply("7: none\n")});
        Gateway gateway(backend, RetryPolicy{}, 0, [](std::chrono::milliseconds) {});
        CHECK_THROWS_AS(annotate_note(note, gateway), ProtocolError);
    }
}

TEST_CASE("validate_labeled flags structural violations") {
    auto make_sentence = [](std::string id, std::string note_id) {
        LabeledSentence s;
        s.sentence_id = std::move(id);
        s.note_id = std::move(note_id);
        s.patient_id = "SYN-00000001";
        s.year_before_dx = 5;
        s.sentence_text = "Some sentence.";
        s.labels = {"cognitive_impairment"};
        return s;
    };

    SECTION("clean records pass, with and without a note-id universe") {
        const std::vector<LabeledSentence> records = {
            make_sentence("N1-S0000", "N1"), make_sentence("N1-S0001", "N1")};
        CHECK(validate_labeled(records).ok());
        const std::set<std::string> known = {"N1"};
        CHECK(validate_labeled(records, &known).ok());
    }

    SECTION("each defect is reported against the offending record") {
        std::vector<LabeledSentence> records = {
            make_sentence("", "N1"),           // empty id
            make_sentence("DUP", "N1"),        //
            make_sentence("DUP", "N1"),        // duplicate id
            make_sentence("N1-S0003", "N1"),   // empty text (below)
            make_sentence("N1-S0004", "N1"),   // bad year (below)
            make_sentence("N1-S0005", "N1"),   // label outside the closed set (below)
            make_sentence("N1-S0006", "GHOST") // dangling note id
        };
        records[3].sentence_text.clear();
        records[4].year_before_dx = 11;
        records[5].labels = {"cognitive_impairment", "made_up_label"};

        const std::set<std::string> known = {"N1"};
        const LabeledValidationReport report = validate_labeled(records, &known);
        REQUIRE(report.violations.size() == 6);
        CHECK(report.violations[0].message == "empty sentence_id");
        CHECK(report.violations[0].record_index == 0);
        CHECK(report.violations[1].message == "duplicate sentence_id");
        CHECK(report.violations[1].record_index == 2);
        CHECK(report.violations[2].message == "empty sentence_text");
        CHECK(report.violations[3].message == "year_before_dx outside [1, 10]");
        CHECK(report.violations[4].message.find("made_up_label") != std::string::npos);
        CHECK(report.violations[5].message.find("GHOST") != std::string::npos);

        // Without the universe the dangling reference is not checked.
        CHECK(validate_labeled(records).violations.size() == 5);
    }

    SECTION("year zero is rejected") {
        std::vector<LabeledSentence> records = {make_sentence("N1-S0000", "N1")};
        records[0].year_before_dx = 0;
        CHECK_FALSE(validate_labeled(records).ok());
    }
}
