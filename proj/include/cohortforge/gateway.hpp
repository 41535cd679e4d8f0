#pragma once

// Backend-agnostic text-generation client. Owns retries (exponential backoff
// with full jitter for transient failures only) and bounded-concurrency batch
// execution with in-order results.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cohortforge/digest.hpp"
#include "cohortforge/errors.hpp"
#include "cohortforge/prompt.hpp"
#include "cohortforge/rng.hpp"

namespace cohortforge {

struct GenerationRequest {
    PromptBundle bundle;
    double temperature = 0.7;
    int max_output_tokens = 1500;
    std::string request_id;
};

struct GenerationResult {
    std::string request_id;
    std::string text;
    std::string backend_id;
    std::chrono::milliseconds latency{0};
    int attempt_count = 1;
};

// A text-generation backend. Implementations must be safe to call from
// multiple threads concurrently.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string backend_id() const = 0;
    // Fills text only; request_id/latency/attempt_count are owned by the gateway.
    virtual std::string complete(const GenerationRequest& req) = 0;
};

struct RetryPolicy {
    int max_retries = 3;                        // retries after the first attempt
    std::chrono::milliseconds base_delay{250};  // pre-jitter delay of the first retry
    std::chrono::milliseconds max_delay{8000};  // pre-jitter cap
};

class Gateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    Gateway(std::shared_ptr<Backend> backend, RetryPolicy policy = {},
            std::uint64_t jitter_seed = 0, Sleeper sleeper = {})
        : backend_(std::move(backend)),
          policy_(policy),
          jitter_seed_(jitter_seed),
          sleeper_(sleeper ? std::move(sleeper) : [](std::chrono::milliseconds d) {
              std::this_thread::sleep_for(d);
          }) {
        if (!backend_) {
            throw UsageError("Gateway requires a backend");
        }
        if (policy_.max_retries < 0) {
            throw RangeError("max_retries must be >= 0");
        }
    }

    const std::string backend_id() const { return backend_->backend_id(); }

    // Sends one request. Transient failures are retried with exponential
    // backoff and full jitter; auth and protocol failures are never retried.
    GenerationResult generate(const GenerationRequest& req) {
        const auto started = std::chrono::steady_clock::now();
        std::string last_error;
        for (int attempt = 1; attempt <= policy_.max_retries + 1; ++attempt) {
            try {
                std::string text = backend_->complete(req);
                if (text.empty()) {
                    throw ProtocolError("backend returned an empty completion");
                }
                GenerationResult result;
                result.request_id = req.request_id;
                result.text = std::move(text);
                result.backend_id = backend_->backend_id();
                result.attempt_count = attempt;
                result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - started);
                return result;
            } catch (const AuthError&) {
                throw; // credential problems will not heal on retry
            } catch (const ProtocolError&) {
                throw; // malformed responses are surfaced, not retried
            } catch (const TransientBackendError& e) {
                last_error = e.what();
                if (attempt > policy_.max_retries) {
                    break;
                }
                sleeper_(backoff_delay(req.request_id, attempt));
            }
        }
        throw TransportError("generation failed after " +
                             std::to_string(policy_.max_retries + 1) + " attempts; last error: " +
                             last_error);
    }

    struct BatchOutcome {
        std::optional<GenerationResult> result;
        std::string error_kind;    // "auth", "protocol", "transport", or "error"
        std::string error_message;

        bool ok() const { return result.has_value(); }
    };

    // Executes requests with at most `concurrency` in flight; outcome i always
    // corresponds to request i. Per-request failures fill their slot without
    // aborting the batch.
    std::vector<BatchOutcome> generate_batch(const std::vector<GenerationRequest>& requests,
                                             int concurrency) {
        if (concurrency < 1) {
            throw RangeError("generate_batch: concurrency must be >= 1");
        }
        std::vector<BatchOutcome> outcomes(requests.size());
        if (requests.empty()) {
            return outcomes;
        }
        const auto workers = static_cast<std::size_t>(concurrency) < requests.size()
                                 ? static_cast<std::size_t>(concurrency)
                                 : requests.size();
        std::atomic<std::size_t> next{0};
        auto run = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= requests.size()) {
                    return;
                }
                try {
                    outcomes[i].result = generate(requests[i]);
                } catch (const AuthError& e) {
                    outcomes[i] = BatchOutcome{std::nullopt, "auth", e.what()};
                } catch (const ProtocolError& e) {
                    outcomes[i] = BatchOutcome{std::nullopt, "protocol", e.what()};
                } catch (const TransportError& e) {
                    outcomes[i] = BatchOutcome{std::nullopt, "transport", e.what()};
                } catch (const std::exception& e) {
                    outcomes[i] = BatchOutcome{std::nullopt, "error", e.what()};
                }
            }
        };
        if (workers == 1) {
            run();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t t = 0; t < workers; ++t) {
                pool.emplace_back(run);
            }
            for (auto& th : pool) {
                th.join();
            }
        }
        return outcomes;
    }

private:
    // Exponential backoff, capped, with full jitter: the sleep is uniform in
    // [0, min(base * 2^(attempt-1), max)]. Jitter randomness is derived from
    // the request id and attempt index so delays never perturb pipeline
    // randomness.
    std::chrono::milliseconds backoff_delay(const std::string& request_id, int attempt) {
        double cap = static_cast<double>(policy_.base_delay.count());
        for (int i = 1; i < attempt; ++i) {
            cap *= 2.0;
            if (cap >= static_cast<double>(policy_.max_delay.count())) {
                cap = static_cast<double>(policy_.max_delay.count());
                break;
            }
        }
        if (cap > static_cast<double>(policy_.max_delay.count())) {
            cap = static_cast<double>(policy_.max_delay.count());
        }
        Sha256 hasher;
        hasher.update(request_id);
        const auto digest = hasher.finish();
        std::uint64_t key = 0;
        for (int i = 0; i < 8; ++i) {
            key = (key << 8) | digest[static_cast<std::size_t>(i)];
        }
        Rng rng(derive_seed(jitter_seed_ ^ key, static_cast<std::uint64_t>(attempt)));
        const auto jittered = static_cast<std::int64_t>(rng.next_double() * cap);
        return std::chrono::milliseconds(jittered);
    }

    std::shared_ptr<Backend> backend_;
    RetryPolicy policy_;
    std::uint64_t jitter_seed_;
    Sleeper sleeper_;
};

using BatchOutcome = Gateway::BatchOutcome;

} // namespace cohortforge
