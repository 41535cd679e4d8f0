#pragma once

// HTTP chat-completion backend. Speaks the common chat wire shape: POST a
// JSON body with system/user messages, read back choices[0].message.content.
// Endpoint, model, and credentials come from environment variables so secrets
// never appear on command lines.

#include <cstdlib>
#include <memory>
#include <string>

// httplib must be included before use; TLS support is compiled in when the
// build defines CPPHTTPLIB_OPENSSL_SUPPORT.
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cohortforge/errors.hpp"
#include "cohortforge/gateway.hpp"

namespace cohortforge {

inline constexpr const char* kEndpointEnvVar = "COHORTFORGE_LLM_ENDPOINT";
inline constexpr const char* kModelEnvVar = "COHORTFORGE_LLM_MODEL";
inline constexpr const char* kApiKeyEnvVar = "COHORTFORGE_LLM_API_KEY";

struct HttpBackendConfig {
    std::string endpoint; // e.g. http://host:8080/v1/chat/completions
    std::string model;
    std::string api_key;
    int timeout_seconds = 120;

    static HttpBackendConfig from_env() {
        HttpBackendConfig cfg;
        if (const char* endpoint = std::getenv(kEndpointEnvVar)) {
            cfg.endpoint = endpoint;
        }
        if (const char* model = std::getenv(kModelEnvVar)) {
            cfg.model = model;
        }
        if (const char* key = std::getenv(kApiKeyEnvVar)) {
            cfg.api_key = key;
        }
        return cfg;
    }
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.endpoint.empty()) {
            throw UsageError(std::string("http backend requires an endpoint; set ") +
                             kEndpointEnvVar);
        }
        split_endpoint();
    }

    std::string backend_id() const override {
        return cfg_.model.empty() ? "http" : "http:" + cfg_.model;
    }

    std::string complete(const GenerationRequest& req) override {
        nlohmann::json body;
        body["model"] = cfg_.model;
        body["messages"] = nlohmann::json::array(
            {{{"role", "system"}, {"content", req.bundle.system_text}},
             {{"role", "user"}, {"content", req.bundle.user_text}}});
        body["temperature"] = req.temperature;
        body["max_tokens"] = req.max_output_tokens;

        httplib::Client client(base_url_);
        client.set_connection_timeout(cfg_.timeout_seconds, 0);
        client.set_read_timeout(cfg_.timeout_seconds, 0);
        client.set_write_timeout(cfg_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!cfg_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + cfg_.api_key);
        }
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res) {
            throw TransientBackendError("request to " + base_url_ +
                                        " failed: " + httplib::to_string(res.error()));
        }
        classify_status(res->status, res->body);
        return parse_completion(res->body);
    }

private:
    void split_endpoint() {
        const auto scheme_end = cfg_.endpoint.find("://");
        if (scheme_end == std::string::npos) {
            throw UsageError("endpoint must start with http:// or https://");
        }
        const std::string scheme = cfg_.endpoint.substr(0, scheme_end);
        if (scheme != "http" && scheme != "https") {
            throw UsageError("unsupported endpoint scheme: " + scheme);
        }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (scheme == "https") {
            throw UsageError("this build lacks TLS support; use an http:// endpoint");
        }
#endif
        const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base_url_ = cfg_.endpoint;
            path_ = "/";
        } else {
            base_url_ = cfg_.endpoint.substr(0, path_start);
            path_ = cfg_.endpoint.substr(path_start);
        }
    }

    static void classify_status(int status, const std::string& body) {
        if (status == 200) {
            return;
        }
        const std::string detail = "status " + std::to_string(status) +
                                   (body.empty() ? "" : ": " + body.substr(0, 200));
        if (status == 401 || status == 403) {
            throw AuthError("backend rejected credentials (" + detail + ")");
        }
        if (status == 408 || status == 429 || status >= 500) {
            throw TransientBackendError("backend temporarily unavailable (" + detail + ")");
        }
        throw ProtocolError("backend rejected the request (" + detail + ")");
    }

    static std::string parse_completion(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ProtocolError(std::string("backend response is not valid JSON: ") + e.what());
        }
        try {
            const auto& choices = j.at("choices");
            if (!choices.is_array() || choices.empty()) {
                throw ProtocolError("backend response has no choices");
            }
            std::string text = choices[0].at("message").at("content").get<std::string>();
            if (text.empty()) {
                throw ProtocolError("backend returned an empty completion");
            }
            return text;
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("backend response shape unexpected: ") + e.what());
        }
    }

    HttpBackendConfig cfg_;
    std::string base_url_;
    std::string path_;
};

} // namespace cohortforge
