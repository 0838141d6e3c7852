#include "decomp/remote_embedding.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "decomp/errors.hpp"

namespace decomp {

namespace {

using nlohmann::json;

bool is_retryable_status(int status) {
    return status == 0 || status == 429 || status >= 500;
}

}  // namespace

RemoteEmbedding::RemoteEmbedding(Config config)
    : config_(std::move(config)), dimension_(config_.dimension) {
    if (config_.model.empty()) {
        throw ValidationError("remote embedding requires a model name");
    }
    static const std::regex url_re(R"(^(https?://[^/\s]+)(/.*)?$)");
    if (!std::regex_match(config_.endpoint, url_re)) {
        throw ValidationError(
            "embedding endpoint must look like http(s)://host[:port][/path], got: " +
            config_.endpoint);
    }
    if (config_.retry.max_attempts < 1) {
        throw ValidationError("retry max attempts must be >= 1");
    }
}

std::vector<double> RemoteEmbedding::embed(const std::string& text) const {
    static const std::regex url_re(R"(^(https?://[^/\s]+)(/.*)?$)");
    std::smatch m;
    std::regex_match(config_.endpoint, m, url_re);
    std::string scheme_host = m[1].str();
    std::string path = m[2].matched && m[2].str() != "/" ? m[2].str() : "/v1/embeddings";

    std::string api_key;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            api_key = key;
        }
    }

    json body;
    body["model"] = config_.model;
    body["input"] = json::array({text});

    for (int attempt = 1;; ++attempt) {
        try {
            httplib::Client client(scheme_host);
            auto seconds = static_cast<time_t>(config_.timeout_seconds);
            auto micros = static_cast<time_t>(
                (config_.timeout_seconds - static_cast<double>(seconds)) * 1e6);
            client.set_connection_timeout(seconds, micros);
            client.set_read_timeout(seconds, micros);
            client.set_write_timeout(seconds, micros);
            httplib::Headers headers;
            if (!api_key.empty()) {
                headers.emplace("Authorization", "Bearer " + api_key);
            }

            httplib::Result res = client.Post(path, headers, body.dump(), "application/json");
            if (!res) {
                throw TransportError(
                    "embedding request: connection failed: " + httplib::to_string(res.error()),
                    0);
            }
            if (res->status == 401 || res->status == 403) {
                throw AuthError("embedding request: authentication rejected (HTTP " +
                                    std::to_string(res->status) + ")",
                                res->status);
            }
            if (res->status != 200) {
                throw TransportError("embedding request: HTTP " + std::to_string(res->status),
                                     res->status);
            }

            json parsed;
            try {
                parsed = json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw TransportError(std::string("embedding request: malformed body: ") +
                                         e.what(),
                                     200);
            }
            if (!parsed.contains("data") || !parsed.at("data").is_array() ||
                parsed.at("data").empty() || !parsed.at("data").at(0).contains("embedding") ||
                !parsed.at("data").at(0).at("embedding").is_array()) {
                throw TransportError("embedding request: reply carries no embedding", 200);
            }

            std::vector<double> vec =
                parsed.at("data").at(0).at("embedding").get<std::vector<double>>();
            if (vec.empty()) {
                throw TransportError("embedding request: empty vector", 200);
            }
            if (dimension_ == 0) {
                dimension_ = static_cast<int>(vec.size());
            } else if (static_cast<int>(vec.size()) != dimension_) {
                throw ValidationError("embedding dimension changed mid-run: expected " +
                                      std::to_string(dimension_) + ", got " +
                                      std::to_string(vec.size()));
            }

            double sq = 0.0;
            for (double x : vec) sq += x * x;
            if (sq > 0.0) {
                double inv = 1.0 / std::sqrt(sq);
                for (double& x : vec) x *= inv;
            }
            return vec;
        } catch (const AuthError&) {
            throw;
        } catch (const TransportError& e) {
            if (!is_retryable_status(e.last_status) || attempt >= config_.retry.max_attempts) {
                throw;
            }
            double sleep_s =
                config_.retry.backoff_base_seconds * static_cast<double>(1u << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
        }
    }
}

}  // namespace decomp
