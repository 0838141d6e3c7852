#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "decomp/prompts.hpp"

namespace decomp {

struct TeacherRequest {
    Template template_id = Template::solve_blind;
    std::map<std::string, std::string> slots;
    int max_steps_k = 0;  // split_steps only; must be >= 1 there, 0 elsewhere
    double temperature = 0.0;
    std::string request_id;  // opaque, for logging only
};

struct TeacherReply {
    std::string text;
    std::string model_name;
    double latency_ms = 0.0;
    bool from_cache = false;
};

struct RetryPolicy {
    int max_attempts = 3;
    double backoff_base_seconds = 0.5;  // sleep base * 2^(attempt-1) between tries
};

struct GatewayConfig {
    std::string endpoint;  // base URL; path defaults to /v1/chat/completions
    std::string api_key_env = "TEACHER_API_KEY";
    std::string model;
    double timeout_seconds = 60.0;
    int max_in_flight = 4;
    RetryPolicy retry;
    std::optional<std::filesystem::path> cache_dir;
};

// Validates the slot set and, for split_steps, folds max_steps_k in as the
// max_steps slot. Every consumer (renderer, script key, cache key) sees the
// same effective map.
std::map<std::string, std::string> effective_slots(const TeacherRequest& req);

// "template_name:sha256(slots-json)" — how a scripted teacher indexes replies.
std::string script_key(const TeacherRequest& req);

// Content address for the on-disk cache; covers model, template, slots, and
// temperature.
std::string cache_key(const std::string& model, const TeacherRequest& req);

class TeacherClient {
public:
    virtual ~TeacherClient() = default;
    // Thread-safe. Throws TransportError / AuthError on gateway failures and
    // Error when a scripted teacher has no reply for the request.
    virtual TeacherReply complete(const TeacherRequest& req) = 0;
    virtual std::string model_name() const = 0;
};

// Deterministic replay of recorded replies, keyed by script_key. The file is
// a JSON object: key -> reply string, or key -> {"template", "slots",
// "reply"} (the object form carries a human-readable echo of what was
// hashed).
class ScriptedTeacher : public TeacherClient {
public:
    explicit ScriptedTeacher(const std::filesystem::path& script_file);
    explicit ScriptedTeacher(const nlohmann::json& script);

    TeacherReply complete(const TeacherRequest& req) override;
    std::string model_name() const override { return "scripted"; }

private:
    void load(const nlohmann::json& script, const std::string& origin);
    std::map<std::string, std::string> replies_;
};

// Chat-completions HTTP client with bounded in-flight concurrency, retries
// with exponential backoff on 429/5xx/connection failures, and bearer auth
// from an environment variable.
class HttpTeacher : public TeacherClient {
public:
    HttpTeacher(GatewayConfig config, PromptSet prompts);

    TeacherReply complete(const TeacherRequest& req) override;
    std::string model_name() const override { return config_.model; }

private:
    TeacherReply attempt_once(const TeacherRequest& req);

    GatewayConfig config_;
    PromptSet prompts_;
    std::string scheme_host_;  // e.g. http://127.0.0.1:8080
    std::string path_;         // e.g. /v1/chat/completions
    std::string api_key_;
    class Gate;
    std::shared_ptr<Gate> gate_;
};

// Decorator adding a content-addressed disk cache. Identical requests are
// served from disk with from_cache=true; concurrent identical requests are
// collapsed to one upstream call.
class CachingTeacher : public TeacherClient {
public:
    CachingTeacher(std::shared_ptr<TeacherClient> inner, std::filesystem::path dir);

    TeacherReply complete(const TeacherRequest& req) override;
    std::string model_name() const override { return inner_->model_name(); }

private:
    std::shared_ptr<TeacherClient> inner_;
    std::filesystem::path dir_;
    std::mutex map_mutex_;
    std::unordered_map<std::string, std::shared_ptr<std::mutex>> key_mutexes_;
};

// Decorator that appends every (request, reply) pair to a script file so a
// live session can be replayed later by ScriptedTeacher.
class RecordingTeacher : public TeacherClient {
public:
    RecordingTeacher(std::shared_ptr<TeacherClient> inner,
                     std::filesystem::path script_file);

    TeacherReply complete(const TeacherRequest& req) override;
    std::string model_name() const override { return inner_->model_name(); }

private:
    std::shared_ptr<TeacherClient> inner_;
    std::filesystem::path script_file_;
    std::mutex mutex_;
};

}  // namespace decomp
