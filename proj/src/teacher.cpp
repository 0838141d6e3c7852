#include "decomp/teacher.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <regex>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "decomp/errors.hpp"
#include "decomp/util.hpp"

namespace decomp {

namespace {

using nlohmann::json;

bool is_retryable_status(int status) {
    return status == 0 || status == 429 || status >= 500;
}

json slots_to_json(const std::map<std::string, std::string>& slots) {
    json j = json::object();
    for (const auto& [k, v] : slots) {
        j[k] = v;
    }
    return j;
}

}  // namespace

std::map<std::string, std::string> effective_slots(const TeacherRequest& req) {
    std::map<std::string, std::string> slots = req.slots;
    if (req.template_id == Template::split_steps) {
        if (req.max_steps_k < 1) {
            throw ValidationError("split_steps request requires max_steps_k >= 1");
        }
        if (slots.count("max_steps")) {
            throw ValidationError(
                "split_steps request must carry max_steps_k, not a max_steps slot");
        }
        slots["max_steps"] = std::to_string(req.max_steps_k);
    } else if (req.max_steps_k != 0) {
        throw ValidationError(std::string("max_steps_k is only valid for split_steps, got it on ") +
                              template_name(req.template_id));
    }

    const std::vector<std::string>& demanded = demanded_slots(req.template_id);
    for (const std::string& name : demanded) {
        if (!slots.count(name)) {
            throw ValidationError(std::string(template_name(req.template_id)) +
                                  " request: missing slot " + name);
        }
    }
    for (const auto& [name, value] : slots) {
        (void)value;
        if (std::find(demanded.begin(), demanded.end(), name) == demanded.end()) {
            throw ValidationError(std::string(template_name(req.template_id)) +
                                  " request: unexpected slot " + name);
        }
    }
    return slots;
}

std::string script_key(const TeacherRequest& req) {
    json slots = slots_to_json(effective_slots(req));
    return std::string(template_name(req.template_id)) + ":" + sha256_hex(slots.dump());
}

std::string cache_key(const std::string& model, const TeacherRequest& req) {
    json j;
    j["model"] = model;
    j["template"] = template_name(req.template_id);
    j["slots"] = slots_to_json(effective_slots(req));
    j["temperature"] = req.temperature;
    return sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// ScriptedTeacher

ScriptedTeacher::ScriptedTeacher(const std::filesystem::path& script_file) {
    json j;
    try {
        j = json::parse(read_text_file(script_file));
    } catch (const json::parse_error& e) {
        throw ValidationError("script file " + script_file.string() + ": " + e.what());
    }
    load(j, script_file.string());
}

ScriptedTeacher::ScriptedTeacher(const nlohmann::json& script) {
    load(script, "inline script");
}

void ScriptedTeacher::load(const nlohmann::json& script, const std::string& origin) {
    if (!script.is_object()) {
        throw ValidationError(origin + ": script must be a JSON object");
    }
    for (const auto& [key, value] : script.items()) {
        if (value.is_string()) {
            replies_[key] = value.get<std::string>();
        } else if (value.is_object() && value.contains("reply") &&
                   value.at("reply").is_string()) {
            replies_[key] = value.at("reply").get<std::string>();
        } else {
            throw ValidationError(origin + ": entry " + key +
                                  " must be a string or an object with a reply field");
        }
    }
}

TeacherReply ScriptedTeacher::complete(const TeacherRequest& req) {
    std::string key = script_key(req);
    auto it = replies_.find(key);
    if (it == replies_.end()) {
        throw Error(std::string("scripted teacher has no reply for ") +
                    template_name(req.template_id) + " with slots " +
                    slots_to_json(effective_slots(req)).dump() + " (key " + key + ")");
    }
    TeacherReply reply;
    reply.text = it->second;
    reply.model_name = model_name();
    reply.latency_ms = 0.0;
    reply.from_cache = false;
    return reply;
}

// ---------------------------------------------------------------------------
// HttpTeacher

class HttpTeacher::Gate {
public:
    explicit Gate(int n) : sem_(n) {}
    void acquire() { sem_.acquire(); }
    void release() { sem_.release(); }

private:
    std::counting_semaphore<4096> sem_;
};

HttpTeacher::HttpTeacher(GatewayConfig config, PromptSet prompts)
    : config_(std::move(config)), prompts_(std::move(prompts)) {
    if (config_.model.empty()) {
        throw ValidationError("gateway config requires a model name");
    }
    if (config_.max_in_flight < 1 || config_.max_in_flight > 4096) {
        throw ValidationError("max in-flight must be between 1 and 4096");
    }
    if (config_.retry.max_attempts < 1) {
        throw ValidationError("retry max attempts must be >= 1");
    }
    static const std::regex url_re(R"(^(https?://[^/\s]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url_re)) {
        throw ValidationError("endpoint must look like http(s)://host[:port][/path], got: " +
                              config_.endpoint);
    }
    scheme_host_ = m[1].str();
    path_ = m[2].matched && m[2].str() != "/" ? m[2].str() : "/v1/chat/completions";
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            api_key_ = key;
        }
    }
    gate_ = std::make_shared<Gate>(config_.max_in_flight);
}

TeacherReply HttpTeacher::attempt_once(const TeacherRequest& req) {
    json body;
    body["model"] = config_.model;
    body["messages"] = json::array(
        {json{{"role", "user"},
              {"content", prompts_.render(req.template_id, effective_slots(req))}}});
    body["temperature"] = req.temperature;

    httplib::Client client(scheme_host_);
    auto seconds = static_cast<time_t>(config_.timeout_seconds);
    auto micros = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }

    auto started = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(path_, headers, body.dump(), "application/json");
    auto elapsed = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - started)
                       .count();

    if (!res) {
        throw TransportError("request " + req.request_id + ": connection failed: " +
                                 httplib::to_string(res.error()),
                             0);
    }
    if (res->status == 401 || res->status == 403) {
        throw AuthError("request " + req.request_id + ": authentication rejected (HTTP " +
                            std::to_string(res->status) + ")",
                        res->status);
    }
    if (res->status != 200) {
        throw TransportError("request " + req.request_id + ": HTTP " +
                                 std::to_string(res->status),
                             res->status);
    }

    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw TransportError("request " + req.request_id +
                                 ": malformed completion body: " + e.what(),
                             200);
    }
    std::string text;
    if (parsed.contains("choices") && parsed.at("choices").is_array() &&
        !parsed.at("choices").empty()) {
        const json& choice = parsed.at("choices").at(0);
        if (choice.contains("message") && choice.at("message").contains("content") &&
            choice.at("message").at("content").is_string()) {
            text = choice.at("message").at("content").get<std::string>();
        }
    }
    if (text.empty()) {
        throw TransportError("request " + req.request_id + ": completion has no content",
                             200);
    }

    TeacherReply reply;
    reply.text = std::move(text);
    reply.model_name = config_.model;
    reply.latency_ms = elapsed;
    reply.from_cache = false;
    return reply;
}

TeacherReply HttpTeacher::complete(const TeacherRequest& req) {
    struct GateGuard {
        explicit GateGuard(Gate& g) : gate(g) { gate.acquire(); }
        ~GateGuard() { gate.release(); }
        Gate& gate;
    };
    for (int attempt = 1;; ++attempt) {
        try {
            GateGuard guard(*gate_);
            return attempt_once(req);
        } catch (const AuthError&) {
            throw;
        } catch (const TransportError& e) {
            if (!is_retryable_status(e.last_status) ||
                attempt >= config_.retry.max_attempts) {
                throw;
            }
            double sleep_s = config_.retry.backoff_base_seconds *
                             static_cast<double>(1u << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
        }
    }
}

// ---------------------------------------------------------------------------
// CachingTeacher

CachingTeacher::CachingTeacher(std::shared_ptr<TeacherClient> inner,
                               std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

TeacherReply CachingTeacher::complete(const TeacherRequest& req) {
    std::string key = cache_key(inner_->model_name(), req);
    std::shared_ptr<std::mutex> key_mutex;
    {
        std::lock_guard<std::mutex> lock(map_mutex_);
        auto& slot = key_mutexes_[key];
        if (!slot) {
            slot = std::make_shared<std::mutex>();
        }
        key_mutex = slot;
    }
    std::lock_guard<std::mutex> lock(*key_mutex);

    std::filesystem::path file = dir_ / (key + ".json");
    if (std::filesystem::exists(file)) {
        json cached;
        try {
            cached = json::parse(read_text_file(file));
        } catch (const json::parse_error& e) {
            throw ValidationError("cache file " + file.string() + ": " + e.what());
        }
        TeacherReply reply;
        reply.text = cached.at("reply").get<std::string>();
        reply.model_name = cached.value("model", inner_->model_name());
        reply.latency_ms = 0.0;
        reply.from_cache = true;
        return reply;
    }

    TeacherReply reply = inner_->complete(req);
    nlohmann::ordered_json record;
    record["model"] = inner_->model_name();
    record["template"] = template_name(req.template_id);
    record["slots"] = slots_to_json(effective_slots(req));
    record["temperature"] = req.temperature;
    record["reply"] = reply.text;
    write_text_file(file, record.dump(2) + "\n");
    return reply;
}

// ---------------------------------------------------------------------------
// RecordingTeacher

RecordingTeacher::RecordingTeacher(std::shared_ptr<TeacherClient> inner,
                                   std::filesystem::path script_file)
    : inner_(std::move(inner)), script_file_(std::move(script_file)) {}

TeacherReply RecordingTeacher::complete(const TeacherRequest& req) {
    TeacherReply reply = inner_->complete(req);
    std::lock_guard<std::mutex> lock(mutex_);
    json script = json::object();
    if (std::filesystem::exists(script_file_)) {
        try {
            script = json::parse(read_text_file(script_file_));
        } catch (const json::parse_error& e) {
            throw ValidationError("script file " + script_file_.string() + ": " +
                                  e.what());
        }
    }
    json entry;
    entry["template"] = template_name(req.template_id);
    entry["slots"] = slots_to_json(effective_slots(req));
    entry["reply"] = reply.text;
    script[script_key(req)] = entry;
    write_text_file(script_file_, script.dump(2) + "\n");
    return reply;
}

}  // namespace decomp
