#include "decomp/config.hpp"

#include <set>

#include "decomp/errors.hpp"
#include "decomp/util.hpp"

namespace decomp {

namespace {

using nlohmann::json;

const json& expect_object(const json& j, const std::string& where) {
    if (!j.is_object())
        throw ValidationError("config: " + where + " must be an object");
    return j;
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key()))
            throw ValidationError("config: " + where + ": unknown field '" + it.key() + "'");
    }
}

std::string get_string(const json& obj, const std::string& key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_string())
        throw ValidationError("config: " + where + "." + key + " must be a string");
    return v.get<std::string>();
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ValidationError("config: " + where + "." + key + " must be a number");
    return v.get<double>();
}

int get_int(const json& obj, const std::string& key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number_integer())
        throw ValidationError("config: " + where + "." + key + " must be an integer");
    return v.get<int>();
}

uint64_t get_seed(const json& obj, const std::string& key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<int64_t>() < 0))
        throw ValidationError("config: " + where + "." + key +
                              " must be a non-negative integer");
    return v.get<uint64_t>();
}

void parse_retry(const json& j, RetryPolicy& out) {
    expect_object(j, "teacher.retry");
    reject_unknown(j, {"max_attempts", "backoff_base_seconds"}, "teacher.retry");
    if (j.contains("max_attempts")) out.max_attempts = get_int(j, "max_attempts", "teacher.retry");
    if (j.contains("backoff_base_seconds"))
        out.backoff_base_seconds = get_number(j, "backoff_base_seconds", "teacher.retry");
}

void parse_teacher(const json& j, TeacherConfig& out) {
    expect_object(j, "teacher");
    reject_unknown(j,
                   {"mode", "script", "record_to", "endpoint", "api_key_env", "model",
                    "timeout_seconds", "max_in_flight", "retry", "cache_dir"},
                   "teacher");
    if (j.contains("mode")) {
        out.mode = get_string(j, "mode", "teacher");
        if (out.mode != "scripted" && out.mode != "http")
            throw ValidationError("config: teacher.mode must be 'scripted' or 'http', got '" +
                                  out.mode + "'");
    }
    if (j.contains("script")) out.script = get_string(j, "script", "teacher");
    if (j.contains("record_to")) out.record_to = get_string(j, "record_to", "teacher");
    if (j.contains("endpoint")) out.gateway.endpoint = get_string(j, "endpoint", "teacher");
    if (j.contains("api_key_env"))
        out.gateway.api_key_env = get_string(j, "api_key_env", "teacher");
    if (j.contains("model")) out.gateway.model = get_string(j, "model", "teacher");
    if (j.contains("timeout_seconds"))
        out.gateway.timeout_seconds = get_number(j, "timeout_seconds", "teacher");
    if (j.contains("max_in_flight"))
        out.gateway.max_in_flight = get_int(j, "max_in_flight", "teacher");
    if (j.contains("retry")) parse_retry(j.at("retry"), out.gateway.retry);
    if (j.contains("cache_dir")) out.gateway.cache_dir = get_string(j, "cache_dir", "teacher");
}

void parse_decomposition(const json& j, DecompositionParams& out) {
    expect_object(j, "decomposition");
    reject_unknown(j,
                   {"max_depth", "max_steps", "max_retries", "verification_mode", "call_budget"},
                   "decomposition");
    if (j.contains("max_depth")) out.max_depth = get_int(j, "max_depth", "decomposition");
    if (j.contains("max_steps")) out.max_steps = get_int(j, "max_steps", "decomposition");
    if (j.contains("max_retries")) out.max_retries = get_int(j, "max_retries", "decomposition");
    if (j.contains("verification_mode")) {
        std::string mode = get_string(j, "verification_mode", "decomposition");
        if (mode == "strict")
            out.verification_mode = DecompositionParams::Mode::strict;
        else if (mode == "lenient")
            out.verification_mode = DecompositionParams::Mode::lenient;
        else
            throw ValidationError(
                "config: decomposition.verification_mode must be 'strict' or 'lenient', got '" +
                mode + "'");
    }
    if (j.contains("call_budget")) out.call_budget = get_int(j, "call_budget", "decomposition");
}

void parse_clustering(const json& j, ClusteringConfig& out) {
    expect_object(j, "clustering");
    reject_unknown(j,
                   {"embedding", "dimension", "delta", "endpoint", "model", "api_key_env",
                    "timeout_seconds"},
                   "clustering");
    if (j.contains("embedding")) {
        out.embedding = get_string(j, "embedding", "clustering");
        if (out.embedding != "deterministic-local" && out.embedding != "remote")
            throw ValidationError(
                "config: clustering.embedding must be 'deterministic-local' or 'remote', got '" +
                out.embedding + "'");
    }
    if (j.contains("dimension")) out.dimension = get_int(j, "dimension", "clustering");
    if (j.contains("delta")) out.delta_override = get_number(j, "delta", "clustering");
    if (j.contains("endpoint")) out.endpoint = get_string(j, "endpoint", "clustering");
    if (j.contains("model")) out.model = get_string(j, "model", "clustering");
    if (j.contains("api_key_env")) out.api_key_env = get_string(j, "api_key_env", "clustering");
    if (j.contains("timeout_seconds"))
        out.timeout_seconds = get_number(j, "timeout_seconds", "clustering");
}

void parse_difficulty(const json& j, DifficultyParams& out) {
    expect_object(j, "difficulty");
    reject_unknown(j, {"alpha1", "alpha2"}, "difficulty");
    if (j.contains("alpha1")) out.alpha1 = get_number(j, "alpha1", "difficulty");
    if (j.contains("alpha2")) out.alpha2 = get_number(j, "alpha2", "difficulty");
}

void parse_sampling(const json& j, SamplingConfig& out) {
    expect_object(j, "sampling");
    reject_unknown(j, {"quotas", "seed"}, "sampling");
    if (j.contains("quotas")) out.quotas = get_string(j, "quotas", "sampling");
    if (j.contains("seed")) out.seed = get_seed(j, "seed", "sampling");
}

void parse_curriculum(const json& j, CurriculumConfig& out) {
    expect_object(j, "curriculum");
    reject_unknown(j, {"k_stages", "total_epochs", "seed"}, "curriculum");
    if (j.contains("k_stages")) out.k_stages = get_int(j, "k_stages", "curriculum");
    if (j.contains("total_epochs")) out.total_epochs = get_number(j, "total_epochs", "curriculum");
    if (j.contains("seed")) out.seed = get_seed(j, "seed", "curriculum");
}

void parse_paths(const json& j, PathsConfig& out) {
    expect_object(j, "paths");
    reject_unknown(j,
                   {"corpus_in", "sampled", "tree_dir", "graph_json", "graph_dot", "annotations",
                    "plan_dir", "run_log"},
                   "paths");
    if (j.contains("corpus_in")) out.corpus_in = get_string(j, "corpus_in", "paths");
    if (j.contains("sampled")) out.sampled = get_string(j, "sampled", "paths");
    if (j.contains("tree_dir")) out.tree_dir = get_string(j, "tree_dir", "paths");
    if (j.contains("graph_json")) out.graph_json = get_string(j, "graph_json", "paths");
    if (j.contains("graph_dot")) out.graph_dot = get_string(j, "graph_dot", "paths");
    if (j.contains("annotations")) out.annotations = get_string(j, "annotations", "paths");
    if (j.contains("plan_dir")) out.plan_dir = get_string(j, "plan_dir", "paths");
    if (j.contains("run_log")) out.run_log = get_string(j, "run_log", "paths");
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j) {
    expect_object(j, "top level");
    reject_unknown(j,
                   {"teacher", "decomposition", "clustering", "difficulty", "sampling",
                    "curriculum", "paths"},
                   "top level");
    PipelineConfig cfg;
    if (j.contains("teacher")) parse_teacher(j.at("teacher"), cfg.teacher);
    if (j.contains("decomposition")) parse_decomposition(j.at("decomposition"), cfg.decomposition);
    if (j.contains("clustering")) parse_clustering(j.at("clustering"), cfg.clustering);
    if (j.contains("difficulty")) parse_difficulty(j.at("difficulty"), cfg.difficulty);
    if (j.contains("sampling")) parse_sampling(j.at("sampling"), cfg.sampling);
    if (j.contains("curriculum")) parse_curriculum(j.at("curriculum"), cfg.curriculum);
    if (j.contains("paths")) parse_paths(j.at("paths"), cfg.paths);
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

}  // namespace decomp
