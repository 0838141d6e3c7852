#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "decomp/decomposer.hpp"
#include "decomp/difficulty.hpp"
#include "decomp/teacher.hpp"

namespace decomp {

struct TeacherConfig {
    std::string mode = "scripted";  // "scripted" or "http"
    std::string script;             // reply file for scripted mode
    std::string record_to;          // append live replies to this script file
    GatewayConfig gateway;          // http mode settings, plus cache_dir for both
};

struct ClusteringConfig {
    std::string embedding = "deterministic-local";  // or "remote"
    int dimension = 256;
    // The two providers have different similarity geometry, so the default
    // threshold depends on which one is active.
    std::optional<double> delta_override;
    // remote provider settings
    std::string endpoint;
    std::string model;
    std::string api_key_env = "EMBEDDING_API_KEY";
    double timeout_seconds = 30.0;

    double delta() const {
        if (delta_override) return *delta_override;
        return embedding == "remote" ? 0.85 : 0.5;
    }
};

struct SamplingConfig {
    std::string quotas;  // quota file; required by the sample stage
    uint64_t seed = 17;
};

struct CurriculumConfig {
    int k_stages = 3;
    double total_epochs = 3.0;
    uint64_t seed = 17;
};

struct PathsConfig {
    std::string corpus_in = "corpus.jsonl";
    std::string sampled = "out/sampled.jsonl";
    std::string tree_dir = "out/trees";
    std::string graph_json = "out/graph.json";
    std::string graph_dot = "out/graph.dot";
    std::string annotations = "out/annotations.jsonl";
    std::string plan_dir = "out/plan";
    std::string run_log = "out/run_log.jsonl";
};

struct PipelineConfig {
    TeacherConfig teacher;
    DecompositionParams decomposition;
    ClusteringConfig clustering;
    DifficultyParams difficulty;
    SamplingConfig sampling;
    CurriculumConfig curriculum;
    PathsConfig paths;
};

// Strict parse: unknown keys anywhere are rejected, every section optional,
// absent values keep the module defaults above.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace decomp
