#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "decomp/concept_graph.hpp"
#include "decomp/config.hpp"
#include "decomp/decomposer.hpp"
#include "decomp/teacher.hpp"

namespace decomp {

// Builds the configured teacher stack: scripted or http base, wrapped by the
// disk cache when cache_dir is set, wrapped by the script recorder when
// record_to is set.
std::shared_ptr<TeacherClient> make_teacher(const TeacherConfig& config);

// Builds the configured embedding provider ("deterministic-local" or
// "remote"). The dimension setting applies to the local provider; remote
// services dictate their own width.
std::unique_ptr<EmbeddingProvider> make_embedding(const ClusteringConfig& config);

// Filesystem-safe record id: anything outside [A-Za-z0-9._-] becomes '_'.
std::string sanitize_for_filename(const std::string& id);
std::filesystem::path tree_file_path(const std::filesystem::path& dir, size_t index,
                                     const std::string& id);

// Loads every *.json in the tree directory, sorted by filename.
std::vector<DecompositionTree> load_trees(const std::filesystem::path& dir);

// Where the decompose stage reads from: the sampled file when sampling is
// configured, the raw corpus otherwise.
std::filesystem::path decompose_input(const PipelineConfig& config);

// Each stage reads its inputs from disk and writes its outputs to disk, so
// running them one by one equals running `all`.
void run_sample(const PipelineConfig& config);
void run_decompose(const PipelineConfig& config);
void run_graph(const PipelineConfig& config);
void run_score(const PipelineConfig& config);
void run_curriculum(const PipelineConfig& config);
void run_all(const PipelineConfig& config);

}  // namespace decomp
