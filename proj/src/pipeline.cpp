#include "decomp/pipeline.hpp"

#include <algorithm>
#include <cstdio>

#include "decomp/corpus.hpp"
#include "decomp/curriculum.hpp"
#include "decomp/difficulty.hpp"
#include "decomp/errors.hpp"
#include "decomp/remote_embedding.hpp"
#include "decomp/util.hpp"

namespace decomp {

namespace {

void log_line(const std::string& stage, const std::string& msg) {
    std::fprintf(stderr, "[%s] %s\n", stage.c_str(), msg.c_str());
}

bool lenient(const PipelineConfig& config) {
    return config.decomposition.verification_mode == DecompositionParams::Mode::lenient;
}

}  // namespace

std::shared_ptr<TeacherClient> make_teacher(const TeacherConfig& config) {
    std::shared_ptr<TeacherClient> client;
    if (config.mode == "scripted") {
        if (config.script.empty()) {
            throw ValidationError("teacher mode is 'scripted' but no script file is configured");
        }
        client = std::make_shared<ScriptedTeacher>(std::filesystem::path(config.script));
    } else if (config.mode == "http") {
        if (config.gateway.endpoint.empty()) {
            throw ValidationError("teacher mode is 'http' but no endpoint is configured");
        }
        client = std::make_shared<HttpTeacher>(config.gateway, PromptSet::builtin());
    } else {
        throw ValidationError("unknown teacher mode: " + config.mode);
    }
    if (config.gateway.cache_dir) {
        client = std::make_shared<CachingTeacher>(client, *config.gateway.cache_dir);
    }
    if (!config.record_to.empty()) {
        client = std::make_shared<RecordingTeacher>(client,
                                                    std::filesystem::path(config.record_to));
    }
    return client;
}

std::unique_ptr<EmbeddingProvider> make_embedding(const ClusteringConfig& config) {
    if (config.embedding == "deterministic-local") {
        return std::make_unique<LocalHashEmbedding>(config.dimension);
    }
    if (config.embedding == "remote") {
        if (config.endpoint.empty()) {
            throw ValidationError("clustering.embedding is 'remote' but no endpoint is configured");
        }
        RemoteEmbedding::Config rc;
        rc.endpoint = config.endpoint;
        rc.model = config.model;
        rc.api_key_env = config.api_key_env;
        rc.timeout_seconds = config.timeout_seconds;
        return std::make_unique<RemoteEmbedding>(rc);
    }
    throw ValidationError("unknown embedding provider: " + config.embedding);
}

std::string sanitize_for_filename(const std::string& id) {
    std::string out = id;
    for (char& c : out) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                  c == '.' || c == '_' || c == '-';
        if (!ok) c = '_';
    }
    return out;
}

std::filesystem::path tree_file_path(const std::filesystem::path& dir, size_t index,
                                     const std::string& id) {
    char prefix[32];
    std::snprintf(prefix, sizeof(prefix), "tree_%05zu_", index);
    return dir / (std::string(prefix) + sanitize_for_filename(id) + ".json");
}

std::vector<DecompositionTree> load_trees(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ValidationError("tree directory does not exist: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw ValidationError("no tree files (*.json) in " + dir.string());
    }
    std::vector<DecompositionTree> trees;
    trees.reserve(files.size());
    for (const auto& file : files) {
        trees.push_back(load_tree(file));
    }
    return trees;
}

std::filesystem::path decompose_input(const PipelineConfig& config) {
    return config.sampling.quotas.empty() ? std::filesystem::path(config.paths.corpus_in)
                                          : std::filesystem::path(config.paths.sampled);
}

void run_sample(const PipelineConfig& config) {
    if (config.sampling.quotas.empty()) {
        throw ValidationError("sample stage requires sampling.quotas in the config");
    }
    std::vector<ProblemRecord> corpus = load_corpus(config.paths.corpus_in);
    std::vector<StratumQuota> quotas = load_quotas(config.sampling.quotas);
    std::vector<ProblemRecord> sampled = stratified_sample(corpus, quotas, config.sampling.seed);
    std::filesystem::path out(config.paths.sampled);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    save_corpus(sampled, out);
    log_line("sample", "kept " + std::to_string(sampled.size()) + " of " +
                           std::to_string(corpus.size()) + " records -> " + out.string());
}

void run_decompose(const PipelineConfig& config) {
    config.decomposition.validate();
    std::vector<ProblemRecord> corpus = load_corpus(decompose_input(config));
    if (corpus.empty()) {
        throw ValidationError("decompose stage: input corpus is empty");
    }
    std::shared_ptr<TeacherClient> teacher = make_teacher(config.teacher);

    std::filesystem::path tree_dir(config.paths.tree_dir);
    std::filesystem::create_directories(tree_dir);

    std::vector<RunLogEntry> run_log;
    size_t aborted = 0;
    std::string first_error;
    for (size_t i = 0; i < corpus.size(); ++i) {
        const ProblemRecord& record = corpus[i];
        DecompositionTree tree = decompose_example(record, config.decomposition, *teacher,
                                                   &run_log);
        save_tree(tree, tree_file_path(tree_dir, i, record.id));
        size_t kept = flatten(tree, lenient(config)).size();
        if (tree.error) {
            ++aborted;
            if (first_error.empty()) first_error = *tree.error;
            log_line("decompose", record.id + " (" + std::to_string(i + 1) + "/" +
                                      std::to_string(corpus.size()) + ") ABORTED: " + *tree.error);
        } else {
            log_line("decompose", record.id + " (" + std::to_string(i + 1) + "/" +
                                      std::to_string(corpus.size()) + ") kept " +
                                      std::to_string(kept) + " records");
        }
    }

    std::filesystem::path log_path(config.paths.run_log);
    if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
    std::string log_text;
    for (const RunLogEntry& entry : run_log) {
        log_text += run_log_to_json(entry).dump();
        log_text += "\n";
    }
    write_text_file(log_path, log_text);
    log_line("decompose", std::to_string(run_log.size()) + " teacher calls logged -> " +
                              log_path.string());

    if (aborted > 0) {
        // Every tree and the log are already on disk; the failure is still
        // surfaced so an operator never mistakes a partial run for a clean one.
        throw TransportError("decompose stage: " + std::to_string(aborted) + " of " +
                                 std::to_string(corpus.size()) +
                                 " examples aborted; first failure: " + first_error,
                             0);
    }
}

void run_graph(const PipelineConfig& config) {
    std::vector<DecompositionTree> trees = load_trees(config.paths.tree_dir);
    std::unique_ptr<EmbeddingProvider> embedding = make_embedding(config.clustering);
    ConceptGraph graph = build_concept_graph(trees, *embedding, config.clustering.delta());

    std::filesystem::path json_path(config.paths.graph_json);
    if (json_path.has_parent_path())
        std::filesystem::create_directories(json_path.parent_path());
    save_graph(graph, json_path);
    std::filesystem::path dot_path(config.paths.graph_dot);
    if (dot_path.has_parent_path()) std::filesystem::create_directories(dot_path.parent_path());
    write_text_file(dot_path, graph_to_dot(graph));

    log_line("graph", std::to_string(graph.cluster_map.size()) + " tags -> " +
                          std::to_string(graph.nodes.size()) + " concepts, " +
                          std::to_string(graph.edges.size()) + " edges (delta " +
                          std::to_string(config.clustering.delta()) + ", " + embedding->kind() +
                          " embeddings)");
}

void run_score(const PipelineConfig& config) {
    config.difficulty.validate();
    std::vector<DecompositionTree> trees = load_trees(config.paths.tree_dir);
    ConceptGraph graph = load_graph(config.paths.graph_json);
    std::vector<DifficultyAnnotation> annotations =
        annotate_trees(trees, graph, config.difficulty, lenient(config));

    std::filesystem::path out(config.paths.annotations);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    save_annotations(annotations, out);

    if (annotations.empty()) {
        log_line("score", "no records to annotate");
        return;
    }
    auto [lo, hi] = std::minmax_element(annotations.begin(), annotations.end(),
                                        [](const DifficultyAnnotation& a,
                                           const DifficultyAnnotation& b) {
                                            return a.score < b.score;
                                        });
    log_line("score", std::to_string(annotations.size()) + " records scored, range " +
                          std::to_string(lo->score) + " to " + std::to_string(hi->score) +
                          " -> " + out.string());
}

void run_curriculum(const PipelineConfig& config) {
    config.difficulty.validate();
    std::vector<DifficultyAnnotation> annotations =
        load_annotations(config.paths.annotations, config.difficulty);
    std::vector<DecompositionTree> trees = load_trees(config.paths.tree_dir);
    std::vector<ProblemRecord> corpus;
    for (const DecompositionTree& tree : trees) {
        std::vector<ProblemRecord> part = flatten(tree, lenient(config));
        corpus.insert(corpus.end(), part.begin(), part.end());
    }

    CurriculumPlan plan = partition(annotations, config.curriculum.k_stages);
    std::vector<std::filesystem::path> written =
        emit_manifests(plan, corpus, config.paths.plan_dir, config.curriculum.total_epochs,
                       config.curriculum.seed);
    log_line("curriculum", std::to_string(plan.stages.size()) + " stages over " +
                               std::to_string(annotations.size()) + " records; wrote " +
                               std::to_string(written.size()) + " files to " +
                               config.paths.plan_dir);
}

void run_all(const PipelineConfig& config) {
    if (!config.sampling.quotas.empty()) {
        run_sample(config);
    } else {
        log_line("sample", "skipped: no quotas configured");
    }
    run_decompose(config);
    run_graph(config);
    run_score(config);
    run_curriculum(config);
}

}  // namespace decomp
