// Command-line front end for the decomposition curriculum pipeline.
//
// Subcommands map one-to-one onto pipeline stages (sample, decompose, graph,
// score, curriculum, all) plus two small utilities (check-answer, stats).
// Every stage reads and writes files named in the config, so stages can be
// re-run individually. Flags override config fields; a flag always wins.
//
// Exit codes: 0 success, 1 invalid input or config (or "different" from
// check-answer), 2 gateway/transport failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "decomp/answer_checker.hpp"
#include "decomp/config.hpp"
#include "decomp/difficulty.hpp"
#include "decomp/errors.hpp"
#include "decomp/pipeline.hpp"

namespace {

struct Overrides {
    std::optional<std::string> corpus_in, sampled, tree_dir, graph_json, graph_dot, annotations,
        plan_dir, run_log;
    std::optional<std::string> quotas;
    std::optional<uint64_t> sample_seed, shuffle_seed;
    std::optional<std::string> teacher_mode, script, record_to, endpoint, model, cache_dir;
    std::optional<int> max_in_flight;
    std::optional<int> max_depth, max_steps, max_retries, call_budget;
    std::optional<std::string> verification_mode;
    std::optional<std::string> embedding, embed_endpoint, embed_model;
    std::optional<double> delta;
    std::optional<int> dimension;
    std::optional<double> alpha1, alpha2;
    std::optional<int> k_stages;
    std::optional<double> total_epochs;
};

void add_stage_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--corpus", o.corpus_in, "input corpus JSONL");
    cmd->add_option("--sampled", o.sampled, "sampled corpus JSONL");
    cmd->add_option("--quotas", o.quotas, "stratum quota JSON file");
    cmd->add_option("--sample-seed", o.sample_seed, "sampling seed");
    cmd->add_option("--tree-dir", o.tree_dir, "decomposition tree directory");
    cmd->add_option("--run-log", o.run_log, "teacher call log JSONL");
    cmd->add_option("--graph-json", o.graph_json, "concept graph JSON path");
    cmd->add_option("--graph-dot", o.graph_dot, "concept graph DOT path");
    cmd->add_option("--annotations", o.annotations, "difficulty annotations JSONL");
    cmd->add_option("--plan-dir", o.plan_dir, "curriculum output directory");

    cmd->add_option("--teacher", o.teacher_mode, "teacher mode")
        ->check(CLI::IsMember({"scripted", "http"}));
    cmd->add_option("--script", o.script, "scripted teacher reply file");
    cmd->add_option("--record-to", o.record_to, "append live replies to this script file");
    cmd->add_option("--endpoint", o.endpoint, "chat completion endpoint URL");
    cmd->add_option("--model", o.model, "teacher model name");
    cmd->add_option("--cache-dir", o.cache_dir, "teacher reply cache directory");
    cmd->add_option("--max-in-flight", o.max_in_flight, "parallel request cap")
        ->check(CLI::PositiveNumber);

    cmd->add_option("--max-depth", o.max_depth, "recursion depth limit")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-steps", o.max_steps, "step cap per split")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-retries", o.max_retries, "verification retry budget")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--call-budget", o.call_budget, "teacher call budget per example")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--mode", o.verification_mode, "verification mode")
        ->check(CLI::IsMember({"strict", "lenient"}));

    cmd->add_option("--embedding", o.embedding, "embedding provider")
        ->check(CLI::IsMember({"deterministic-local", "remote"}));
    cmd->add_option("--embed-endpoint", o.embed_endpoint, "embedding endpoint URL");
    cmd->add_option("--embed-model", o.embed_model, "embedding model name");
    cmd->add_option("--delta", o.delta, "clustering similarity threshold in (0,1]");
    cmd->add_option("--dimension", o.dimension, "local embedding width")
        ->check(CLI::PositiveNumber);

    cmd->add_option("--alpha1", o.alpha1, "structural complexity weight");
    cmd->add_option("--alpha2", o.alpha2, "conceptual depth weight");
    cmd->add_option("--stages", o.k_stages, "curriculum stage count")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", o.total_epochs, "total training epochs split across stages");
    cmd->add_option("--shuffle-seed", o.shuffle_seed, "baseline shuffle seed");
}

void apply(const Overrides& o, decomp::PipelineConfig& cfg) {
    if (o.corpus_in) cfg.paths.corpus_in = *o.corpus_in;
    if (o.sampled) cfg.paths.sampled = *o.sampled;
    if (o.quotas) cfg.sampling.quotas = *o.quotas;
    if (o.sample_seed) cfg.sampling.seed = *o.sample_seed;
    if (o.tree_dir) cfg.paths.tree_dir = *o.tree_dir;
    if (o.run_log) cfg.paths.run_log = *o.run_log;
    if (o.graph_json) cfg.paths.graph_json = *o.graph_json;
    if (o.graph_dot) cfg.paths.graph_dot = *o.graph_dot;
    if (o.annotations) cfg.paths.annotations = *o.annotations;
    if (o.plan_dir) cfg.paths.plan_dir = *o.plan_dir;

    if (o.teacher_mode) cfg.teacher.mode = *o.teacher_mode;
    if (o.script) cfg.teacher.script = *o.script;
    if (o.record_to) cfg.teacher.record_to = *o.record_to;
    if (o.endpoint) cfg.teacher.gateway.endpoint = *o.endpoint;
    if (o.model) cfg.teacher.gateway.model = *o.model;
    if (o.cache_dir) cfg.teacher.gateway.cache_dir = *o.cache_dir;
    if (o.max_in_flight) cfg.teacher.gateway.max_in_flight = *o.max_in_flight;

    if (o.max_depth) cfg.decomposition.max_depth = *o.max_depth;
    if (o.max_steps) cfg.decomposition.max_steps = *o.max_steps;
    if (o.max_retries) cfg.decomposition.max_retries = *o.max_retries;
    if (o.call_budget) cfg.decomposition.call_budget = *o.call_budget;
    if (o.verification_mode) {
        cfg.decomposition.verification_mode =
            *o.verification_mode == "lenient" ? decomp::DecompositionParams::Mode::lenient
                                              : decomp::DecompositionParams::Mode::strict;
    }

    if (o.embedding) cfg.clustering.embedding = *o.embedding;
    if (o.embed_endpoint) cfg.clustering.endpoint = *o.embed_endpoint;
    if (o.embed_model) cfg.clustering.model = *o.embed_model;
    if (o.delta) cfg.clustering.delta_override = *o.delta;
    if (o.dimension) cfg.clustering.dimension = *o.dimension;

    if (o.alpha1) cfg.difficulty.alpha1 = *o.alpha1;
    if (o.alpha2) cfg.difficulty.alpha2 = *o.alpha2;
    if (o.k_stages) cfg.curriculum.k_stages = *o.k_stages;
    if (o.total_epochs) cfg.curriculum.total_epochs = *o.total_epochs;
    if (o.shuffle_seed) cfg.curriculum.seed = *o.shuffle_seed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decomposes reasoning problems into verified subproblems, builds the concept "
                 "graph, scores difficulty, and emits an easy-to-hard curriculum."};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file");

    Overrides o;
    CLI::App* cmd_sample = app.add_subcommand("sample", "draw a stratified subset of the corpus");
    CLI::App* cmd_decompose =
        app.add_subcommand("decompose", "recursively decompose each sampled problem");
    CLI::App* cmd_graph =
        app.add_subcommand("graph", "cluster tags and build the concept dependency graph");
    CLI::App* cmd_score = app.add_subcommand("score", "annotate every record with a difficulty");
    CLI::App* cmd_curriculum =
        app.add_subcommand("curriculum", "partition scored records into training stages");
    CLI::App* cmd_all = app.add_subcommand("all", "run every stage in order");
    for (CLI::App* cmd : {cmd_sample, cmd_decompose, cmd_graph, cmd_score, cmd_curriculum,
                          cmd_all}) {
        add_stage_options(cmd, o);
    }

    CLI::App* cmd_check = app.add_subcommand(
        "check-answer", "test two final answers for mathematical equivalence");
    std::string answer_a, answer_b;
    cmd_check->add_option("a", answer_a, "first answer")->required();
    cmd_check->add_option("b", answer_b, "second answer")->required();

    CLI::App* cmd_stats =
        app.add_subcommand("stats", "print the score histogram for an annotation file");
    add_stage_options(cmd_stats, o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_check->parsed()) {
            bool same = decomp::answers_equivalent(answer_a, answer_b);
            std::cout << (same ? "equivalent" : "different") << "\n";
            return same ? 0 : 1;
        }

        decomp::PipelineConfig cfg;
        if (!config_path.empty()) {
            cfg = decomp::load_config(config_path);
        }
        apply(o, cfg);

        if (cmd_stats->parsed()) {
            std::vector<decomp::DifficultyAnnotation> annotations =
                decomp::load_annotations(cfg.paths.annotations, cfg.difficulty);
            std::cout << decomp::score_histogram(annotations);
            return 0;
        }
        if (cmd_sample->parsed()) decomp::run_sample(cfg);
        if (cmd_decompose->parsed()) decomp::run_decompose(cfg);
        if (cmd_graph->parsed()) decomp::run_graph(cfg);
        if (cmd_score->parsed()) decomp::run_score(cfg);
        if (cmd_curriculum->parsed()) decomp::run_curriculum(cfg);
        if (cmd_all->parsed()) decomp::run_all(cfg);
        return 0;
    } catch (const decomp::AuthError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const decomp::TransportError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const decomp::BudgetExceededError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const decomp::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const decomp::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
