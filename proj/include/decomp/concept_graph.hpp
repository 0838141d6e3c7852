#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "decomp/decomposer.hpp"

namespace decomp {

// Produces unit-norm embedding vectors for concept tags.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(const std::string& text) const = 0;
    virtual int dimension() const = 0;
    virtual std::string kind() const = 0;
};

// Deterministic offline embedding: the tag is casefolded and split into
// words, each word hashes its character trigrams into a fixed-size count
// block that is L2-normalized on its own, and the per-word blocks are summed
// and normalized again. Two multi-word tags sharing a word are therefore
// always at cosine >= 0.5, which is what the default local threshold keys on.
class LocalHashEmbedding final : public EmbeddingProvider {
public:
    explicit LocalHashEmbedding(int dimension = 256);
    std::vector<double> embed(const std::string& text) const override;
    int dimension() const override { return dimension_; }
    std::string kind() const override { return "deterministic-local"; }

private:
    int dimension_;
};

// Dot product; callers pass unit vectors so this is the cosine similarity.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Cosine rounded to 12 decimal places. Clustering compares against the
// threshold with this value: tag pairs engineered to sit exactly on a
// boundary (two two-word tags sharing one word are at 0.5 by construction)
// must land on the same side of it on every platform, which raw last-ulp
// noise does not guarantee.
double tag_similarity(const std::vector<double>& a, const std::vector<double>& b);

struct TagClustering {
    std::map<std::string, std::string> cluster_map;  // raw tag -> representative
    std::map<std::string, std::vector<std::string>> members;
    bool operator==(const TagClustering&) const = default;
};

struct ConceptGraph {
    std::set<std::string> nodes;
    // edge -> number of tree edges that produced it; the count is kept for
    // audit only and never feeds depth computation.
    std::map<std::pair<std::string, std::string>, int> edges;
    std::map<std::string, int> depth;
    std::map<std::string, std::string> cluster_map;
    std::map<std::string, std::vector<std::string>> members;
    bool operator==(const ConceptGraph&) const = default;
};

// Counts how many tree nodes carry each tag, across all trees.
std::map<std::string, int> tag_occurrences(const std::vector<DecompositionTree>& trees);

// Collects every tag as a node and adds one edge per tagged parent/child
// pair (parallel occurrences dedup into the count). Equal parent and child
// tags never form an edge. cluster_map starts out as the identity.
ConceptGraph build_raw_graph(const std::vector<DecompositionTree>& trees);

// Greedy clustering: order tags by descending occurrence then lexicographic;
// each still-unassigned tag becomes a representative and absorbs every
// unassigned tag at similarity >= delta. Afterwards each non-representative
// is re-assigned to its highest-similarity representative (ties go to the
// lexicographically smaller one). delta must lie in (0, 1].
TagClustering cluster_tags(const std::map<std::string, int>& occurrences,
                           const EmbeddingProvider& provider, double delta);
// Convenience form: repeats in the list count as occurrences.
TagClustering cluster_tags(const std::vector<std::string>& tags,
                           const EmbeddingProvider& provider, double delta);

// Relabels nodes to representatives, rewires and dedups edges (summing their
// counts), and drops self-loops. Expects the raw graph.
ConceptGraph apply_clustering(const ConceptGraph& graph, const TagClustering& clustering);

// Longest-prerequisite-chain depth. Cycles are condensed into strongly
// connected components first; a component at zero in-degree sits at depth 0,
// every other at 1 + the max depth among its predecessor components.
std::map<std::string, int> compute_depths(const ConceptGraph& graph);

// Full pipeline: raw graph, clustering, rewiring, depths.
ConceptGraph build_concept_graph(const std::vector<DecompositionTree>& trees,
                                 const EmbeddingProvider& provider, double delta);

std::string graph_to_dot(const ConceptGraph& graph);
nlohmann::ordered_json graph_to_json(const ConceptGraph& graph);
ConceptGraph graph_from_json(const nlohmann::json& j);
void save_graph(const ConceptGraph& graph, const std::filesystem::path& path);
ConceptGraph load_graph(const std::filesystem::path& path);

}  // namespace decomp
