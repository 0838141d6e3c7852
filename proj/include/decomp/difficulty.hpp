#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "decomp/concept_graph.hpp"
#include "decomp/decomposer.hpp"

namespace decomp {

struct DifficultyParams {
    double alpha1 = 2.0;
    double alpha2 = 2.0;
    void validate() const;  // both weights must be positive
};

struct DifficultyAnnotation {
    std::string record_id;
    int sc = 0;      // structural complexity: direct children kept for training
    int cd = 0;      // conceptual depth: prerequisite chain length of the tag
    double score = 0.0;
    double alpha1 = 2.0;
    double alpha2 = 2.0;
    bool operator==(const DifficultyAnnotation&) const = default;
};

// Direct children that make it into the training set: verified ones, plus
// failed-after-retries ones when include_unverified is set. Skipped children
// never count.
int structural_complexity(const std::vector<TreeNode>& children,
                          bool include_unverified = false);

// Depth of the tag's cluster representative. A tag absent from the graph is
// a pipeline-order bug and raises an error naming it.
int conceptual_depth(const std::string& tag, const ConceptGraph& graph);

// The untagged original problem takes the maximum over its direct children's
// tag depths; with no tagged children it sits at 0.
int root_conceptual_depth(const DecompositionTree& tree, const ConceptGraph& graph);

double difficulty_score(int sc, int cd, const DifficultyParams& params);

// One annotation per record that flatten() would emit, in the same order.
std::vector<DifficultyAnnotation> annotate_tree(const DecompositionTree& tree,
                                                const ConceptGraph& graph,
                                                const DifficultyParams& params,
                                                bool include_unverified = false);
std::vector<DifficultyAnnotation> annotate_trees(const std::vector<DecompositionTree>& trees,
                                                 const ConceptGraph& graph,
                                                 const DifficultyParams& params,
                                                 bool include_unverified = false);

nlohmann::ordered_json annotation_to_json(const DifficultyAnnotation& a);
std::string annotations_to_jsonl(const std::vector<DifficultyAnnotation>& annotations);
void save_annotations(const std::vector<DifficultyAnnotation>& annotations,
                      const std::filesystem::path& path);
// Loads and re-stamps the weights; a row whose score does not equal
// alpha1*sc + alpha2*cd under the given weights is rejected, so stale files
// from a run with different weights cannot silently feed a curriculum.
std::vector<DifficultyAnnotation> load_annotations(const std::filesystem::path& path,
                                                   const DifficultyParams& params);

// Text histogram of the score distribution plus its min/max range.
std::string score_histogram(const std::vector<DifficultyAnnotation>& annotations);

}  // namespace decomp
