#include "decomp/difficulty.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "decomp/errors.hpp"
#include "decomp/util.hpp"

namespace decomp {

void DifficultyParams::validate() const {
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) {
        throw ValidationError("difficulty weights must be positive");
    }
}

namespace {

bool counts_for_training(const TreeNode& node, bool include_unverified) {
    if (node.verification.status == VerifyStatus::verified) return true;
    return include_unverified && node.verification.status == VerifyStatus::failed_after_retries;
}

}  // namespace

int structural_complexity(const std::vector<TreeNode>& children, bool include_unverified) {
    int count = 0;
    for (const TreeNode& child : children) {
        if (counts_for_training(child, include_unverified)) ++count;
    }
    return count;
}

int conceptual_depth(const std::string& tag, const ConceptGraph& graph) {
    auto rep = graph.cluster_map.find(tag);
    if (rep == graph.cluster_map.end()) {
        throw ValidationError("tag not in concept graph: " + tag);
    }
    auto depth = graph.depth.find(rep->second);
    if (depth == graph.depth.end()) {
        throw ValidationError("tag without computed depth: " + rep->second);
    }
    return depth->second;
}

int root_conceptual_depth(const DecompositionTree& tree, const ConceptGraph& graph) {
    int best = 0;
    for (const TreeNode& child : tree.children) {
        if (child.record.tag) {
            best = std::max(best, conceptual_depth(*child.record.tag, graph));
        }
    }
    return best;
}

double difficulty_score(int sc, int cd, const DifficultyParams& params) {
    params.validate();
    if (sc < 0 || cd < 0) {
        throw ValidationError("difficulty terms must be non-negative");
    }
    return params.alpha1 * sc + params.alpha2 * cd;
}

namespace {

void annotate_node(const TreeNode& node, const ConceptGraph& graph,
                   const DifficultyParams& params, bool include_unverified,
                   std::vector<DifficultyAnnotation>& out) {
    if (!counts_for_training(node, include_unverified)) return;
    DifficultyAnnotation a;
    a.record_id = node.record.id;
    a.sc = structural_complexity(node.children, include_unverified);
    a.cd = node.record.tag ? conceptual_depth(*node.record.tag, graph) : 0;
    a.alpha1 = params.alpha1;
    a.alpha2 = params.alpha2;
    a.score = difficulty_score(a.sc, a.cd, params);
    out.push_back(a);
    for (const TreeNode& child : node.children) {
        annotate_node(child, graph, params, include_unverified, out);
    }
}

}  // namespace

std::vector<DifficultyAnnotation> annotate_tree(const DecompositionTree& tree,
                                                const ConceptGraph& graph,
                                                const DifficultyParams& params,
                                                bool include_unverified) {
    params.validate();
    std::vector<DifficultyAnnotation> out;
    DifficultyAnnotation root;
    root.record_id = tree.root.id;
    root.sc = structural_complexity(tree.children, include_unverified);
    root.cd = root_conceptual_depth(tree, graph);
    root.alpha1 = params.alpha1;
    root.alpha2 = params.alpha2;
    root.score = difficulty_score(root.sc, root.cd, params);
    out.push_back(root);
    for (const TreeNode& child : tree.children) {
        annotate_node(child, graph, params, include_unverified, out);
    }
    return out;
}

std::vector<DifficultyAnnotation> annotate_trees(const std::vector<DecompositionTree>& trees,
                                                 const ConceptGraph& graph,
                                                 const DifficultyParams& params,
                                                 bool include_unverified) {
    std::vector<DifficultyAnnotation> out;
    for (const DecompositionTree& tree : trees) {
        auto part = annotate_tree(tree, graph, params, include_unverified);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

nlohmann::ordered_json annotation_to_json(const DifficultyAnnotation& a) {
    nlohmann::ordered_json j;
    j["record_id"] = a.record_id;
    j["sc"] = a.sc;
    j["cd"] = a.cd;
    j["score"] = a.score;
    return j;
}

std::string annotations_to_jsonl(const std::vector<DifficultyAnnotation>& annotations) {
    std::string out;
    for (const DifficultyAnnotation& a : annotations) {
        out += annotation_to_json(a).dump();
        out += "\n";
    }
    return out;
}

void save_annotations(const std::vector<DifficultyAnnotation>& annotations,
                      const std::filesystem::path& path) {
    write_text_file(path, annotations_to_jsonl(annotations));
}

std::vector<DifficultyAnnotation> load_annotations(const std::filesystem::path& path,
                                                   const DifficultyParams& params) {
    params.validate();
    std::vector<DifficultyAnnotation> out;
    std::vector<std::string> lines = split_lines(read_text_file(path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(where + ": " + e.what());
        }
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (key != "record_id" && key != "sc" && key != "cd" && key != "score") {
                throw ValidationError(where + ": unknown field " + key);
            }
        }
        for (const char* key : {"record_id", "sc", "cd", "score"}) {
            if (!j.contains(key)) throw ValidationError(where + ": missing field " + key);
        }
        DifficultyAnnotation a;
        a.record_id = j.at("record_id").get<std::string>();
        a.sc = j.at("sc").get<int>();
        a.cd = j.at("cd").get<int>();
        a.score = j.at("score").get<double>();
        a.alpha1 = params.alpha1;
        a.alpha2 = params.alpha2;
        if (a.sc < 0 || a.cd < 0) {
            throw ValidationError(where + ": negative difficulty term");
        }
        if (a.score != params.alpha1 * a.sc + params.alpha2 * a.cd) {
            throw ValidationError(where + ": score " + std::to_string(a.score) +
                                  " does not match the configured weights (file written "
                                  "with different alphas?)");
        }
        out.push_back(a);
    }
    return out;
}

std::string score_histogram(const std::vector<DifficultyAnnotation>& annotations) {
    if (annotations.empty()) return "no annotations\n";
    std::map<double, int> counts;
    for (const DifficultyAnnotation& a : annotations) ++counts[a.score];
    size_t widest = 0;
    for (const auto& [score, count] : counts) {
        (void)count;
        std::ostringstream label;
        label << score;
        widest = std::max(widest, label.str().size());
    }
    int max_count = 0;
    for (const auto& [score, count] : counts) {
        (void)score;
        max_count = std::max(max_count, count);
    }
    std::ostringstream out;
    for (const auto& [score, count] : counts) {
        std::ostringstream label;
        label << score;
        // one '#' per record until bars would exceed 50, then scale down
        int bar = max_count <= 50 ? count : std::max(1, count * 50 / max_count);
        out << std::setw(static_cast<int>(widest)) << label.str() << " | "
            << std::string(static_cast<size_t>(bar), '#') << " " << count << "\n";
    }
    out << "range: " << counts.begin()->first << " to " << counts.rbegin()->first << " over "
        << annotations.size() << " records\n";
    return out.str();
}

}  // namespace decomp
