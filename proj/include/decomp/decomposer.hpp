#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "decomp/corpus.hpp"
#include "decomp/teacher.hpp"

namespace decomp {

struct DecompositionParams {
    int max_depth = 2;    // tree height bound; children are expanded while their depth < max_depth
    int max_steps = 5;    // split bound per node
    int max_retries = 3;  // verification attempts per step
    enum class Mode { strict, lenient } verification_mode = Mode::strict;
    int call_budget = 500;  // teacher calls allowed per original example

    void validate() const;
};

enum class VerifyStatus { verified, failed_after_retries, skipped };

const char* verify_status_name(VerifyStatus s);
VerifyStatus verify_status_from_name(const std::string& name);

struct VerificationOutcome {
    VerifyStatus status = VerifyStatus::skipped;
    int attempts = 0;
    std::string blind_answer;    // extracted from the context-free solve
    std::string context_answer;  // extracted from the context-conditioned solve

    bool operator==(const VerificationOutcome&) const = default;
};

struct TreeNode {
    ProblemRecord record;
    std::string step_text;
    int step_index = 0;  // 1-based position within the parent's split
    VerificationOutcome verification;
    std::optional<std::string> error;  // annotation when processing this node broke
    std::vector<TreeNode> children;

    bool operator==(const TreeNode&) const = default;
};

struct DecompositionTree {
    ProblemRecord root;
    std::optional<std::string> error;  // first abort-class failure, with node path
    std::vector<TreeNode> children;

    bool operator==(const DecompositionTree&) const = default;
};

// One line per teacher call (plus warnings like list truncation), in
// deterministic step order.
struct RunLogEntry {
    std::string request_id;
    std::string template_name;
    int attempt = 0;
    std::string outcome;  // "ok" or a failure note
    bool from_cache = false;
};

nlohmann::ordered_json run_log_to_json(const RunLogEntry& entry);

// Asks the teacher to rewrite a solution as a numbered list of at most k
// steps; retries up to `retries` times on unparseable replies. Lists longer
// than k are truncated. Throws Error when every attempt fails to parse.
std::vector<std::string> split_steps(const std::string& question, const std::string& cot,
                                     int k, int retries, TeacherClient& teacher);

// Parses a numbered-list reply ("1. ...\n2. ...") into items; continuation
// lines attach to the current item; text before the first item is ignored.
// Returns an empty vector when no items are found.
std::vector<std::string> parse_numbered_list(const std::string& reply);

// Runs the full recursive decomposition for one original (depth-0) record:
// split into steps, tag each step, generate a standalone subproblem, solve
// it with and without context, keep it when the two answers agree, and
// recurse into verified children while their depth < max_depth. Gateway
// failures abort the example and are annotated on the tree rather than
// thrown.
DecompositionTree decompose_example(const ProblemRecord& record,
                                    const DecompositionParams& params,
                                    TeacherClient& teacher,
                                    std::vector<RunLogEntry>* run_log = nullptr);

// Depth-first preorder: root first, then each child subtree in step order.
// Verified nodes are always included, failed_after_retries only when
// include_unverified, skipped never.
std::vector<ProblemRecord> flatten(const DecompositionTree& tree, bool include_unverified);

nlohmann::ordered_json tree_to_json(const DecompositionTree& tree);
DecompositionTree tree_from_json(const nlohmann::json& j);
void save_tree(const DecompositionTree& tree, const std::filesystem::path& path);
DecompositionTree load_tree(const std::filesystem::path& path);

}  // namespace decomp
