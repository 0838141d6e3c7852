#include "decomp/decomposer.hpp"

#include <atomic>
#include <cctype>
#include <future>
#include <mutex>

#include <json.hpp>

#include "decomp/answer_checker.hpp"
#include "decomp/errors.hpp"
#include "decomp/util.hpp"

namespace decomp {

namespace {

constexpr double kRetryTemperature = 0.7;

const char* kRegenerateHint =
    "Your previous subproblem could not be verified in isolation. "
    "Write a different, fully self-contained subproblem. ";

// Shared state for one original example's decomposition.
struct ExampleContext {
    TeacherClient& teacher;
    const DecompositionParams& params;
    std::atomic<int> calls_left;
    std::atomic<bool> aborted{false};
    std::mutex abort_mutex;
    std::string abort_message;

    ExampleContext(TeacherClient& t, const DecompositionParams& p)
        : teacher(t), params(p), calls_left(p.call_budget) {}

    void record_abort(const std::string& message) {
        bool expected = false;
        if (aborted.compare_exchange_strong(expected, true)) {
            std::lock_guard<std::mutex> lock(abort_mutex);
            abort_message = message;
        }
    }

    // One teacher call: budget check, completion, local log append.
    TeacherReply call(const TeacherRequest& req, std::vector<RunLogEntry>& log,
                      int attempt) {
        if (aborted.load()) {
            throw Error("example aborted");
        }
        if (calls_left.fetch_sub(1) <= 0) {
            throw BudgetExceededError("teacher-call budget exhausted for this example");
        }
        RunLogEntry entry;
        entry.request_id = req.request_id;
        entry.template_name = template_name(req.template_id);
        entry.attempt = attempt;
        try {
            TeacherReply reply = teacher.complete(req);
            entry.outcome = "ok";
            entry.from_cache = reply.from_cache;
            log.push_back(std::move(entry));
            return reply;
        } catch (const std::exception& e) {
            entry.outcome = std::string("error: ") + e.what();
            log.push_back(std::move(entry));
            throw;
        }
    }
};

bool is_item_start(const std::string& line, std::string* item_text) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t digits_begin = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits_begin) {
        return false;
    }
    if (i >= line.size() || (line[i] != '.' && line[i] != ')')) {
        return false;
    }
    *item_text = trim(line.substr(i + 1));
    return true;
}

std::vector<std::string> split_with_context(const std::string& question,
                                            const std::string& cot, int k, int retries,
                                            ExampleContext& ctx,
                                            std::vector<RunLogEntry>& log,
                                            const std::string& request_prefix) {
    std::string last_failure = "no attempts made";
    for (int attempt = 1; attempt <= retries; ++attempt) {
        TeacherRequest req;
        req.template_id = Template::split_steps;
        req.slots = {{"question", question}, {"cot", cot}};
        req.max_steps_k = k;
        req.temperature = attempt == 1 ? 0.0 : kRetryTemperature;
        req.request_id = request_prefix + "/split/a" + std::to_string(attempt);
        TeacherReply reply = ctx.call(req, log, attempt);
        std::vector<std::string> items = parse_numbered_list(reply.text);
        if (items.empty()) {
            last_failure = "reply was not a numbered list";
            continue;
        }
        if (static_cast<int>(items.size()) > k) {
            RunLogEntry warning;
            warning.request_id = req.request_id;
            warning.template_name = template_name(Template::split_steps);
            warning.attempt = attempt;
            warning.outcome = "warning: truncated " + std::to_string(items.size()) +
                              " steps to " + std::to_string(k);
            log.push_back(std::move(warning));
            items.resize(static_cast<size_t>(k));
        }
        return items;
    }
    throw ValidationError("split_steps: " + last_failure + " after " +
                          std::to_string(retries) + " attempts");
}

// The per-step pipeline: tag, then up to R rounds of subquestion generation
// and double-solve verification.
TreeNode process_step(const ProblemRecord& parent, const std::string& step_text,
                      int step_index, ExampleContext& ctx,
                      std::vector<RunLogEntry>& log) {
    TreeNode node;
    node.step_text = step_text;
    node.step_index = step_index;
    node.record.id = parent.id + "." + std::to_string(step_index);
    node.record.parent_id = parent.id;
    node.record.depth = parent.depth + 1;

    const std::string prefix = node.record.id;
    try {
        TeacherRequest tag_req;
        tag_req.template_id = Template::tag_step;
        tag_req.slots = {{"step", step_text}};
        tag_req.request_id = prefix + "/tag";
        TeacherReply tag_reply = ctx.call(tag_req, log, 1);
        std::string tag;
        for (const std::string& line : split_lines(tag_reply.text)) {
            tag = collapse_whitespace(line);
            if (!tag.empty()) {
                break;
            }
        }
        if (tag.empty()) {
            node.error = "tag_step returned an empty concept tag";
            return node;
        }
        node.record.tag = tag;

        for (int attempt = 1; attempt <= ctx.params.max_retries; ++attempt) {
            node.verification.attempts = attempt;

            TeacherRequest make_req;
            make_req.template_id = Template::make_question;
            make_req.slots = {{"question", parent.question},
                              {"step", step_text},
                              {"tag", tag},
                              {"retry_hint", attempt == 1 ? "" : kRegenerateHint},
                              {"nonce", std::to_string(attempt)}};
            make_req.temperature = attempt == 1 ? 0.0 : kRetryTemperature;
            make_req.request_id = prefix + "/a" + std::to_string(attempt) + "/make";
            std::string subquestion = trim(ctx.call(make_req, log, attempt).text);
            if (subquestion.empty()) {
                continue;
            }
            node.record.question = subquestion;

            try {
                TeacherRequest ctx_req;
                ctx_req.template_id = Template::solve_with_context;
                ctx_req.slots = {{"question", parent.question},
                                 {"step", step_text},
                                 {"tag", tag},
                                 {"subquestion", subquestion}};
                ctx_req.request_id = prefix + "/a" + std::to_string(attempt) + "/solve_ctx";
                std::string context_solution = ctx.call(ctx_req, log, attempt).text;
                node.record.chain_of_thought = context_solution;
                node.verification.context_answer = extract_final_answer(context_solution);
                node.record.answer = node.verification.context_answer;

                TeacherRequest blind_req;
                blind_req.template_id = Template::solve_blind;
                blind_req.slots = {{"subquestion", subquestion}};
                blind_req.request_id =
                    prefix + "/a" + std::to_string(attempt) + "/solve_blind";
                node.verification.blind_answer =
                    extract_final_answer(ctx.call(blind_req, log, attempt).text);
            } catch (const ValidationError&) {
                continue;  // unusable solution text; try a fresh subquestion
            }

            if (answers_equivalent(node.verification.context_answer,
                                   node.verification.blind_answer)) {
                node.verification.status = VerifyStatus::verified;
                return node;
            }
        }
        node.verification.status = VerifyStatus::failed_after_retries;
        node.verification.attempts = ctx.params.max_retries;
        return node;
    } catch (const ValidationError& e) {
        node.verification.status = VerifyStatus::skipped;
        node.error = e.what();
        return node;
    } catch (const Error& e) {
        // Transport, auth, budget, or scripted-miss: stop the whole example.
        node.verification.status = VerifyStatus::skipped;
        node.error = e.what();
        ctx.record_abort("step " + node.record.id + ": " + e.what());
        return node;
    }
}

// Splits a node's solution and builds its children; recurses into verified
// children whose depth still allows expansion.
void expand_node(const ProblemRecord& record, std::vector<TreeNode>& children,
                 std::optional<std::string>& error, ExampleContext& ctx,
                 std::vector<RunLogEntry>& log) {
    if (ctx.aborted.load()) {
        return;
    }
    std::vector<std::string> steps;
    try {
        steps = split_with_context(record.question, record.chain_of_thought,
                                   ctx.params.max_steps, ctx.params.max_retries, ctx, log,
                                   record.id);
    } catch (const ValidationError& e) {
        error = e.what();  // unparseable split: keep this node as a leaf
        return;
    } catch (const Error& e) {
        error = e.what();
        ctx.record_abort("node " + record.id + ": " + e.what());
        return;
    }

    // Each step's tag/generate/verify pipeline is independent; run them
    // concurrently and merge in step order so output is schedule-invariant.
    std::vector<std::vector<RunLogEntry>> step_logs(steps.size());
    if (steps.size() == 1) {
        children.push_back(process_step(record, steps[0], 1, ctx, step_logs[0]));
    } else {
        std::vector<std::future<TreeNode>> futures;
        futures.reserve(steps.size());
        for (size_t i = 0; i < steps.size(); ++i) {
            futures.push_back(std::async(std::launch::async, [&, i] {
                return process_step(record, steps[i], static_cast<int>(i) + 1, ctx,
                                    step_logs[i]);
            }));
        }
        for (auto& f : futures) {
            children.push_back(f.get());
        }
    }
    for (std::vector<RunLogEntry>& step_log : step_logs) {
        for (RunLogEntry& entry : step_log) {
            log.push_back(std::move(entry));
        }
    }

    for (TreeNode& child : children) {
        if (child.verification.status != VerifyStatus::verified) {
            continue;  // a child whose answers disagree has untrusted reasoning
        }
        if (child.record.depth < ctx.params.max_depth && !ctx.aborted.load()) {
            expand_node(child.record, child.children, child.error, ctx, log);
        }
    }
}

void require_fields(const nlohmann::json& j, std::initializer_list<const char*> fields,
                    const std::string& where) {
    for (const char* f : fields) {
        if (!j.contains(f)) {
            throw ValidationError(where + ": missing field " + f);
        }
    }
}

// Tree files persist nodes that never finished (skipped nodes may lack a
// question or tag), so their records bypass the corpus-level invariants and
// only require the structural fields.
ProblemRecord tree_record_from_json(const nlohmann::json& j, const std::string& where) {
    require_fields(j, {"id", "question", "chain_of_thought", "answer", "depth"}, where);
    ProblemRecord r;
    r.id = j.at("id").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.chain_of_thought = j.at("chain_of_thought").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    if (j.contains("tag")) {
        r.tag = j.at("tag").get<std::string>();
    }
    r.depth = j.at("depth").get<int>();
    if (j.contains("parent_id")) {
        r.parent_id = j.at("parent_id").get<std::string>();
    }
    if (j.contains("stratum")) {
        Stratum s;
        const nlohmann::json& sj = j.at("stratum");
        if (sj.contains("domain")) s.domain = sj.at("domain").get<std::string>();
        if (sj.contains("level")) s.level = sj.at("level").get<std::string>();
        r.stratum = s;
    }
    return r;
}

nlohmann::ordered_json node_to_json(const TreeNode& node) {
    nlohmann::ordered_json j;
    j["record"] = record_to_json(node.record);
    j["step_text"] = node.step_text;
    j["step_index"] = node.step_index;
    nlohmann::ordered_json v;
    v["status"] = verify_status_name(node.verification.status);
    v["attempts"] = node.verification.attempts;
    v["blind_answer"] = node.verification.blind_answer;
    v["context_answer"] = node.verification.context_answer;
    j["verification"] = v;
    if (node.error) {
        j["error"] = *node.error;
    }
    nlohmann::ordered_json children = nlohmann::ordered_json::array();
    for (const TreeNode& child : node.children) {
        children.push_back(node_to_json(child));
    }
    j["children"] = children;
    return j;
}

TreeNode node_from_json(const nlohmann::json& j, const std::string& where) {
    require_fields(j, {"record", "step_text", "step_index", "verification", "children"},
                   where);
    TreeNode node;
    node.record = tree_record_from_json(j.at("record"), where + ".record");
    node.step_text = j.at("step_text").get<std::string>();
    node.step_index = j.at("step_index").get<int>();
    const nlohmann::json& v = j.at("verification");
    require_fields(v, {"status", "attempts", "blind_answer", "context_answer"},
                   where + ".verification");
    node.verification.status = verify_status_from_name(v.at("status").get<std::string>());
    node.verification.attempts = v.at("attempts").get<int>();
    node.verification.blind_answer = v.at("blind_answer").get<std::string>();
    node.verification.context_answer = v.at("context_answer").get<std::string>();
    if (j.contains("error")) {
        node.error = j.at("error").get<std::string>();
    }
    size_t index = 0;
    for (const nlohmann::json& child : j.at("children")) {
        node.children.push_back(
            node_from_json(child, where + ".children[" + std::to_string(index) + "]"));
        ++index;
    }
    return node;
}

}  // namespace

void DecompositionParams::validate() const {
    if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
    if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
    if (max_retries < 1) throw ValidationError("max_retries must be >= 1");
    if (call_budget < 1) throw ValidationError("call_budget must be >= 1");
}

const char* verify_status_name(VerifyStatus s) {
    switch (s) {
        case VerifyStatus::verified: return "verified";
        case VerifyStatus::failed_after_retries: return "failed_after_retries";
        case VerifyStatus::skipped: return "skipped";
    }
    return "skipped";
}

VerifyStatus verify_status_from_name(const std::string& name) {
    if (name == "verified") return VerifyStatus::verified;
    if (name == "failed_after_retries") return VerifyStatus::failed_after_retries;
    if (name == "skipped") return VerifyStatus::skipped;
    throw ValidationError("unknown verification status: " + name);
}

nlohmann::ordered_json run_log_to_json(const RunLogEntry& entry) {
    nlohmann::ordered_json j;
    j["request_id"] = entry.request_id;
    j["template"] = entry.template_name;
    j["attempt"] = entry.attempt;
    j["outcome"] = entry.outcome;
    j["from_cache"] = entry.from_cache;
    return j;
}

std::vector<std::string> parse_numbered_list(const std::string& reply) {
    std::vector<std::string> items;
    bool in_item = false;
    for (const std::string& line : split_lines(reply)) {
        std::string item_text;
        if (is_item_start(line, &item_text)) {
            items.push_back(item_text);
            in_item = true;
            continue;
        }
        std::string continuation = trim(line);
        if (continuation.empty()) {
            in_item = false;  // a blank line ends the current item
            continue;
        }
        if (in_item) {
            std::string& current = items.back();
            if (!current.empty()) {
                current += " ";
            }
            current += continuation;
        }
        // text before the first item (preamble) is dropped
    }
    std::vector<std::string> cleaned;
    for (std::string& item : items) {
        std::string trimmed = trim(item);
        if (!trimmed.empty()) {
            cleaned.push_back(std::move(trimmed));
        }
    }
    return cleaned;
}

std::vector<std::string> split_steps(const std::string& question, const std::string& cot,
                                     int k, int retries, TeacherClient& teacher) {
    if (trim(cot).empty()) {
        throw ValidationError("split_steps requires a non-empty solution text");
    }
    if (k < 1 || retries < 1) {
        throw ValidationError("split_steps requires k >= 1 and retries >= 1");
    }
    DecompositionParams params;
    params.max_steps = k;
    params.max_retries = retries;
    ExampleContext ctx(teacher, params);
    std::vector<RunLogEntry> log;
    return split_with_context(question, cot, k, retries, ctx, log, "adhoc");
}

DecompositionTree decompose_example(const ProblemRecord& record,
                                    const DecompositionParams& params,
                                    TeacherClient& teacher,
                                    std::vector<RunLogEntry>* run_log) {
    params.validate();
    if (record.depth != 0) {
        throw ValidationError("decompose_example requires a depth-0 record, got depth " +
                              std::to_string(record.depth) + " for " + record.id);
    }
    if (trim(record.chain_of_thought).empty()) {
        throw ValidationError("record " + record.id + " has an empty chain_of_thought");
    }

    ExampleContext ctx(teacher, params);
    std::vector<RunLogEntry> log;
    DecompositionTree tree;
    tree.root = record;
    expand_node(tree.root, tree.children, tree.error, ctx, log);
    if (ctx.aborted.load()) {
        std::lock_guard<std::mutex> lock(ctx.abort_mutex);
        if (!tree.error) {
            tree.error = ctx.abort_message;
        }
    }
    if (run_log) {
        for (RunLogEntry& entry : log) {
            run_log->push_back(std::move(entry));
        }
    }
    return tree;
}

namespace {

void flatten_node(const TreeNode& node, bool include_unverified,
                  std::vector<ProblemRecord>& out) {
    bool include = node.verification.status == VerifyStatus::verified ||
                   (include_unverified &&
                    node.verification.status == VerifyStatus::failed_after_retries);
    if (include) {
        out.push_back(node.record);
    }
    for (const TreeNode& child : node.children) {
        flatten_node(child, include_unverified, out);
    }
}

}  // namespace

std::vector<ProblemRecord> flatten(const DecompositionTree& tree,
                                   bool include_unverified) {
    std::vector<ProblemRecord> out;
    out.push_back(tree.root);
    for (const TreeNode& child : tree.children) {
        flatten_node(child, include_unverified, out);
    }
    return out;
}

nlohmann::ordered_json tree_to_json(const DecompositionTree& tree) {
    nlohmann::ordered_json j;
    j["root"] = record_to_json(tree.root);
    if (tree.error) {
        j["error"] = *tree.error;
    }
    nlohmann::ordered_json children = nlohmann::ordered_json::array();
    for (const TreeNode& child : tree.children) {
        children.push_back(node_to_json(child));
    }
    j["children"] = children;
    return j;
}

DecompositionTree tree_from_json(const nlohmann::json& j) {
    require_fields(j, {"root", "children"}, "tree");
    DecompositionTree tree;
    tree.root = tree_record_from_json(j.at("root"), "tree.root");
    if (j.contains("error")) {
        tree.error = j.at("error").get<std::string>();
    }
    size_t index = 0;
    for (const nlohmann::json& child : j.at("children")) {
        tree.children.push_back(
            node_from_json(child, "tree.children[" + std::to_string(index) + "]"));
        ++index;
    }
    return tree;
}

void save_tree(const DecompositionTree& tree, const std::filesystem::path& path) {
    write_text_file(path, tree_to_json(tree).dump(2) + "\n");
}

DecompositionTree load_tree(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("tree file " + path.string() + ": " + e.what());
    }
    return tree_from_json(j);
}

}  // namespace decomp
