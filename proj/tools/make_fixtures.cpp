// Regenerates the bundled fixture corpora and teacher reply scripts.
//
// Every script entry is produced by running the real decomposer against a
// small in-process teacher that answers from the design tables below, with a
// RecordingTeacher capturing the traffic. Reply keys therefore always match
// what the decomposer actually sends; the tables cannot drift out of sync
// with the request format. The generator also asserts the properties the
// fixtures are designed to have (verification outcomes, tag cluster shape,
// concept depths, difficulty scores) and fails loudly when an edit breaks
// one.
//
// Usage: make_fixtures [out_dir]   (default: fixtures)

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "decomp/concept_graph.hpp"
#include "decomp/corpus.hpp"
#include "decomp/decomposer.hpp"
#include "decomp/difficulty.hpp"
#include "decomp/errors.hpp"
#include "decomp/teacher.hpp"
#include "decomp/util.hpp"

namespace {

using decomp::ProblemRecord;
using decomp::Template;

// One planned tree node: the step text its parent's split emits, the tag and
// subquestion the teacher will produce for it, and the boxed answers of the
// two solver calls. Verified nodes need equivalent answer pairs.
struct NodePlan {
    std::string step;
    std::string tag;
    std::string subq;
    std::string ctx_answer;
    std::string blind_answer;
    // 1 = first subquestion verifies. 2 = the first one is rejected (its
    // draft text gets mismatched answers) and the regenerated one verifies.
    int verify_on_attempt = 1;
    // The subquestion keeps failing verification through the whole retry
    // budget; the node ends failed_after_retries.
    bool never_verify = false;
    std::vector<NodePlan> children;

    std::string draft_subq() const { return subq + " (give the intermediate value)"; }
};

struct RecordPlan {
    ProblemRecord record;
    std::vector<NodePlan> children;
};

NodePlan leaf(std::string step, std::string tag, std::string subq, std::string ctx_answer,
              std::string blind_answer) {
    NodePlan n;
    n.step = std::move(step);
    n.tag = std::move(tag);
    n.subq = std::move(subq);
    n.ctx_answer = std::move(ctx_answer);
    n.blind_answer = std::move(blind_answer);
    return n;
}

// Answers teacher requests from lookup tables assembled out of NodePlans.
// Any request outside the plan throws, which aborts fixture generation.
class DesignTeacher : public decomp::TeacherClient {
public:
    decomp::TeacherReply complete(const decomp::TeacherRequest& req) override {
        std::map<std::string, std::string> slots = decomp::effective_slots(req);
        std::string reply;
        switch (req.template_id) {
            case Template::split_steps:
                reply = lookup(splits_, slots.at("question"), "split of");
                break;
            case Template::tag_step:
                reply = lookup(tags_, slots.at("step"), "tag of");
                break;
            case Template::make_question:
                reply = lookup(makes_,
                               slots.at("question") + "\x01" + slots.at("step") + "\x01" +
                                   slots.at("nonce"),
                               "subquestion for");
                break;
            case Template::solve_with_context:
                reply = lookup(ctx_solutions_, slots.at("subquestion"), "context solution of");
                break;
            case Template::solve_blind:
                reply = lookup(blind_solutions_, slots.at("subquestion"), "blind solution of");
                break;
        }
        decomp::TeacherReply out;
        out.text = reply;
        out.model_name = model_name();
        return out;
    }

    std::string model_name() const override { return "fixture-design"; }

    void add_record(const RecordPlan& plan) {
        add_split(plan.record.question, plan.children);
        for (const NodePlan& child : plan.children) {
            add_node(plan.record.question, child);
        }
    }

private:
    static std::string lookup(const std::map<std::string, std::string>& table,
                              const std::string& key, const char* what) {
        auto it = table.find(key);
        if (it == table.end()) {
            throw decomp::Error(std::string("fixture plan has no ") + what + " \"" + key + "\"");
        }
        return it->second;
    }

    static void insert(std::map<std::string, std::string>& table, const std::string& key,
                       const std::string& value, const char* what) {
        auto [it, fresh] = table.emplace(key, value);
        if (!fresh && it->second != value) {
            throw decomp::Error(std::string("fixture plan conflict: two ") + what +
                                " entries for \"" + key + "\"");
        }
    }

    void add_split(const std::string& question, const std::vector<NodePlan>& children) {
        std::string reply;
        for (size_t i = 0; i < children.size(); ++i) {
            reply += std::to_string(i + 1) + ". " + children[i].step + "\n";
        }
        insert(splits_, question, reply, "split");
    }

    void add_node(const std::string& parent_question, const NodePlan& node) {
        insert(tags_, node.step, node.tag, "tag");
        std::string make_prefix = parent_question + "\x01" + node.step + "\x01";
        if (node.never_verify) {
            // Same subquestion on every attempt; the blind answer never
            // matches, so the retry budget runs out.
            for (int nonce = 1; nonce <= 3; ++nonce) {
                insert(makes_, make_prefix + std::to_string(nonce), node.subq, "subquestion");
            }
            insert(ctx_solutions_, node.subq, solution_text(node.ctx_answer), "context solution");
            insert(blind_solutions_, node.subq, blind_text(node.blind_answer),
                   "blind solution");
            return;
        }
        if (node.verify_on_attempt == 2) {
            std::string draft = node.draft_subq();
            insert(makes_, make_prefix + "1", draft, "subquestion");
            insert(makes_, make_prefix + "2", node.subq, "subquestion");
            // The draft is deliberately ambiguous: solved in context it gives
            // the intended answer, solved blind it gives something else.
            insert(ctx_solutions_, draft, solution_text(node.ctx_answer), "context solution");
            insert(blind_solutions_, draft, blind_text(mismatch(node.ctx_answer)),
                   "blind solution");
        } else {
            insert(makes_, make_prefix + "1", node.subq, "subquestion");
        }
        insert(ctx_solutions_, node.subq, solution_text(node.ctx_answer), "context solution");
        insert(blind_solutions_, node.subq, blind_text(node.blind_answer), "blind solution");
        if (!node.children.empty()) {
            add_split(node.subq, node.children);
            for (const NodePlan& grandchild : node.children) {
                add_node(node.subq, grandchild);
            }
        }
    }

    static std::string solution_text(const std::string& answer) {
        return "Working through the step in the context of the original problem, the "
               "value follows directly. The answer is $\\boxed{" +
               answer + "}$.";
    }

    static std::string blind_text(const std::string& answer) {
        return "Solving the question as stated, I get $\\boxed{" + answer + "}$.";
    }

    static std::string mismatch(const std::string& answer) {
        return answer == "999" ? "998" : "999";
    }

    std::map<std::string, std::string> splits_;
    std::map<std::string, std::string> tags_;
    std::map<std::string, std::string> makes_;  // question \x01 step \x01 nonce
    std::map<std::string, std::string> ctx_solutions_;
    std::map<std::string, std::string> blind_solutions_;
};

ProblemRecord root_record(const std::string& id, const std::string& question,
                          const std::string& cot, const std::string& answer,
                          const std::string& domain = "", const std::string& level = "") {
    ProblemRecord r;
    r.id = id;
    r.question = question;
    r.chain_of_thought = cot;
    r.answer = answer;
    if (!domain.empty()) {
        decomp::Stratum s;
        s.domain = domain;
        s.level = level;
        r.stratum = s;
    }
    return r;
}

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw decomp::Error("fixture invariant failed: " + what);
    }
}

// Walks the produced tree against the plan and checks every node landed on
// the designed verification outcome.
void check_outcomes(const std::vector<decomp::TreeNode>& nodes,
                    const std::vector<NodePlan>& plans, const std::string& where) {
    require(nodes.size() == plans.size(), where + ": expected " +
                                              std::to_string(plans.size()) + " children, got " +
                                              std::to_string(nodes.size()));
    for (size_t i = 0; i < nodes.size(); ++i) {
        const decomp::TreeNode& node = nodes[i];
        const NodePlan& plan = plans[i];
        std::string at = where + " step " + std::to_string(i + 1);
        require(node.record.tag == plan.tag, at + ": tag mismatch");
        if (plan.never_verify) {
            require(node.verification.status == decomp::VerifyStatus::failed_after_retries,
                    at + ": expected failed_after_retries");
        } else {
            require(node.verification.status == decomp::VerifyStatus::verified,
                    at + ": expected verified");
            require(node.verification.attempts == plan.verify_on_attempt,
                    at + ": expected verification on attempt " +
                        std::to_string(plan.verify_on_attempt));
            require(node.record.question == plan.subq, at + ": kept the wrong subquestion");
        }
        check_outcomes(node.children, plan.children, at);
    }
}

// ---------------------------------------------------------------------------
// Fixture set 1: ten two-domain records for the end-to-end pipeline run.
// Tag vocabulary is chosen so the local embedding keeps every pair below the
// 0.5 clustering threshold except "GCD Calculation"/"GCD Property", which
// share a word and merge exactly at it.

std::vector<RecordPlan> fixture10_plans() {
    std::vector<RecordPlan> plans;

    // f01: Fraction Simplification -> GCD Calculation; GCD Calculation -> Factorization
    {
        RecordPlan p;
        p.record = root_record(
            "f01", "Simplify $\\frac{30}{8}$ to lowest terms.",
            "The fraction 30/8 shares a common factor. The gcd of 30 and 8 is 2. "
            "Dividing both parts by 2 gives 15/4.",
            "\\frac{15}{4}", "arith", "L1");
        NodePlan c1{"Reduce the fraction $\\frac{30}{8}$ by its greatest common divisor.",
                    "Fraction Simplification",
                    "Write $\\frac{30}{8}$ in lowest terms as a single fraction.",
                    "\\frac{15}{4}",
                    "3.75",
                    1,
                    false,
                    {leaf("Find the greatest common divisor of 30 and 8.",
                              "GCD Calculation", "Compute $\\gcd(30, 8)$.", "2", "2")}};
        NodePlan c2{"Check that the reduced fraction cannot be reduced further.",
                    "GCD Calculation",
                    "What is $\\gcd(15, 4)$?",
                    "1",
                    "1",
                    1,
                    false,
                    {leaf("List the prime factors of 15.", "Factorization",
                              "Factor 15 into primes.", "3 \\cdot 5", "3 \\cdot 5")}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    // f02: Fraction Simplification -> Addition; Comparison -> Addition (grandchild
    // fails verification through the whole retry budget)
    {
        RecordPlan p;
        p.record = root_record(
            "f02", "Compute $\\frac{1}{4} + \\frac{1}{6}$.",
            "Rewrite both fractions over the common denominator 12. The sum of 3/12 and "
            "2/12 is 5/12. That fraction is already in lowest terms.",
            "\\frac{5}{12}", "arith", "L1");
        NodePlan c1{"Rewrite both fractions with denominator 12 and reduce the sum.",
                    "Fraction Simplification",
                    "Write $\\frac{1}{4} + \\frac{1}{6}$ as one reduced fraction.",
                    "\\frac{5}{12}",
                    "\\frac{5}{12}",
                    1,
                    false,
                    {leaf("Add the scaled numerators 3 and 2.", "Addition",
                              "What is $3 + 2$?", "5", "5")}};
        NodePlan failing{"Add 1/12 to the sum to see it reach one half.", "Addition",
                         "Compute $\\frac{5}{12} + \\frac{1}{12}$ as a reduced fraction.",
                         "\\frac{1}{2}",
                         "\\frac{7}{12}",
                         1,
                         true,
                         {}};
        NodePlan c2{"Confirm the sum stays below one half.",
                    "Comparison",
                    "Is $\\frac{5}{12}$ less than $\\frac{1}{2}$? Answer yes or no.",
                    "yes",
                    "yes",
                    1,
                    false,
                    {failing}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    // f03: Addition -> Multiplication (verified on the second attempt);
    // Multiplication -> Exponentiation
    {
        RecordPlan p;
        p.record = root_record(
            "f03", "Evaluate $2 + 3 \\cdot 4$.",
            "Multiplication binds before addition. The product of 3 and 4 is 12. "
            "Adding 2 gives 14.",
            "14", "arith", "L1");
        NodePlan c1{"Add 2 to the product of 3 and 4.",
                    "Addition",
                    "What is $2 + 12$?",
                    "14",
                    "14",
                    2,
                    false,
                    {leaf("Multiply 3 by 4 before adding.", "Multiplication",
                              "Compute $3 \\times 4$.", "12", "12")}};
        NodePlan c2{"Work out the product of 3 and 4 on its own.",
                    "Multiplication",
                    "Multiply 3 by 4 and report the product.",
                    "12",
                    "12",
                    1,
                    false,
                    {leaf("Rewrite the factor 4 as a power of 2.", "Exponentiation",
                              "Evaluate $2^2$.", "4", "4")}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    // f04: GCD Property -> Factorization; Factorization -> Exponentiation
    {
        RecordPlan p;
        p.record = root_record(
            "f04", "Reduce $\\frac{84}{126}$ to lowest terms.",
            "Both 84 and 126 are divisible by 42. The quotient pair is 2 and 3. So the "
            "reduced form is 2/3.",
            "\\frac{2}{3}", "arith", "L1");
        NodePlan c1{"Use the shared divisor of 84 and 126.",
                    "GCD Property",
                    "The numbers 84 and 126 share which greatest common divisor?",
                    "42",
                    "42",
                    1,
                    false,
                    {leaf("Factor 84 into primes to expose the shared part.",
                              "Factorization", "Factor 84 into primes.",
                              "2^2 \\cdot 3 \\cdot 7", "2^2 \\cdot 3 \\cdot 7")}};
        NodePlan c2{"Break 126 into prime factors.",
                    "Factorization",
                    "Factor 126 into primes.",
                    "2 \\cdot 3^2 \\cdot 7",
                    "2 \\cdot 3^2 \\cdot 7",
                    1,
                    false,
                    {leaf("Evaluate the squared factor that appears in 126.",
                              "Exponentiation", "Evaluate $3^2$ from the factorization of 126.",
                              "9", "9")}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    // f05: GCD Calculation -> Addition; Addition -> GCD Property (closes a
    // two-cycle between the Addition and GCD concepts)
    {
        RecordPlan p;
        p.record = root_record(
            "f05", "What is $\\gcd(18, 24)$ divided by 24, as a decimal?",
            "The gcd of 18 and 24 is 6. The ratio 6/24 equals 1/8 + 1/8. Adding the "
            "two eighths gives 0.25.",
            "0.25", "arith", "L1");
        NodePlan c1{"Compute the greatest common divisor of 18 and 24.",
                    "GCD Calculation",
                    "Find $\\gcd(18, 24)$.",
                    "6",
                    "6",
                    1,
                    false,
                    {leaf("Check that 6 divides 18 by adding three sixes.", "Addition",
                              "What is $6 + 6 + 6$?", "18", "18")}};
        NodePlan c2{"Add an eighth to an eighth to express the ratio.",
                    "Addition",
                    "Compute $\\frac{1}{8} + \\frac{1}{8}$ as a decimal.",
                    "0.25",
                    "\\frac{1}{4}",
                    1,
                    false,
                    {leaf("Reduce 2/8 using the common divisor of 2 and 8.",
                              "GCD Property", "Reducing $\\frac{2}{8}$: what is the gcd of 2 "
                              "and 8?",
                              "2", "2")}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    // f06: Comparison -> Addition; Fraction Simplification -> GCD Property
    {
        RecordPlan p;
        p.record = root_record(
            "f06", "Which is larger: $\\frac{3}{5}$ or $\\frac{4}{7}$?",
            "Cross-multiplying gives 21 versus 20. Since 21 exceeds 20, 3/5 is larger. "
            "The gap between the fractions is 1/35.",
            "\\frac{3}{5}", "arith", "L1");
        NodePlan c1{"Compare the cross products 21 and 20.",
                    "Comparison",
                    "Which is larger, 21 or 20?",
                    "21",
                    "21",
                    1,
                    false,
                    {leaf("Build the cross product 3 times 7 by repeated addition.",
                              "Addition", "What is $7 + 7 + 7$?", "21", "21")}};
        NodePlan c2{"Express the gap between the two fractions in lowest terms.",
                    "Fraction Simplification",
                    "Write $\\frac{3}{5} - \\frac{4}{7}$ as a single reduced fraction.",
                    "\\frac{1}{35}",
                    "\\frac{1}{35}",
                    1,
                    false,
                    {leaf("Confirm 1/35 is fully reduced from the divisors of 1 and 35.",
                              "GCD Property", "State $\\gcd(1, 35)$.", "1", "1")}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    // f07: Fraction Simplification -> GCD Calculation; Addition -> Multiplication
    {
        RecordPlan p;
        p.record = root_record(
            "f07", "Simplify $\\frac{x^2 - 9}{x + 3}$ for $x \\neq -3$.",
            "The numerator factors as (x-3)(x+3). Cancel the common factor x+3. The "
            "simplified form is x-3.",
            "x - 3", "algebra", "L2");
        NodePlan c1{"Cancel the common factor from the rational expression.",
                    "Fraction Simplification",
                    "Simplify $\\frac{(x-3)(x+3)}{x+3}$.",
                    "x - 3",
                    "x - 3",
                    1,
                    false,
                    {leaf("Treat the cancellation like reducing a numeric fraction.",
                              "GCD Calculation", "Reducing $\\frac{6}{9}$: compute "
                              "$\\gcd(6, 9)$.",
                              "3", "3")}};
        NodePlan c2{"Check the simplified form at the point x = 5.",
                    "Addition",
                    "What is $-3 + 5$?",
                    "2",
                    "2",
                    1,
                    false,
                    {leaf("Cross-check with the factored form at x = 5.",
                              "Multiplication", "Compute $2 \\times 8$.", "16", "16")}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    // f08: Multiplication -> Exponentiation; GCD Calculation -> Factorization
    {
        RecordPlan p;
        p.record = root_record(
            "f08", "Expand $(2x)^3$.",
            "The cube applies to both factors. 2 cubed is 8. So the result is 8x^3.",
            "8x^3", "algebra", "L2");
        NodePlan c1{"Multiply out the cube of the coefficient.",
                    "Multiplication",
                    "Compute $2 \\cdot 2 \\cdot 2$.",
                    "8",
                    "8",
                    1,
                    false,
                    {leaf("Recognize the repeated product as a power.", "Exponentiation",
                              "Evaluate $2^3$.", "8", "8")}};
        NodePlan c2{"Find the gcd of 8 and 12 to prepare a coefficient reduction.",
                    "GCD Calculation",
                    "Compute $\\gcd(8, 12)$.",
                    "4",
                    "4",
                    1,
                    false,
                    {leaf("Factor 12 to locate the shared primes.", "Factorization",
                              "Factor 12 into primes.", "2^2 \\cdot 3", "2^2 \\cdot 3")}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    // f09: Comparison -> GCD Calculation; Factorization -> Exponentiation
    {
        RecordPlan p;
        p.record = root_record(
            "f09", "Solve $3x = -36$ for $x$.",
            "Divide both sides by 3. The quotient of -36 and 3 is -12. A quick size "
            "check confirms the magnitude shrank.",
            "-12", "algebra", "L2");
        NodePlan c1{"Compare the magnitudes of -36 and 3 before dividing.",
                    "Comparison",
                    "Which has larger absolute value, $-36$ or $3$?",
                    "-36",
                    "-36",
                    1,
                    false,
                    {leaf("Relate the clean division to the gcd of 36 and 3.",
                              "GCD Calculation", "Compute $\\gcd(36, 3)$.", "3", "3")}};
        NodePlan c2{"Carry out the division through the prime factors of 36.",
                    "Factorization",
                    "Using $36 = 2^2 \\cdot 3^2$, compute $-36 / 3$.",
                    "-12",
                    "-12.0",
                    1,
                    false,
                    {leaf("Evaluate the square that rebuilds 36.", "Exponentiation",
                              "Evaluate $6^2$.", "36", "36")}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    // f10: Fraction Simplification -> Addition; Multiplication -> Exponentiation
    {
        RecordPlan p;
        p.record = root_record(
            "f10", "Write $\\frac{4x}{6}$ in simplest form.",
            "The coefficients 4 and 6 share the factor 2. Dividing both by 2 gives 2x "
            "over 3. Multiplying 2/3 by 3 recovers 2 as a check.",
            "\\frac{2x}{3}", "algebra", "L2");
        NodePlan c1{"Divide the numerator and denominator by the shared factor 2.",
                    "Fraction Simplification",
                    "Simplify $\\frac{4}{6}$ to lowest terms.",
                    "\\frac{2}{3}",
                    "\\frac{2}{3}",
                    1,
                    false,
                    {leaf("Confirm the value by adding two thirds together... of one "
                              "third each.",
                              "Addition", "Compute $\\frac{1}{3} + \\frac{1}{3}$.",
                              "\\frac{2}{3}", "\\frac{2}{3}")}};
        NodePlan c2{"Check the reduction by multiplying 2/3 back by 3.",
                    "Multiplication",
                    "What is $\\frac{2}{3} \\cdot 3$?",
                    "2",
                    "2",
                    1,
                    false,
                    {leaf("View the factor 3 as the first power of 3.", "Exponentiation",
                              "Evaluate $3^1$.", "3", "3")}};
        p.children = {c1, c2};
        plans.push_back(p);
    }

    return plans;
}

// ---------------------------------------------------------------------------
// Fixture set 2: one worked example whose decomposition produces a layered
// concept graph and a known difficulty annotation for every node.

std::vector<RecordPlan> worked_example_plans() {
    RecordPlan p;
    p.record = root_record(
        "simplify_power_fraction",
        "Simplify $\\frac{3^4 + 3^2}{3^3 - 3}$ to lowest terms.",
        "The numerator evaluates to 81 + 9 = 90 and the denominator to 27 - 3 = 24. "
        "The gcd of 90 and 24 is 6. Dividing through by 6 leaves 15/4.",
        "\\frac{15}{4}");

    NodePlan c1{"Evaluate the powers of 3 in the numerator and denominator.",
                "Exponentiation",
                "Evaluate $3^4$.",
                "81",
                "81",
                1,
                false,
                {leaf("Expand the power as repeated multiplication.", "Multiplication",
                          "Compute $3 \\cdot 27$.", "81", "81")}};
    NodePlan c2{"Find the greatest common divisor of the evaluated numerator 90 and "
                "denominator 24.",
                "GCD Calculation",
                "Find $\\gcd(90, 24)$.",
                "6",
                "6",
                1,
                false,
                {leaf("Factor 90 into primes.", "Factorization", "Factor 90 into primes.",
                          "2 \\cdot 3^2 \\cdot 5", "2 \\cdot 3^2 \\cdot 5"),
                 leaf("Decide which of the candidate divisors 6 and 12 divides both "
                          "numbers.",
                          "Comparison", "Which of 6 and 12 divides both 90 and 24?", "6",
                          "6")}};
    NodePlan c3{"Divide the numerator and denominator by 6 and state the reduced "
                "fraction.",
                "Fraction Simplification",
                "Reduce $\\frac{90}{24}$ to lowest terms.",
                "\\frac{15}{4}",
                "3.75",
                1,
                false,
                {leaf("Evaluate $3^2$ inside the numerator sum.", "Exponentiation",
                          "Evaluate $3^2$.", "9", "9"),
                 leaf("Add the evaluated terms 81 and 9.", "Addition",
                          "What is $81 + 9$?", "90", "90"),
                 leaf("Reduce using the gcd found earlier.", "GCD Calculation",
                          "State $\\gcd(90, 24)$ as used for the reduction.", "6", "6")}};
    p.children = {c1, c2, c3};
    return {p};
}

// ---------------------------------------------------------------------------

struct GeneratedSet {
    std::vector<ProblemRecord> corpus;
    std::vector<decomp::DecompositionTree> trees;
};

GeneratedSet generate_set(const std::vector<RecordPlan>& plans,
                          const std::filesystem::path& corpus_path,
                          const std::filesystem::path& script_path,
                          const decomp::DecompositionParams& params) {
    auto design = std::make_shared<DesignTeacher>();
    for (const RecordPlan& plan : plans) {
        design->add_record(plan);
    }
    std::filesystem::remove(script_path);
    decomp::RecordingTeacher recorder(design, script_path);

    GeneratedSet out;
    for (const RecordPlan& plan : plans) {
        out.corpus.push_back(plan.record);
        decomp::DecompositionTree tree = decomp::decompose_example(plan.record, params, recorder);
        require(!tree.error.has_value(),
                plan.record.id + ": unexpected abort: " + tree.error.value_or(""));
        check_outcomes(tree.children, plan.children, plan.record.id);
        out.trees.push_back(std::move(tree));
    }
    decomp::save_corpus(out.corpus, corpus_path);
    return out;
}

void check_similarity_geometry(const std::vector<decomp::DecompositionTree>& trees) {
    decomp::LocalHashEmbedding emb(256);
    std::map<std::string, int> occurrences = decomp::tag_occurrences(trees);
    std::vector<std::string> tags;
    for (const auto& [tag, count] : occurrences) {
        (void)count;
        tags.push_back(tag);
    }
    for (size_t i = 0; i < tags.size(); ++i) {
        for (size_t j = i + 1; j < tags.size(); ++j) {
            double s = decomp::tag_similarity(emb.embed(tags[i]), emb.embed(tags[j]));
            bool gcd_pair = (tags[i] == "GCD Calculation" && tags[j] == "GCD Property") ||
                            (tags[i] == "GCD Property" && tags[j] == "GCD Calculation");
            if (gcd_pair) {
                require(s == 0.5, "GCD tag pair must sit exactly at similarity 0.5");
            } else {
                require(s < 0.5, "tags \"" + tags[i] + "\" and \"" + tags[j] +
                                     "\" are too similar (" + std::to_string(s) +
                                     "); they would merge at the 0.5 threshold");
            }
        }
    }
}

void check_fixture10_graph(const std::vector<decomp::DecompositionTree>& trees) {
    decomp::LocalHashEmbedding emb(256);
    decomp::ConceptGraph g = decomp::build_concept_graph(trees, emb, 0.5);
    require(g.cluster_map.at("GCD Property") == "GCD Calculation",
            "GCD Property must fold into GCD Calculation");
    require(g.nodes.size() == 7, "expected 7 concepts, got " + std::to_string(g.nodes.size()));
    std::map<std::string, int> want_depth = {
        {"Fraction Simplification", 0}, {"Comparison", 0},     {"GCD Calculation", 1},
        {"Addition", 1},                {"Multiplication", 2}, {"Factorization", 2},
        {"Exponentiation", 3},
    };
    for (const auto& [concept_tag, d] : want_depth) {
        require(g.depth.at(concept_tag) == d,
                concept_tag + ": expected depth " + std::to_string(d) + ", got " +
                    std::to_string(g.depth.at(concept_tag)));
    }
}

void check_worked_example(const GeneratedSet& set) {
    decomp::LocalHashEmbedding emb(256);
    decomp::ConceptGraph g = decomp::build_concept_graph(set.trees, emb, 0.5);
    require(g.nodes.size() == 7, "worked example: expected 7 singleton concepts");
    std::map<std::string, int> want_depth = {
        {"Fraction Simplification", 0}, {"Exponentiation", 1}, {"Addition", 1},
        {"GCD Calculation", 1},         {"Multiplication", 2}, {"Factorization", 2},
        {"Comparison", 2},
    };
    for (const auto& [concept_tag, d] : want_depth) {
        require(g.depth.at(concept_tag) == d,
                "worked example " + concept_tag + ": expected depth " + std::to_string(d));
    }

    decomp::DifficultyParams params;
    std::vector<decomp::DifficultyAnnotation> annotations =
        decomp::annotate_trees(set.trees, g, params);
    require(annotations.size() == 10, "worked example: expected 10 annotated records");
    std::map<std::string, double> want_score = {
        {"simplify_power_fraction", 8.0},   {"simplify_power_fraction.1", 4.0},
        {"simplify_power_fraction.1.1", 4.0}, {"simplify_power_fraction.2", 6.0},
        {"simplify_power_fraction.2.1", 4.0}, {"simplify_power_fraction.2.2", 4.0},
        {"simplify_power_fraction.3", 6.0},   {"simplify_power_fraction.3.1", 2.0},
        {"simplify_power_fraction.3.2", 2.0}, {"simplify_power_fraction.3.3", 2.0},
    };
    for (const auto& a : annotations) {
        require(want_score.count(a.record_id) != 0, "unexpected record " + a.record_id);
        require(a.score == want_score.at(a.record_id),
                a.record_id + ": expected score " + std::to_string(want_score.at(a.record_id)) +
                    ", got " + std::to_string(a.score));
    }
}

void write_fixture10_quotas(const std::filesystem::path& path) {
    nlohmann::ordered_json quotas = nlohmann::ordered_json::array();
    quotas.push_back({{"domain", "arith"}, {"level", "L1"}, {"total", 6}, {"target", 4}});
    quotas.push_back({{"domain", "algebra"}, {"level", "L2"}, {"total", 4}, {"target", 3}});
    decomp::write_text_file(path, quotas.dump(2) + "\n");
}

// Per-domain totals and sample targets of the standard benchmark's test
// split, as used by the sampler check.
void write_math_quotas(const std::filesystem::path& path) {
    nlohmann::ordered_json quotas = nlohmann::ordered_json::array();
    auto add = [&quotas](const char* domain, int total, int target) {
        quotas.push_back({{"domain", domain}, {"total", total}, {"target", target}});
    };
    add("Algebra", 1744, 84);
    add("Counting and Probability", 771, 36);
    add("Geometry", 870, 43);
    add("Intermediate Algebra", 1295, 63);
    add("Number Theory", 869, 41);
    add("Prealgebra", 1205, 58);
    add("Precalculus", 746, 35);
    decomp::write_text_file(path, quotas.dump(2) + "\n");
}

void write_fixture10_config(const std::filesystem::path& path) {
    nlohmann::ordered_json cfg;
    cfg["teacher"] = {{"mode", "scripted"}, {"script", "fixtures/fixture10_script.json"}};
    cfg["sampling"] = {{"quotas", "fixtures/fixture10_quotas.json"}, {"seed", 17}};
    cfg["paths"] = {{"corpus_in", "fixtures/fixture10_corpus.jsonl"},
                    {"sampled", "out/sampled.jsonl"},
                    {"tree_dir", "out/trees"},
                    {"graph_json", "out/graph.json"},
                    {"graph_dot", "out/graph.dot"},
                    {"annotations", "out/annotations.jsonl"},
                    {"plan_dir", "out/plan"},
                    {"run_log", "out/run_log.jsonl"}};
    decomp::write_text_file(path, cfg.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    std::filesystem::path out_dir = argc > 1 ? argv[1] : "fixtures";
    try {
        std::filesystem::create_directories(out_dir);
        decomp::DecompositionParams params;  // depth 2, 5 steps, 3 retries, strict

        GeneratedSet ten = generate_set(fixture10_plans(), out_dir / "fixture10_corpus.jsonl",
                                        out_dir / "fixture10_script.json", params);
        check_similarity_geometry(ten.trees);
        check_fixture10_graph(ten.trees);
        write_fixture10_quotas(out_dir / "fixture10_quotas.json");
        write_fixture10_config(out_dir / "fixture10_config.json");

        GeneratedSet worked =
            generate_set(worked_example_plans(), out_dir / "worked_example_corpus.jsonl",
                         out_dir / "worked_example_script.json", params);
        check_similarity_geometry(worked.trees);
        check_worked_example(worked);

        write_math_quotas(out_dir / "math_quotas.json");

        std::printf("wrote fixtures to %s\n", out_dir.string().c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "make_fixtures: %s\n", e.what());
        return 1;
    }
}
