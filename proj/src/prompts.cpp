#include "decomp/prompts.hpp"

#include <regex>
#include <set>

#include "decomp/errors.hpp"
#include "decomp/util.hpp"

namespace decomp {

namespace {

constexpr const char* kSplitSteps =
    R"(You are given a math problem and its full worked solution. Split the solution into conceptually atomic steps, each one a single mathematical action with its result.

Problem:
{{question}}

Solution:
{{cot}}

Rewrite the solution as a numbered list of at most {{max_steps}} steps. Each step must be one self-contained sentence that makes sense on its own and states the quantities it uses. Reply with the numbered list only, one item per line:
1. <first step>
2. <second step>
)";

constexpr const char* kTagStep =
    R"(Name the single most specific mathematical concept that the following solution step exercises.

Step:
{{step}}

Reply with only a short concept name in title case, at most four words, for example "Fraction Simplification" or "GCD Calculation".
)";

constexpr const char* kMakeQuestion =
    R"(You are writing practice problems. Below are an original problem, one step from its solution, and the concept that step exercises.

Original problem:
{{question}}

Solution step:
{{step}}

Concept: {{tag}}

Write one self-contained subproblem that drills exactly this step's computation. It must be answerable without the original problem, state every quantity it needs, and have a single numeric or closed-form answer. {{retry_hint}}(draft {{nonce}})

Reply with the subproblem text only.
)";

constexpr const char* kSolveWithContext =
    R"(Below are an original problem, one step from its worked solution, and a subproblem that drills that step.

Original problem:
{{question}}

Solution step ({{tag}}):
{{step}}

Subproblem:
{{subquestion}}

Using the context above, solve the subproblem step by step. End with the final answer on its own last line as \boxed{...}.
)";

constexpr const char* kSolveBlind =
    R"(Solve the following problem step by step.

Problem:
{{subquestion}}

Reason carefully. End with the final answer on its own last line as \boxed{...}.
)";

const std::regex kPlaceholderRe(R"(\{\{([A-Za-z_]+)\}\})");

std::set<std::string> placeholders_in(const std::string& text) {
    std::set<std::string> found;
    auto begin = std::sregex_iterator(text.begin(), text.end(), kPlaceholderRe);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        found.insert((*it)[1].str());
    }
    return found;
}

void validate_template_text(Template t, const std::string& text, const std::string& origin) {
    std::set<std::string> found = placeholders_in(text);
    const std::vector<std::string>& demanded = demanded_slots(t);
    std::set<std::string> expected(demanded.begin(), demanded.end());
    if (found != expected) {
        std::string msg = "template " + std::string(template_name(t)) + " (" + origin +
                          "): placeholders do not match its slot set;";
        for (const std::string& s : expected) {
            if (!found.count(s)) msg += " missing {{" + s + "}}";
        }
        for (const std::string& s : found) {
            if (!expected.count(s)) msg += " unexpected {{" + s + "}}";
        }
        throw ValidationError(msg);
    }
}

}  // namespace

const char* template_name(Template t) {
    switch (t) {
        case Template::split_steps: return "split_steps";
        case Template::tag_step: return "tag_step";
        case Template::make_question: return "make_question";
        case Template::solve_with_context: return "solve_with_context";
        case Template::solve_blind: return "solve_blind";
    }
    return "unknown";
}

Template template_from_name(const std::string& name) {
    for (Template t : kAllTemplates) {
        if (name == template_name(t)) {
            return t;
        }
    }
    throw ValidationError("unknown template name: " + name);
}

const std::vector<std::string>& demanded_slots(Template t) {
    static const std::vector<std::string> split = {"question", "cot", "max_steps"};
    static const std::vector<std::string> tag = {"step"};
    static const std::vector<std::string> make = {"question", "step", "tag",
                                                  "retry_hint", "nonce"};
    static const std::vector<std::string> with_ctx = {"question", "step", "tag",
                                                      "subquestion"};
    static const std::vector<std::string> blind = {"subquestion"};
    switch (t) {
        case Template::split_steps: return split;
        case Template::tag_step: return tag;
        case Template::make_question: return make;
        case Template::solve_with_context: return with_ctx;
        case Template::solve_blind: return blind;
    }
    return blind;
}

PromptSet PromptSet::builtin() {
    PromptSet set;
    set.templates_[Template::split_steps] = kSplitSteps;
    set.templates_[Template::tag_step] = kTagStep;
    set.templates_[Template::make_question] = kMakeQuestion;
    set.templates_[Template::solve_with_context] = kSolveWithContext;
    set.templates_[Template::solve_blind] = kSolveBlind;
    for (const auto& [t, text] : set.templates_) {
        validate_template_text(t, text, "builtin");
    }
    return set;
}

PromptSet PromptSet::load_dir(const std::filesystem::path& dir) {
    PromptSet set;
    for (Template t : kAllTemplates) {
        std::filesystem::path file = dir / (std::string(template_name(t)) + ".txt");
        std::string text = read_text_file(file);
        validate_template_text(t, text, file.string());
        set.templates_[t] = std::move(text);
    }
    return set;
}

const std::string& PromptSet::text(Template t) const {
    return templates_.at(t);
}

std::string PromptSet::render(Template t,
                              const std::map<std::string, std::string>& slots) const {
    const std::vector<std::string>& demanded = demanded_slots(t);
    for (const std::string& name : demanded) {
        if (!slots.count(name)) {
            throw ValidationError("template " + std::string(template_name(t)) +
                                  ": missing slot " + name);
        }
    }
    for (const auto& [name, value] : slots) {
        (void)value;
        if (std::find(demanded.begin(), demanded.end(), name) == demanded.end()) {
            throw ValidationError("template " + std::string(template_name(t)) +
                                  ": unexpected slot " + name);
        }
    }

    const std::string& tpl = templates_.at(t);
    std::string out;
    out.reserve(tpl.size());
    std::sregex_iterator it(tpl.begin(), tpl.end(), kPlaceholderRe);
    size_t last = 0;
    for (; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        out.append(tpl, last, static_cast<size_t>(m.position()) - last);
        out += slots.at(m[1].str());
        last = static_cast<size_t>(m.position() + m.length());
    }
    out.append(tpl, last, std::string::npos);
    return out;
}

}  // namespace decomp
