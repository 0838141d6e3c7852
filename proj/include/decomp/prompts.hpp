#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace decomp {

// The five teacher interactions the pipeline performs.
enum class Template {
    split_steps,
    tag_step,
    make_question,
    solve_with_context,
    solve_blind,
};

inline constexpr Template kAllTemplates[] = {
    Template::split_steps, Template::tag_step, Template::make_question,
    Template::solve_with_context, Template::solve_blind};

const char* template_name(Template t);
Template template_from_name(const std::string& name);

// Slot names each template requires — exactly these, no more, no fewer.
const std::vector<std::string>& demanded_slots(Template t);

// A set of prompt templates with {{slot}} placeholders. The built-in set is
// identical to the files under prompts/; load_dir reads a directory of
// <template_name>.txt files and validates that each file's placeholders
// match the demanded slot set.
class PromptSet {
public:
    static PromptSet builtin();
    static PromptSet load_dir(const std::filesystem::path& dir);

    // Substitutes each {{slot}} in a single pass (substituted values are
    // never re-scanned). Throws ValidationError naming the slot if one is
    // missing or unexpected.
    std::string render(Template t, const std::map<std::string, std::string>& slots) const;

    const std::string& text(Template t) const;

private:
    PromptSet() = default;
    std::map<Template, std::string> templates_;
};

}  // namespace decomp
