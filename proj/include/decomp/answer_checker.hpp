#pragma once

#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace decomp {

enum class AnswerKind { integer, rational, decimal, symbolic_text };

// One parsed answer. Numeric kinds (integer, rational, decimal) carry an
// exact reduced fraction num/den with den > 0; decimal additionally keeps
// the literal it was parsed from, so no float ever enters a comparison.
// Anything unparseable is symbolic_text, normalized by case-fold and
// whitespace collapse.
struct CanonicalAnswer {
    AnswerKind kind = AnswerKind::symbolic_text;
    boost::multiprecision::cpp_int num = 0;
    boost::multiprecision::cpp_int den = 1;
    std::string text;

    bool is_numeric() const { return kind != AnswerKind::symbolic_text; }

    // Canonical rendering: reparsing it yields an equivalent answer.
    std::string display() const;

    bool operator==(const CanonicalAnswer&) const = default;
};

// Pulls the final answer out of a full solution text: the contents of the
// last top-level `\boxed{...}` region if one exists, otherwise the tail of
// the last non-empty line after its final '=' (or the whole line). Throws
// ValidationError on empty input; never returns an empty string otherwise.
std::string extract_final_answer(const std::string& solution_text);

// Strips wrappers ($, \boxed, \left/\right, trailing period), then parses
// signed integers, decimal literals, \frac{a}{b}, and a/b into exact
// rationals. Falls back to symbolic_text; never throws.
CanonicalAnswer canonicalize(const std::string& answer_text);

bool equivalent(const CanonicalAnswer& a, const CanonicalAnswer& b);

// canonicalize() both sides and compare. Exact: 15/4 == 3.75 == \frac{15}{4},
// but 1/3 != 0.333.
bool answers_equivalent(const std::string& a, const std::string& b);

}  // namespace decomp
