#include "decomp/answer_checker.hpp"

#include <optional>
#include <regex>

#include "decomp/errors.hpp"
#include "decomp/util.hpp"

namespace decomp {

namespace {

using boost::multiprecision::cpp_int;

cpp_int parse_int(std::string digits) {
    bool negative = false;
    if (!digits.empty() && (digits.front() == '+' || digits.front() == '-')) {
        negative = digits.front() == '-';
        digits.erase(digits.begin());
    }
    // cpp_int's string constructor reads a leading 0 as an octal prefix.
    while (digits.size() > 1 && digits.front() == '0') {
        digits.erase(digits.begin());
    }
    cpp_int value(digits);
    return negative ? -value : value;
}

void erase_all(std::string& s, const std::string& token) {
    size_t pos = 0;
    while ((pos = s.find(token, pos)) != std::string::npos) {
        s.erase(pos, token.size());
    }
}

// If s is exactly "\boxed{...}" with the closing brace at the end, return
// the contents.
std::optional<std::string> unwrap_boxed(const std::string& s) {
    const std::string needle = "\\boxed{";
    if (s.rfind(needle, 0) != 0) {
        return std::nullopt;
    }
    int depth = 1;
    for (size_t i = needle.size(); i < s.size(); ++i) {
        if (s[i] == '{') {
            ++depth;
        } else if (s[i] == '}') {
            if (--depth == 0) {
                if (i + 1 != s.size()) {
                    return std::nullopt;
                }
                return s.substr(needle.size(), i - needle.size());
            }
        }
    }
    return std::nullopt;
}

// Peels $ delimiters, trailing periods, and whole-string \boxed wrappers
// until nothing changes.
std::string strip_wrappers(const std::string& raw) {
    std::string s = trim(raw);
    while (true) {
        std::string before = s;
        while (!s.empty() && s.back() == '$') s.pop_back();
        while (!s.empty() && s.front() == '$') s.erase(s.begin());
        s = trim(s);
        if (!s.empty() && s.back() == '.') {
            s.pop_back();
            s = trim(s);
        }
        if (auto inner = unwrap_boxed(s)) {
            s = trim(*inner);
        }
        if (s == before) {
            return s;
        }
    }
}

CanonicalAnswer make_rational(AnswerKind kind, cpp_int num, cpp_int den,
                              std::string literal = {}) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    cpp_int g = boost::multiprecision::gcd(boost::multiprecision::abs(num), den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (num == 0) {
        den = 1;
    }
    CanonicalAnswer out;
    out.kind = kind;
    out.num = std::move(num);
    out.den = std::move(den);
    out.text = std::move(literal);
    return out;
}

const std::regex kIntegerRe(R"(^[+-]?[0-9]+$)");
const std::regex kDecimalRe(R"(^([+-]?)([0-9]+)\.([0-9]*)$|^([+-]?)\.([0-9]+)$)");
const std::regex kFracRe(R"(^([+-]?)\\[dt]?frac\{\s*([+-]?[0-9]+)\s*\}\{\s*([+-]?[0-9]+)\s*\}$)");
const std::regex kSlashRe(R"(^([+-]?[0-9]+)\s*/\s*([+-]?[0-9]+)$)");

cpp_int pow10(size_t n) {
    cpp_int p = 1;
    for (size_t i = 0; i < n; ++i) p *= 10;
    return p;
}

}  // namespace

std::string CanonicalAnswer::display() const {
    switch (kind) {
        case AnswerKind::integer:
            return num.str();
        case AnswerKind::rational:
            return "\\frac{" + num.str() + "}{" + den.str() + "}";
        case AnswerKind::decimal:
        case AnswerKind::symbolic_text:
            return text;
    }
    return text;
}

std::string extract_final_answer(const std::string& solution_text) {
    if (trim(solution_text).empty()) {
        throw ValidationError("cannot extract an answer from empty text");
    }

    // Last top-level \boxed{...}: inner boxes inside an already-matched
    // region are part of its contents, not separate candidates.
    const std::string needle = "\\boxed{";
    std::optional<std::string> last_box;
    size_t pos = 0;
    while (true) {
        size_t at = solution_text.find(needle, pos);
        if (at == std::string::npos) {
            break;
        }
        size_t open = at + needle.size();
        int depth = 1;
        size_t i = open;
        while (i < solution_text.size() && depth > 0) {
            if (solution_text[i] == '{') {
                ++depth;
            } else if (solution_text[i] == '}') {
                --depth;
            }
            ++i;
        }
        if (depth == 0) {
            std::string content = trim(solution_text.substr(open, i - 1 - open));
            if (!content.empty()) {
                last_box = content;
            }
            pos = i;
        } else {
            pos = open;
        }
    }
    if (last_box) {
        return *last_box;
    }

    std::vector<std::string> lines = split_lines(solution_text);
    std::string last_line;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        if (!trim(*it).empty()) {
            last_line = trim(*it);
            break;
        }
    }
    std::string candidate = last_line;
    size_t eq = candidate.rfind('=');
    if (eq != std::string::npos) {
        candidate = candidate.substr(eq + 1);
    }
    candidate = strip_wrappers(candidate);
    if (candidate.empty()) {
        candidate = strip_wrappers(last_line);
    }
    if (candidate.empty()) {
        candidate = last_line;
    }
    return candidate;
}

CanonicalAnswer canonicalize(const std::string& answer_text) {
    std::string s = strip_wrappers(answer_text);
    erase_all(s, "\\left");
    erase_all(s, "\\right");
    s = trim(s);

    std::smatch m;
    if (std::regex_match(s, m, kIntegerRe)) {
        CanonicalAnswer out = make_rational(AnswerKind::integer, parse_int(s), 1);
        return out;
    }
    if (std::regex_match(s, m, kDecimalRe)) {
        std::string sign = m[1].matched ? m[1].str() : m[4].str();
        std::string int_part = m[2].matched ? m[2].str() : "0";
        std::string frac_part = m[3].matched ? m[3].str() : m[5].str();
        cpp_int num = parse_int(int_part) * pow10(frac_part.size());
        if (!frac_part.empty()) {
            num += parse_int(frac_part);
        }
        if (sign == "-") {
            num = -num;
        }
        return make_rational(AnswerKind::decimal, num, pow10(frac_part.size()), s);
    }
    if (std::regex_match(s, m, kFracRe)) {
        cpp_int num = parse_int(m[2].str());
        cpp_int den = parse_int(m[3].str());
        if (den != 0) {
            if (m[1].str() == "-") {
                num = -num;
            }
            return make_rational(AnswerKind::rational, num, den);
        }
    }
    if (std::regex_match(s, m, kSlashRe)) {
        cpp_int den = parse_int(m[2].str());
        if (den != 0) {
            return make_rational(AnswerKind::rational, parse_int(m[1].str()), den);
        }
    }

    CanonicalAnswer out;
    out.kind = AnswerKind::symbolic_text;
    out.text = to_lower_ascii(collapse_whitespace(s));
    return out;
}

bool equivalent(const CanonicalAnswer& a, const CanonicalAnswer& b) {
    if (a.is_numeric() && b.is_numeric()) {
        return a.num == b.num && a.den == b.den;
    }
    if (!a.is_numeric() && !b.is_numeric()) {
        return a.text == b.text;
    }
    return false;
}

bool answers_equivalent(const std::string& a, const std::string& b) {
    return equivalent(canonicalize(a), canonicalize(b));
}

}  // namespace decomp
