#include "decomp/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "decomp/errors.hpp"
#include "decomp/rng.hpp"
#include "decomp/util.hpp"

namespace decomp {

namespace {

using nlohmann::json;

std::string require_string(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) {
        throw ValidationError(where + ": missing field " + key);
    }
    if (!j.at(key).is_string()) {
        throw ValidationError(where + ": field " + key + " must be a string");
    }
    return j.at(key).get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key,
                                           const std::string& where) {
    if (!j.contains(key)) {
        return std::nullopt;
    }
    if (!j.at(key).is_string()) {
        throw ValidationError(where + ": field " + key + " must be a string");
    }
    return j.at(key).get<std::string>();
}

}  // namespace

std::string StratumQuota::label() const {
    std::string out;
    if (domain) {
        out += "domain=" + *domain;
    }
    if (level) {
        if (!out.empty()) out += ",";
        out += "level=" + *level;
    }
    return out.empty() ? "(all)" : out;
}

nlohmann::ordered_json record_to_json(const ProblemRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["question"] = r.question;
    j["chain_of_thought"] = r.chain_of_thought;
    j["answer"] = r.answer;
    if (r.tag) {
        j["tag"] = *r.tag;
    }
    j["depth"] = r.depth;
    if (r.parent_id) {
        j["parent_id"] = *r.parent_id;
    }
    if (r.stratum) {
        nlohmann::ordered_json s;
        if (r.stratum->domain) s["domain"] = *r.stratum->domain;
        if (r.stratum->level) s["level"] = *r.stratum->level;
        j["stratum"] = s;
    }
    return j;
}

ProblemRecord record_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) {
        throw ValidationError(where + ": record must be a JSON object");
    }
    static const std::set<std::string> known = {
        "id", "question", "chain_of_thought", "answer",
        "tag", "depth", "parent_id", "stratum"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) {
            throw ValidationError(where + ": unknown field " + key);
        }
    }

    ProblemRecord r;
    r.id = require_string(j, "id", where);
    r.question = require_string(j, "question", where);
    r.chain_of_thought = require_string(j, "chain_of_thought", where);
    r.answer = require_string(j, "answer", where);
    r.tag = optional_string(j, "tag", where);
    if (!j.contains("depth")) {
        throw ValidationError(where + ": missing field depth");
    }
    if (!j.at("depth").is_number_integer() || j.at("depth").get<long>() < 0) {
        throw ValidationError(where + ": field depth must be a non-negative integer");
    }
    r.depth = j.at("depth").get<int>();
    r.parent_id = optional_string(j, "parent_id", where);
    if (j.contains("stratum")) {
        const json& s = j.at("stratum");
        if (!s.is_object()) {
            throw ValidationError(where + ": field stratum must be an object");
        }
        for (const auto& [key, value] : s.items()) {
            (void)value;
            if (key != "domain" && key != "level") {
                throw ValidationError(where + ": unknown stratum field " + key);
            }
        }
        Stratum st;
        st.domain = optional_string(s, "domain", where);
        st.level = optional_string(s, "level", where);
        r.stratum = st;
    }
    validate_record(r, where);
    return r;
}

void validate_record(const ProblemRecord& r, const std::string& where) {
    if (r.id.empty()) {
        throw ValidationError(where + ": id must be non-empty");
    }
    if (r.depth == 0 && r.parent_id) {
        throw ValidationError(where + ": depth 0 record must not have parent_id");
    }
    if (r.depth > 0 && !r.parent_id) {
        throw ValidationError(where + ": depth " + std::to_string(r.depth) +
                              " record requires parent_id");
    }
    if (!r.tag && r.depth != 0) {
        throw ValidationError(where + ": untagged record must have depth 0");
    }
}

std::vector<ProblemRecord> load_corpus(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    std::vector<ProblemRecord> records;
    std::map<std::string, size_t> id_lines;

    std::vector<std::string> lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (trim(line).empty()) {
            continue;
        }
        std::string where = "line " + std::to_string(i + 1);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": malformed JSON: " + e.what());
        }
        ProblemRecord r = record_from_json(j, where);
        auto [it, inserted] = id_lines.emplace(r.id, i + 1);
        if (!inserted) {
            throw ValidationError("duplicate id \"" + r.id + "\" (lines " +
                                  std::to_string(it->second) + " and " +
                                  std::to_string(i + 1) + ")");
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::string corpus_to_jsonl(const std::vector<ProblemRecord>& records) {
    std::set<std::string> ids;
    std::string out;
    for (size_t i = 0; i < records.size(); ++i) {
        const ProblemRecord& r = records[i];
        validate_record(r, "record " + std::to_string(i + 1));
        if (!ids.insert(r.id).second) {
            throw ValidationError("duplicate id \"" + r.id + "\" in records to save");
        }
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const std::vector<ProblemRecord>& records,
                 const std::filesystem::path& path) {
    write_text_file(path, corpus_to_jsonl(records));
}

std::vector<StratumQuota> load_quotas(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError("quota file " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) {
        throw ValidationError("quota file must be a JSON array");
    }
    std::vector<StratumQuota> quotas;
    size_t idx = 0;
    for (const json& q : j) {
        ++idx;
        std::string where = "quota " + std::to_string(idx);
        if (!q.is_object()) {
            throw ValidationError(where + ": must be an object");
        }
        for (const auto& [key, value] : q.items()) {
            (void)value;
            if (key != "domain" && key != "level" && key != "total" && key != "target") {
                throw ValidationError(where + ": unknown field " + key);
            }
        }
        StratumQuota sq;
        sq.domain = optional_string(q, "domain", where);
        sq.level = optional_string(q, "level", where);
        if (!q.contains("total") || !q.at("total").is_number_integer()) {
            throw ValidationError(where + ": total must be an integer");
        }
        if (!q.contains("target") || !q.at("target").is_number_integer()) {
            throw ValidationError(where + ": target must be an integer");
        }
        sq.total = q.at("total").get<long>();
        sq.target = q.at("target").get<long>();
        if (sq.target < 0 || sq.total < 0 || sq.target > sq.total) {
            throw ValidationError(where + " (" + sq.label() +
                                  "): requires 0 <= target <= total");
        }
        quotas.push_back(std::move(sq));
    }
    return quotas;
}

namespace {

bool quota_matches(const StratumQuota& q, const ProblemRecord& r) {
    if (q.domain) {
        if (!r.stratum || !r.stratum->domain || *r.stratum->domain != *q.domain) {
            return false;
        }
    }
    if (q.level) {
        if (!r.stratum || !r.stratum->level || *r.stratum->level != *q.level) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::vector<ProblemRecord> stratified_sample(const std::vector<ProblemRecord>& records,
                                             const std::vector<StratumQuota>& quotas,
                                             uint64_t seed) {
    std::vector<std::vector<size_t>> groups(quotas.size());
    for (size_t i = 0; i < records.size(); ++i) {
        size_t match = quotas.size();
        for (size_t q = 0; q < quotas.size(); ++q) {
            if (!quota_matches(quotas[q], records[i])) {
                continue;
            }
            if (match != quotas.size()) {
                throw ValidationError("record \"" + records[i].id +
                                      "\" matches multiple strata (" +
                                      quotas[match].label() + " and " +
                                      quotas[q].label() + ")");
            }
            match = q;
        }
        if (match == quotas.size()) {
            throw ValidationError("record \"" + records[i].id +
                                  "\" matches no stratum");
        }
        groups[match].push_back(i);
    }

    for (size_t q = 0; q < quotas.size(); ++q) {
        long observed = static_cast<long>(groups[q].size());
        if (observed != quotas[q].total) {
            throw ValidationError("stratum " + quotas[q].label() + ": declared total " +
                                  std::to_string(quotas[q].total) + " but corpus has " +
                                  std::to_string(observed));
        }
        if (quotas[q].target > observed) {
            throw ValidationError("stratum " + quotas[q].label() + ": target " +
                                  std::to_string(quotas[q].target) +
                                  " exceeds available " + std::to_string(observed));
        }
    }

    SplitMix64 rng(seed);
    std::vector<size_t> selected;
    for (size_t q = 0; q < quotas.size(); ++q) {
        std::vector<size_t>& pool = groups[q];
        size_t target = static_cast<size_t>(quotas[q].target);
        // Partial Fisher-Yates: the first `target` slots end up a uniform
        // sample without replacement.
        for (size_t i = 0; i < target; ++i) {
            size_t j = i + static_cast<size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        selected.insert(selected.end(), pool.begin(), pool.begin() + target);
    }
    std::sort(selected.begin(), selected.end());

    std::vector<ProblemRecord> out;
    out.reserve(selected.size());
    for (size_t i : selected) {
        out.push_back(records[i]);
    }
    return out;
}

}  // namespace decomp
