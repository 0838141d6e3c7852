#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace decomp {

struct Stratum {
    std::optional<std::string> domain;
    std::optional<std::string> level;

    bool operator==(const Stratum&) const = default;
};

// One (question, chain-of-thought, answer) triple with provenance.
// depth 0 marks an original example; generated subproblems carry a concept
// tag and a parent_id, and sit at parent depth + 1.
struct ProblemRecord {
    std::string id;
    std::string question;
    std::string chain_of_thought;
    std::string answer;
    std::optional<std::string> tag;
    int depth = 0;
    std::optional<std::string> parent_id;
    std::optional<Stratum> stratum;

    bool operator==(const ProblemRecord&) const = default;
};

struct StratumQuota {
    std::optional<std::string> domain;
    std::optional<std::string> level;
    long total = 0;   // count in the source corpus
    long target = 0;  // count to sample

    std::string label() const;
};

// Fixed JSONL key order: id, question, chain_of_thought, answer, tag?,
// depth, parent_id?, stratum?. Absent optional fields are omitted, not null.
nlohmann::ordered_json record_to_json(const ProblemRecord& record);
ProblemRecord record_from_json(const nlohmann::json& j, const std::string& where);

// Checks the record invariants; `where` prefixes error messages
// (e.g. "line 3").
void validate_record(const ProblemRecord& record, const std::string& where);

std::vector<ProblemRecord> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::vector<ProblemRecord>& records,
                 const std::filesystem::path& path);
std::string corpus_to_jsonl(const std::vector<ProblemRecord>& records);

std::vector<StratumQuota> load_quotas(const std::filesystem::path& path);

// Uniform within-stratum sampling, seeded and portable (splitmix64 +
// partial Fisher-Yates). Output preserves source order. Every record must
// match exactly one quota; each quota's declared total must match the
// corpus and its target must be feasible.
std::vector<ProblemRecord> stratified_sample(const std::vector<ProblemRecord>& records,
                                             const std::vector<StratumQuota>& quotas,
                                             uint64_t seed);

}  // namespace decomp
