#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "decomp/corpus.hpp"
#include "decomp/difficulty.hpp"

namespace decomp {

struct StageEntry {
    int index = 0;  // 1-based
    std::vector<std::string> record_ids;
    double score_lo = 0.0;
    double score_hi = 0.0;
    std::string file;  // basename of the stage corpus
    bool operator==(const StageEntry&) const = default;
};

struct CurriculumPlan {
    int k_stages = 0;
    // k+1 non-decreasing values: the global minimum followed by every
    // stage's maximum score.
    std::vector<double> breakpoints;
    std::vector<StageEntry> stages;
    std::string ordering = "easy-to-hard";
    bool operator==(const CurriculumPlan&) const = default;
};

// Sorts by (score, record_id) and cuts into k contiguous rank bins whose
// sizes differ by at most one, larger bins first. Equal-count binning keeps
// heavy score ties inside one stage, which value-based quantile cuts cannot.
CurriculumPlan partition(const std::vector<DifficultyAnnotation>& annotations, int k);

// Writes stage_<i>.jsonl per stage, plan.json, and baseline_shuffled.jsonl
// (the same records in one seeded-shuffled file for A/B comparisons).
// Returns every path written. Each stage gets total_epochs / k.
std::vector<std::filesystem::path> emit_manifests(const CurriculumPlan& plan,
                                                  const std::vector<ProblemRecord>& corpus,
                                                  const std::filesystem::path& out_dir,
                                                  double total_epochs, uint64_t seed);

}  // namespace decomp
