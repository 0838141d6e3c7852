#include "decomp/curriculum.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "decomp/errors.hpp"
#include "decomp/rng.hpp"
#include "decomp/util.hpp"

namespace decomp {

CurriculumPlan partition(const std::vector<DifficultyAnnotation>& annotations, int k) {
    if (annotations.empty()) {
        throw ValidationError("partition: no annotations");
    }
    if (k < 1) {
        throw ValidationError("partition: stage count must be positive");
    }
    const int n = static_cast<int>(annotations.size());
    if (k > n) {
        throw ValidationError("partition: " + std::to_string(k) + " stages but only " +
                              std::to_string(n) + " records");
    }

    std::vector<const DifficultyAnnotation*> sorted;
    sorted.reserve(annotations.size());
    std::set<std::string> ids;
    for (const DifficultyAnnotation& a : annotations) {
        if (!ids.insert(a.record_id).second) {
            throw ValidationError("partition: duplicate record id " + a.record_id);
        }
        sorted.push_back(&a);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const DifficultyAnnotation* a, const DifficultyAnnotation* b) {
                  if (a->score != b->score) return a->score < b->score;
                  return a->record_id < b->record_id;
              });

    CurriculumPlan plan;
    plan.k_stages = k;
    const int base = n / k;
    const int extra = n % k;
    int cursor = 0;
    for (int i = 0; i < k; ++i) {
        const int size = base + (i < extra ? 1 : 0);
        StageEntry stage;
        stage.index = i + 1;
        stage.file = "stage_" + std::to_string(i + 1) + ".jsonl";
        stage.score_lo = sorted[static_cast<size_t>(cursor)]->score;
        stage.score_hi = sorted[static_cast<size_t>(cursor + size - 1)]->score;
        for (int j = 0; j < size; ++j) {
            stage.record_ids.push_back(sorted[static_cast<size_t>(cursor + j)]->record_id);
        }
        cursor += size;
        plan.stages.push_back(std::move(stage));
    }
    plan.breakpoints.push_back(plan.stages.front().score_lo);
    for (const StageEntry& stage : plan.stages) {
        plan.breakpoints.push_back(stage.score_hi);
    }
    return plan;
}

std::vector<std::filesystem::path> emit_manifests(const CurriculumPlan& plan,
                                                  const std::vector<ProblemRecord>& corpus,
                                                  const std::filesystem::path& out_dir,
                                                  double total_epochs, uint64_t seed) {
    if (plan.k_stages < 1 || plan.stages.empty()) {
        throw ValidationError("emit_manifests: empty plan");
    }
    if (!(total_epochs > 0.0)) {
        throw ValidationError("emit_manifests: total_epochs must be positive");
    }
    std::map<std::string, const ProblemRecord*> by_id;
    for (const ProblemRecord& r : corpus) by_id[r.id] = &r;

    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    std::vector<ProblemRecord> all_records;
    const double epochs_per_stage = total_epochs / plan.k_stages;

    nlohmann::ordered_json plan_json;
    plan_json["k"] = plan.k_stages;
    plan_json["stages"] = nlohmann::ordered_json::array();
    for (const StageEntry& stage : plan.stages) {
        std::vector<ProblemRecord> records;
        for (const std::string& id : stage.record_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw ValidationError("emit_manifests: record " + id + " not in corpus");
            }
            records.push_back(*it->second);
            all_records.push_back(*it->second);
        }
        const std::filesystem::path stage_path = out_dir / stage.file;
        save_corpus(records, stage_path);
        written.push_back(stage_path);

        nlohmann::ordered_json s;
        s["index"] = stage.index;
        s["file"] = stage.file;
        s["count"] = records.size();
        s["score_lo"] = stage.score_lo;
        s["score_hi"] = stage.score_hi;
        s["epochs"] = epochs_per_stage;
        plan_json["stages"].push_back(s);
    }
    plan_json["ordering"] = plan.ordering;
    plan_json["seed"] = seed;
    plan_json["early_stopping"] = true;
    plan_json["breakpoints"] = plan.breakpoints;
    plan_json["baseline"] = "baseline_shuffled.jsonl";

    const std::filesystem::path plan_path = out_dir / "plan.json";
    write_text_file(plan_path, plan_json.dump(2) + "\n");
    written.push_back(plan_path);

    SplitMix64 rng(seed);
    rng.shuffle(all_records);
    const std::filesystem::path baseline_path = out_dir / "baseline_shuffled.jsonl";
    save_corpus(all_records, baseline_path);
    written.push_back(baseline_path);
    return written;
}

}  // namespace decomp
