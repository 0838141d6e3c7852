#include <doctest.h>

#include <filesystem>
#include <string>

#include "decomp/corpus.hpp"
#include "decomp/errors.hpp"
#include "decomp/util.hpp"

using namespace decomp;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    auto dir = std::filesystem::temp_directory_path() / "decomp_corpus_test";
    std::filesystem::create_directories(dir);
    auto path = dir / name;
    write_text_file(path, content);
    return path;
}

ProblemRecord make_record(std::string id, std::string domain = "", std::string level = "") {
    ProblemRecord r;
    r.id = std::move(id);
    r.question = "q";
    r.chain_of_thought = "c";
    r.answer = "a";
    if (!domain.empty() || !level.empty()) {
        Stratum s;
        if (!domain.empty()) s.domain = domain;
        if (!level.empty()) s.level = level;
        r.stratum = s;
    }
    return r;
}

}  // namespace

TEST_CASE("record json uses a fixed key order and omits absent optionals") {
    ProblemRecord full;
    full.id = "r1.2";
    full.question = "Q";
    full.chain_of_thought = "C";
    full.answer = "A";
    full.tag = "T";
    full.depth = 1;
    full.parent_id = "r1";
    Stratum s;
    s.domain = "Algebra";
    s.level = "Level 1";
    full.stratum = s;
    CHECK(record_to_json(full).dump() ==
          R"({"id":"r1.2","question":"Q","chain_of_thought":"C","answer":"A",)"
          R"("tag":"T","depth":1,"parent_id":"r1",)"
          R"("stratum":{"domain":"Algebra","level":"Level 1"}})");

    ProblemRecord bare = make_record("r0");
    std::string bare_json = record_to_json(bare).dump();
    CHECK(bare_json == R"({"id":"r0","question":"q","chain_of_thought":"c","answer":"a","depth":0})");
    CHECK(bare_json.find("null") == std::string::npos);

    CHECK(record_from_json(nlohmann::json::parse(record_to_json(full).dump()), "x") == full);
    CHECK(record_from_json(nlohmann::json::parse(bare_json), "x") == bare);
}

TEST_CASE("load_corpus reads one record per line and skips blanks") {
    auto path = temp_file("small.jsonl",
        R"({"id":"a","question":"q1","chain_of_thought":"c1","answer":"1","depth":0})" "\n"
        "\n"
        R"({"id":"b","question":"q2","chain_of_thought":"c2","answer":"2","depth":0})" "\n");
    auto records = load_corpus(path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].id == "a");
    CHECK(records[1].id == "b");
    CHECK(records[1].answer == "2");
}

TEST_CASE("load_corpus reports the offending line for bad records") {
    auto missing = temp_file("missing.jsonl",
        R"({"id":"a","question":"q","chain_of_thought":"c","answer":"1","depth":0})" "\n"
        R"({"id":"b","chain_of_thought":"c","answer":"2","depth":0})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(missing),
                         doctest::Contains("line 2: missing field question"),
                         ValidationError);

    auto dup = temp_file("dup.jsonl",
        R"({"id":"a","question":"q","chain_of_thought":"c","answer":"1","depth":0})" "\n"
        R"({"id":"b","question":"q","chain_of_thought":"c","answer":"2","depth":0})" "\n"
        R"({"id":"a","question":"q","chain_of_thought":"c","answer":"3","depth":0})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(dup),
                         doctest::Contains("duplicate id \"a\" (lines 1 and 3)"),
                         ValidationError);

    auto malformed = temp_file("malformed.jsonl", "{\"id\": \n");
    CHECK_THROWS_WITH_AS(load_corpus(malformed), doctest::Contains("line 1"),
                         ValidationError);

    auto unknown = temp_file("unknown.jsonl",
        R"({"id":"a","question":"q","chain_of_thought":"c","answer":"1","depth":0,"extra":1})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(unknown), doctest::Contains("unknown field extra"),
                         ValidationError);
}

TEST_CASE("record validation ties depth, parent_id, and tag together") {
    ProblemRecord r = make_record("x");
    r.depth = 1;
    CHECK_THROWS_WITH_AS(validate_record(r, "w"), doctest::Contains("requires parent_id"),
                         ValidationError);
    r.tag = "T";
    CHECK_THROWS_WITH_AS(validate_record(r, "w"), doctest::Contains("requires parent_id"),
                         ValidationError);
    r.parent_id = "p";
    CHECK_NOTHROW(validate_record(r, "w"));
    r.depth = 0;
    CHECK_THROWS_WITH_AS(validate_record(r, "w"),
                         doctest::Contains("depth 0 record must not have parent_id"),
                         ValidationError);
    ProblemRecord untagged = make_record("y");
    untagged.depth = 2;
    untagged.parent_id = "p";
    CHECK_THROWS_WITH_AS(validate_record(untagged, "w"),
                         doctest::Contains("untagged record must have depth 0"),
                         ValidationError);
}

TEST_CASE("save and reload is byte-stable") {
    std::vector<ProblemRecord> records;
    records.push_back(make_record("a", "Algebra", "Level 1"));
    records.push_back(make_record("b", "Geometry"));
    records.push_back(make_record("c"));
    records[1].tag = "Area";
    records[1].depth = 1;
    records[1].parent_id = "a";

    auto dir = std::filesystem::temp_directory_path() / "decomp_corpus_test";
    auto path = dir / "roundtrip.jsonl";
    save_corpus(records, path);
    std::string first = read_text_file(path);
    auto reloaded = load_corpus(path);
    CHECK(reloaded == records);
    save_corpus(reloaded, path);
    CHECK(read_text_file(path) == first);
    CHECK(first == corpus_to_jsonl(records));
}

TEST_CASE("corpus_to_jsonl rejects duplicate ids") {
    std::vector<ProblemRecord> records = {make_record("a"), make_record("a")};
    CHECK_THROWS_WITH_AS(corpus_to_jsonl(records), doctest::Contains("duplicate id"),
                         ValidationError);
}

TEST_CASE("load_quotas parses entries and validates targets") {
    auto good = temp_file("quotas.json",
        R"([{"domain":"Algebra","total":4,"target":2},{"level":"Level 5","total":3,"target":1}])");
    auto quotas = load_quotas(good);
    REQUIRE(quotas.size() == 2);
    CHECK(quotas[0].domain == "Algebra");
    CHECK(!quotas[0].level);
    CHECK(quotas[0].total == 4);
    CHECK(quotas[0].target == 2);
    CHECK(quotas[0].label() == "domain=Algebra");
    CHECK(quotas[1].label() == "level=Level 5");

    auto bad = temp_file("quotas_bad.json", R"([{"domain":"X","total":2,"target":5}])");
    CHECK_THROWS_WITH_AS(load_quotas(bad), doctest::Contains("0 <= target <= total"),
                         ValidationError);
    auto unknown = temp_file("quotas_unknown.json", R"([{"domain":"X","total":2,"target":1,"share":0.5}])");
    CHECK_THROWS_WITH_AS(load_quotas(unknown), doctest::Contains("unknown field share"),
                         ValidationError);
}

TEST_CASE("stratified_sample with full targets returns the corpus unchanged") {
    std::vector<ProblemRecord> records;
    for (int i = 0; i < 4; ++i) records.push_back(make_record("a" + std::to_string(i), "A"));
    for (int i = 0; i < 3; ++i) records.push_back(make_record("b" + std::to_string(i), "B"));
    std::vector<StratumQuota> quotas(2);
    quotas[0].domain = "A";
    quotas[0].total = 4;
    quotas[0].target = 4;
    quotas[1].domain = "B";
    quotas[1].total = 3;
    quotas[1].target = 3;
    CHECK(stratified_sample(records, quotas, 123) == records);
}

TEST_CASE("stratified_sample draws the frozen subset for a fixed seed") {
    // Indices 0..3 are domain A, 4..6 domain B; one shared seeded stream
    // drives both strata in quota order.
    std::vector<ProblemRecord> records;
    for (int i = 0; i < 4; ++i) records.push_back(make_record("r" + std::to_string(i), "A"));
    for (int i = 4; i < 7; ++i) records.push_back(make_record("r" + std::to_string(i), "B"));
    std::vector<StratumQuota> quotas(2);
    quotas[0].domain = "A";
    quotas[0].total = 4;
    quotas[0].target = 2;
    quotas[1].domain = "B";
    quotas[1].total = 3;
    quotas[1].target = 1;

    auto sample = stratified_sample(records, quotas, 5);
    std::vector<std::string> ids;
    for (const auto& r : sample) ids.push_back(r.id);
    CHECK(ids == std::vector<std::string>{"r1", "r3", "r4"});
    CHECK(stratified_sample(records, quotas, 5) == sample);
    CHECK(stratified_sample(records, quotas, 6) != sample);
}

TEST_CASE("stratified_sample keeps source order within and across strata") {
    std::vector<ProblemRecord> records;
    const char* domains[] = {"B", "A", "B", "A", "B", "A", "B", "A"};
    for (int i = 0; i < 8; ++i) {
        records.push_back(make_record("r" + std::to_string(i), domains[i]));
    }
    std::vector<StratumQuota> quotas(2);
    quotas[0].domain = "A";
    quotas[0].total = 4;
    quotas[0].target = 3;
    quotas[1].domain = "B";
    quotas[1].total = 4;
    quotas[1].target = 3;
    auto sample = stratified_sample(records, quotas, 17);
    REQUIRE(sample.size() == 6);
    for (size_t i = 1; i < sample.size(); ++i) {
        int prev = std::stoi(sample[i - 1].id.substr(1));
        int cur = std::stoi(sample[i].id.substr(1));
        CHECK(prev < cur);
    }
}

TEST_CASE("stratified_sample rejects unmatched, double-matched, and miscounted corpora") {
    std::vector<ProblemRecord> records = {make_record("a", "A", "Level 1"),
                                          make_record("z")};
    std::vector<StratumQuota> quotas(1);
    quotas[0].domain = "A";
    quotas[0].total = 1;
    quotas[0].target = 1;
    CHECK_THROWS_WITH_AS(stratified_sample(records, quotas, 1),
                         doctest::Contains("matches no stratum"), ValidationError);

    records.pop_back();
    std::vector<StratumQuota> overlapping(2);
    overlapping[0].domain = "A";
    overlapping[0].total = 1;
    overlapping[0].target = 1;
    overlapping[1].level = "Level 1";
    overlapping[1].total = 1;
    overlapping[1].target = 1;
    CHECK_THROWS_WITH_AS(stratified_sample(records, overlapping, 1),
                         doctest::Contains("matches multiple strata"), ValidationError);

    std::vector<StratumQuota> miscounted(1);
    miscounted[0].domain = "A";
    miscounted[0].total = 5;
    miscounted[0].target = 1;
    CHECK_THROWS_WITH_AS(stratified_sample(records, miscounted, 1),
                         doctest::Contains("declared total 5 but corpus has 1"),
                         ValidationError);
}

TEST_CASE("every record is drawn near-uniformly across seeds") {
    std::vector<ProblemRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back(make_record("r" + std::to_string(i)));
    std::vector<StratumQuota> quotas(1);
    quotas[0].total = 10;
    quotas[0].target = 3;

    std::map<std::string, long> counts;
    for (uint64_t seed = 0; seed < 10000; ++seed) {
        for (const auto& r : stratified_sample(records, quotas, seed)) {
            counts[r.id]++;
        }
    }
    REQUIRE(counts.size() == 10);
    for (const auto& [id, c] : counts) {
        CHECK(std::abs(c - 3000) < 200);
    }
}

TEST_CASE("proportional domain quotas sample exact per-domain counts") {
    struct Row {
        const char* domain;
        long total;
        long target;
    };
    const Row rows[] = {
        {"Algebra", 1744, 84},
        {"Counting and Probability", 771, 36},
        {"Geometry", 870, 43},
        {"Intermediate Algebra", 1295, 63},
        {"Number Theory", 869, 41},
        {"Prealgebra", 1205, 58},
        {"Precalculus", 746, 35},
    };
    std::vector<ProblemRecord> records;
    std::vector<StratumQuota> quotas;
    int serial = 0;
    for (const Row& row : rows) {
        for (long i = 0; i < row.total; ++i) {
            records.push_back(make_record("p" + std::to_string(serial++), row.domain));
        }
        StratumQuota q;
        q.domain = row.domain;
        q.total = row.total;
        q.target = row.target;
        quotas.push_back(q);
    }
    REQUIRE(records.size() == 7500);

    auto sample = stratified_sample(records, quotas, 314159);
    CHECK(sample.size() == 360);
    std::map<std::string, long> by_domain;
    for (const auto& r : sample) by_domain[*r.stratum->domain]++;
    for (const Row& row : rows) {
        CHECK(by_domain[row.domain] == row.target);
    }
}

TEST_CASE("proportional level quotas sample exact per-level counts") {
    struct Row {
        const char* level;
        long total;
        long target;
    };
    const Row rows[] = {
        {"Level 1", 566, 26},  {"Level 2", 1348, 65}, {"Level 3", 1592, 77},
        {"Level 4", 1690, 81}, {"Level 5", 2304, 111},
    };
    std::vector<ProblemRecord> records;
    std::vector<StratumQuota> quotas;
    int serial = 0;
    for (const Row& row : rows) {
        for (long i = 0; i < row.total; ++i) {
            records.push_back(make_record("p" + std::to_string(serial++), "", row.level));
        }
        StratumQuota q;
        q.level = row.level;
        q.total = row.total;
        q.target = row.target;
        quotas.push_back(q);
    }
    REQUIRE(records.size() == 7500);

    auto sample = stratified_sample(records, quotas, 2718);
    CHECK(sample.size() == 360);
    std::map<std::string, long> by_level;
    for (const auto& r : sample) by_level[*r.stratum->level]++;
    for (const Row& row : rows) {
        CHECK(by_level[row.level] == row.target);
    }
}
