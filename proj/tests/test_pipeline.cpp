#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include "decomp/concept_graph.hpp"
#include "decomp/corpus.hpp"
#include "decomp/errors.hpp"
#include "decomp/pipeline.hpp"
#include "decomp/remote_embedding.hpp"
#include "decomp/util.hpp"

using decomp::AuthError;
using decomp::PipelineConfig;
using decomp::RemoteEmbedding;
using decomp::TransportError;
using decomp::ValidationError;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// The bundled ten-example fixture, with all outputs routed into `root`.
PipelineConfig fixture_config(const fs::path& root) {
    PipelineConfig cfg;
    cfg.teacher.mode = "scripted";
    cfg.teacher.script = std::string(FIXTURES_DIR) + "/fixture10_script.json";
    cfg.sampling.quotas = std::string(FIXTURES_DIR) + "/fixture10_quotas.json";
    cfg.sampling.seed = 17;
    cfg.paths.corpus_in = std::string(FIXTURES_DIR) + "/fixture10_corpus.jsonl";
    cfg.paths.sampled = (root / "sampled.jsonl").string();
    cfg.paths.tree_dir = (root / "trees").string();
    cfg.paths.graph_json = (root / "graph.json").string();
    cfg.paths.graph_dot = (root / "graph.dot").string();
    cfg.paths.annotations = (root / "annotations.jsonl").string();
    cfg.paths.plan_dir = (root / "plan").string();
    cfg.paths.run_log = (root / "run_log.jsonl").string();
    return cfg;
}

std::map<std::string, std::string> read_tree_of_files(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            out[fs::relative(entry.path(), root).string()] =
                decomp::read_text_file(entry.path());
        }
    }
    return out;
}

struct MockEmbeddingServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    template <typename Handler>
    explicit MockEmbeddingServer(Handler handler) {
        server.Post("/v1/embeddings", handler);
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~MockEmbeddingServer() {
        server.stop();
        thread.join();
    }

    RemoteEmbedding::Config config() const {
        RemoteEmbedding::Config cfg;
        cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
        cfg.model = "embed-test";
        cfg.timeout_seconds = 5.0;
        cfg.retry.max_attempts = 3;
        cfg.retry.backoff_base_seconds = 0.01;
        return cfg;
    }
};

std::string embedding_body(const std::vector<double>& vec) {
    json j;
    j["data"] = json::array({json{{"embedding", vec}}});
    return j.dump();
}

}  // namespace

TEST_CASE("make_teacher builds the scripted stack") {
    fs::path dir = fresh_dir("decomp_pipeline_teacher");

    decomp::TeacherRequest req;
    req.template_id = decomp::Template::solve_blind;
    req.slots = {{"subquestion", "What is 1+1?"}};
    json script = {{decomp::script_key(req), "The answer is $\\boxed{2}$."}};
    decomp::write_text_file(dir / "script.json", script.dump());

    decomp::TeacherConfig cfg;
    cfg.mode = "scripted";
    cfg.script = (dir / "script.json").string();

    SUBCASE("bare scripted client") {
        auto teacher = decomp::make_teacher(cfg);
        CHECK(teacher->complete(req).text == "The answer is $\\boxed{2}$.");
        CHECK(teacher->model_name() == "scripted");
    }

    SUBCASE("cache_dir wraps the client in the disk cache") {
        cfg.gateway.cache_dir = dir / "cache";
        auto teacher = decomp::make_teacher(cfg);
        CHECK(teacher->complete(req).from_cache == false);
        CHECK(teacher->complete(req).from_cache == true);
        CHECK(fs::exists(dir / "cache"));
    }

    SUBCASE("record_to captures traffic as a replayable script") {
        cfg.record_to = (dir / "recorded.json").string();
        auto teacher = decomp::make_teacher(cfg);
        teacher->complete(req);
        decomp::ScriptedTeacher replay(dir / "recorded.json");
        CHECK(replay.complete(req).text == "The answer is $\\boxed{2}$.");
    }

    SUBCASE("scripted mode without a script file is rejected") {
        cfg.script.clear();
        CHECK_THROWS_WITH_AS(decomp::make_teacher(cfg), doctest::Contains("no script file"),
                             ValidationError);
    }

    SUBCASE("http mode without an endpoint is rejected") {
        cfg.mode = "http";
        CHECK_THROWS_WITH_AS(decomp::make_teacher(cfg), doctest::Contains("no endpoint"),
                             ValidationError);
    }

    fs::remove_all(dir);
}

TEST_CASE("make_embedding picks the provider") {
    decomp::ClusteringConfig cfg;
    cfg.dimension = 64;
    auto local = decomp::make_embedding(cfg);
    CHECK(local->kind() == "deterministic-local");
    CHECK(local->dimension() == 64);

    cfg.embedding = "remote";
    CHECK_THROWS_WITH_AS(decomp::make_embedding(cfg), doctest::Contains("no endpoint"),
                         ValidationError);
    cfg.endpoint = "http://127.0.0.1:9";
    cfg.model = "embed";
    auto remote = decomp::make_embedding(cfg);
    CHECK(remote->kind() == "remote");
}

TEST_CASE("tree file names are padded, ordered, and filesystem safe") {
    CHECK(decomp::sanitize_for_filename("algebra_12") == "algebra_12");
    CHECK(decomp::sanitize_for_filename("a/b c:d*e") == "a_b_c_d_e");
    CHECK(decomp::sanitize_for_filename("Ex.1-2_3") == "Ex.1-2_3");

    CHECK(decomp::tree_file_path("trees", 0, "f01").string() == "trees/tree_00000_f01.json");
    CHECK(decomp::tree_file_path("trees", 123, "a b").string() ==
          "trees/tree_00123_a_b.json");
}

TEST_CASE("load_trees rejects missing or empty directories") {
    fs::path dir = fresh_dir("decomp_pipeline_trees");
    CHECK_THROWS_WITH_AS(decomp::load_trees(dir / "nope"), doctest::Contains("does not exist"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(decomp::load_trees(dir), doctest::Contains("no tree files"),
                         ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("decompose_input follows the sampling configuration") {
    PipelineConfig cfg;
    cfg.paths.corpus_in = "raw.jsonl";
    cfg.paths.sampled = "sampled.jsonl";
    CHECK(decomp::decompose_input(cfg) == fs::path("raw.jsonl"));
    cfg.sampling.quotas = "q.json";
    CHECK(decomp::decompose_input(cfg) == fs::path("sampled.jsonl"));
}

TEST_CASE("run_sample requires quotas") {
    PipelineConfig cfg;
    CHECK_THROWS_WITH_AS(decomp::run_sample(cfg), doctest::Contains("requires sampling.quotas"),
                         ValidationError);
}

TEST_CASE("stage-by-stage execution equals run_all") {
    fs::path dir_a = fresh_dir("decomp_pipeline_stages");
    fs::path dir_b = fresh_dir("decomp_pipeline_all");

    PipelineConfig cfg_a = fixture_config(dir_a);
    decomp::run_sample(cfg_a);
    decomp::run_decompose(cfg_a);
    decomp::run_graph(cfg_a);
    decomp::run_score(cfg_a);
    decomp::run_curriculum(cfg_a);

    PipelineConfig cfg_b = fixture_config(dir_b);
    decomp::run_all(cfg_b);

    std::map<std::string, std::string> files_a = read_tree_of_files(dir_a);
    std::map<std::string, std::string> files_b = read_tree_of_files(dir_b);
    REQUIRE(files_a.size() == files_b.size());
    for (const auto& [rel, text] : files_a) {
        REQUIRE(files_b.count(rel) == 1);
        CHECK(files_b.at(rel) == text);
    }
    CHECK(files_a.count("sampled.jsonl") == 1);
    CHECK(files_a.count("graph.json") == 1);
    CHECK(files_a.count("plan/plan.json") == 1);

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("decompose writes every tree before reporting aborted examples") {
    fs::path dir = fresh_dir("decomp_pipeline_abort");

    // Two records: the first is fully scripted, the second is unknown to the
    // script, so its decomposition aborts at the split call.
    std::vector<decomp::ProblemRecord> corpus =
        decomp::load_corpus(std::string(FIXTURES_DIR) + "/fixture10_corpus.jsonl");
    decomp::ProblemRecord stranger;
    stranger.id = "zz_unscripted";
    stranger.question = "A question the script has never seen.";
    stranger.chain_of_thought = "One step. Another step.";
    stranger.answer = "0";
    std::vector<decomp::ProblemRecord> two = {corpus.at(0), stranger};
    decomp::save_corpus(two, dir / "two.jsonl");

    PipelineConfig cfg = fixture_config(dir);
    cfg.sampling.quotas.clear();  // decompose the file directly
    cfg.paths.corpus_in = (dir / "two.jsonl").string();

    CHECK_THROWS_WITH_AS(decomp::run_decompose(cfg),
                         doctest::Contains("1 of 2 examples aborted"), TransportError);

    // The healthy tree, the aborted tree, and the run log all still exist.
    CHECK(fs::exists(dir / "trees" / "tree_00000_f01.json"));
    CHECK(fs::exists(dir / "trees" / "tree_00001_zz_unscripted.json"));
    CHECK(fs::exists(dir / "run_log.jsonl"));
    decomp::DecompositionTree aborted =
        decomp::load_tree(dir / "trees" / "tree_00001_zz_unscripted.json");
    REQUIRE(aborted.error.has_value());
    CHECK(aborted.error->find("no reply") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("remote embedding normalizes and caches nothing") {
    std::atomic<int> calls{0};
    MockEmbeddingServer mock([&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        json body = json::parse(req.body);
        CHECK(body.at("model") == "embed-test");
        CHECK(body.at("input").is_array());
        CHECK(body.at("input").at(0) == "gcd of two numbers");
        res.set_content(embedding_body({3.0, 0.0, 4.0}), "application/json");
    });

    RemoteEmbedding embedding(mock.config());
    std::vector<double> v = embedding.embed("gcd of two numbers");
    REQUIRE(v.size() == 3);
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == doctest::Approx(0.8));
    CHECK(embedding.dimension() == 3);
    CHECK(embedding.kind() == "remote");
    embedding.embed("gcd of two numbers");
    CHECK(calls.load() == 2);
}

TEST_CASE("remote embedding rejects a mid-run dimension change") {
    std::atomic<int> calls{0};
    MockEmbeddingServer mock([&](const httplib::Request&, httplib::Response& res) {
        int n = ++calls;
        res.set_content(embedding_body(n == 1 ? std::vector<double>{1.0, 0.0}
                                              : std::vector<double>{1.0, 0.0, 0.0}),
                        "application/json");
    });
    RemoteEmbedding embedding(mock.config());
    CHECK(embedding.embed("first").size() == 2);
    CHECK_THROWS_WITH_AS(embedding.embed("second"),
                         doctest::Contains("dimension changed mid-run"), ValidationError);
}

TEST_CASE("remote embedding retries transient failures and gives up cleanly") {
    SUBCASE("retry then success") {
        std::atomic<int> calls{0};
        MockEmbeddingServer mock([&](const httplib::Request&, httplib::Response& res) {
            if (++calls < 3) {
                res.status = 503;
                return;
            }
            res.set_content(embedding_body({1.0}), "application/json");
        });
        RemoteEmbedding embedding(mock.config());
        CHECK(embedding.embed("x").at(0) == doctest::Approx(1.0));
        CHECK(calls.load() == 3);
    }

    SUBCASE("persistent server errors exhaust the retry budget") {
        std::atomic<int> calls{0};
        MockEmbeddingServer mock([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 500;
        });
        RemoteEmbedding embedding(mock.config());
        CHECK_THROWS_WITH_AS(embedding.embed("x"), doctest::Contains("HTTP 500"),
                             TransportError);
        CHECK(calls.load() == 3);
    }

    SUBCASE("authentication failures are not retried") {
        std::atomic<int> calls{0};
        MockEmbeddingServer mock([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 401;
        });
        RemoteEmbedding embedding(mock.config());
        CHECK_THROWS_WITH_AS(embedding.embed("x"),
                             doctest::Contains("authentication rejected"), AuthError);
        CHECK(calls.load() == 1);
    }

    SUBCASE("malformed reply bodies are not retried") {
        std::atomic<int> calls{0};
        MockEmbeddingServer mock([&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.set_content("{\"data\": []}", "application/json");
        });
        RemoteEmbedding embedding(mock.config());
        CHECK_THROWS_WITH_AS(embedding.embed("x"), doctest::Contains("no embedding"),
                             TransportError);
        CHECK(calls.load() == 1);
    }
}

TEST_CASE("remote embedding sends the bearer token from its environment variable") {
    std::string seen_auth;
    MockEmbeddingServer mock([&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        res.set_content(embedding_body({1.0}), "application/json");
    });
    RemoteEmbedding::Config cfg = mock.config();
    cfg.api_key_env = "DECOMP_TEST_EMBED_KEY";
    setenv("DECOMP_TEST_EMBED_KEY", "sk-embed-123", 1);
    RemoteEmbedding embedding(cfg);
    embedding.embed("x");
    unsetenv("DECOMP_TEST_EMBED_KEY");
    CHECK(seen_auth == "Bearer sk-embed-123");
}

TEST_CASE("remote embedding validates its configuration") {
    RemoteEmbedding::Config cfg;
    cfg.endpoint = "http://127.0.0.1:9";
    CHECK_THROWS_WITH_AS(RemoteEmbedding{cfg}, doctest::Contains("model name"),
                         ValidationError);
    cfg.model = "m";
    cfg.endpoint = "ftp://weird";
    CHECK_THROWS_WITH_AS(RemoteEmbedding{cfg}, doctest::Contains("http(s)://"),
                         ValidationError);
}
