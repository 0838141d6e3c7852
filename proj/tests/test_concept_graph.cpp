#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "decomp/concept_graph.hpp"
#include "decomp/errors.hpp"
#include "decomp/rng.hpp"
#include "decomp/util.hpp"

using namespace decomp;

namespace {

TreeNode tag_node(const std::string& tag, std::vector<TreeNode> children = {}) {
    TreeNode n;
    n.record.id = tag;
    n.record.question = "q";
    n.record.chain_of_thought = "c";
    n.record.answer = "0";
    n.record.tag = tag;
    n.record.depth = 1;
    n.verification.status = VerifyStatus::verified;
    n.children = std::move(children);
    return n;
}

DecompositionTree tag_tree(std::vector<TreeNode> top) {
    DecompositionTree t;
    t.root.id = "root";
    t.root.question = "q";
    t.root.chain_of_thought = "c";
    t.root.answer = "0";
    t.children = std::move(top);
    return t;
}

ConceptGraph graph_of(std::vector<std::string> nodes,
                      std::vector<std::pair<std::string, std::string>> edges) {
    ConceptGraph g;
    for (auto& n : nodes) {
        g.nodes.insert(n);
        g.cluster_map[n] = n;
        g.members[n] = {n};
    }
    for (auto& e : edges) ++g.edges[e];
    return g;
}

// Straight-line restatement of the clustering rule, used as an oracle.
TagClustering reference_clustering(const std::map<std::string, int>& counts,
                                   const EmbeddingProvider& provider, double delta) {
    std::vector<std::pair<int, std::string>> keyed;
    for (const auto& [tag, count] : counts) keyed.push_back({-count, tag});
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::string> order;
    for (const auto& kv : keyed) order.push_back(kv.second);

    auto sim = [&](const std::string& x, const std::string& y) {
        std::vector<double> a = provider.embed(x);
        std::vector<double> b = provider.embed(y);
        double d = 0.0;
        for (size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
        return std::round(d * 1e12) / 1e12;
    };

    std::vector<std::string> reps;
    std::map<std::string, bool> taken;
    for (const auto& t : order) taken[t] = false;
    for (size_t i = 0; i < order.size(); ++i) {
        if (taken[order[i]]) continue;
        reps.push_back(order[i]);
        taken[order[i]] = true;
        for (size_t j = i + 1; j < order.size(); ++j) {
            if (!taken[order[j]] && sim(order[i], order[j]) >= delta) taken[order[j]] = true;
        }
    }
    TagClustering out;
    for (const auto& t : order) {
        bool is_rep = std::find(reps.begin(), reps.end(), t) != reps.end();
        if (is_rep) {
            out.cluster_map[t] = t;
        } else {
            std::string best;
            double best_sim = -2.0;
            for (const auto& r : reps) {
                double s = sim(t, r);
                if (s < delta) continue;
                if (s > best_sim || (s == best_sim && r < best)) {
                    best = r;
                    best_sim = s;
                }
            }
            REQUIRE(!best.empty());
            out.cluster_map[t] = best;
        }
    }
    for (const auto& [tag, rep] : out.cluster_map) out.members[rep].push_back(tag);
    for (auto& [rep, tags] : out.members) std::sort(tags.begin(), tags.end());
    return out;
}

// Exhaustive oracle: walk every path out of every zero-in-degree node.
std::map<std::string, int> brute_force_depths(const ConceptGraph& g) {
    std::map<std::string, std::vector<std::string>> adj;
    std::map<std::string, int> indeg;
    for (const auto& n : g.nodes) indeg[n] = 0;
    for (const auto& [e, c] : g.edges) {
        (void)c;
        adj[e.first].push_back(e.second);
        ++indeg[e.second];
    }
    std::map<std::string, int> depth;
    for (const auto& n : g.nodes) depth[n] = 0;
    auto walk = [&](auto&& self, const std::string& v, int len) -> void {
        depth[v] = std::max(depth[v], len);
        for (const auto& w : adj[v]) self(self, w, len + 1);
    };
    for (const auto& n : g.nodes) {
        if (indeg[n] == 0) walk(walk, n, 0);
    }
    return depth;
}

bool reaches(const ConceptGraph& g, const std::string& from, const std::string& to) {
    std::set<std::string> seen{from};
    std::vector<std::string> frontier{from};
    while (!frontier.empty()) {
        std::string v = frontier.back();
        frontier.pop_back();
        if (v == to) return true;
        for (const auto& [e, c] : g.edges) {
            (void)c;
            if (e.first == v && !seen.count(e.second)) {
                seen.insert(e.second);
                frontier.push_back(e.second);
            }
        }
    }
    return false;
}

}  // namespace

TEST_CASE("local embeddings are unit length, deterministic, and normalize spacing") {
    LocalHashEmbedding emb;
    CHECK(emb.dimension() == 256);
    CHECK(emb.kind() == "deterministic-local");
    for (const char* tag : {"GCD Calculation", "Addition", "x"}) {
        auto v = emb.embed(tag);
        REQUIRE(v.size() == 256);
        double sq = 0.0;
        for (double x : v) sq += x * x;
        CHECK(std::abs(sq - 1.0) < 1e-12);
        CHECK(v == emb.embed(tag));
    }
    CHECK(emb.embed("GCD Calculation") == emb.embed("  gcd   CALCULATION "));
    CHECK(LocalHashEmbedding(64).embed("Addition").size() == 64);
    CHECK_THROWS_AS(LocalHashEmbedding(0), ValidationError);
}

TEST_CASE("tags sharing one of two words sit exactly on the 0.5 boundary") {
    LocalHashEmbedding emb;
    auto a = emb.embed("GCD Calculation");
    auto b = emb.embed("GCD Property");
    CHECK(tag_similarity(a, b) == 0.5);
    CHECK(tag_similarity(a, emb.embed("GCD Calculation")) == 1.0);
    CHECK(tag_similarity(a, emb.embed("Fraction Simplification")) < 0.5);
    CHECK(tag_similarity(emb.embed("Addition"), emb.embed("Multiplication")) < 0.5);
    CHECK(tag_similarity(emb.embed("alpha"), emb.embed("beta")) == 0.0);
    CHECK(tag_similarity(a, emb.embed("")) == 0.0);  // empty text embeds to zero
    CHECK_THROWS_AS(cosine_similarity(a, LocalHashEmbedding(16).embed("x")),
                    ValidationError);
}

TEST_CASE("near-duplicate tags merge at the default local threshold") {
    LocalHashEmbedding emb;
    auto c = cluster_tags(std::vector<std::string>{"GCD Calculation", "GCD Property"}, emb, 0.5);
    CHECK(c.cluster_map.at("GCD Calculation") == "GCD Calculation");
    CHECK(c.cluster_map.at("GCD Property") == "GCD Calculation");
    CHECK(c.members.at("GCD Calculation") ==
          std::vector<std::string>{"GCD Calculation", "GCD Property"});
    CHECK(c.members.size() == 1);
}

TEST_CASE("the more frequent tag becomes the representative") {
    LocalHashEmbedding emb;
    std::map<std::string, int> counts{{"GCD Calculation", 1}, {"GCD Property", 3}};
    auto c = cluster_tags(counts, emb, 0.5);
    CHECK(c.cluster_map.at("GCD Calculation") == "GCD Property");
    CHECK(c.cluster_map.at("GCD Property") == "GCD Property");
}

TEST_CASE("threshold one keeps distinct tags apart") {
    LocalHashEmbedding emb;
    auto c = cluster_tags(std::vector<std::string>{"Addition", "Multiplication", "Exponentiation"},
                          emb, 1.0);
    CHECK(c.members.size() == 3);
    for (const auto& [tag, rep] : c.cluster_map) CHECK(tag == rep);
}

TEST_CASE("assignment goes to the most similar representative, not the first fit") {
    // Processing order is alpha, alpha beta beta, beta. The greedy pass has
    // "alpha" absorb "alpha beta beta" (similarity 0.447 at delta 0.4), but
    // the final assignment must hand it to "beta" (similarity 0.894).
    LocalHashEmbedding emb;
    auto c = cluster_tags(std::vector<std::string>{"alpha", "beta", "alpha beta beta"}, emb, 0.4);
    CHECK(c.cluster_map.at("alpha") == "alpha");
    CHECK(c.cluster_map.at("beta") == "beta");
    CHECK(c.cluster_map.at("alpha beta beta") == "beta");
    CHECK(c.members.at("beta") == std::vector<std::string>{"alpha beta beta", "beta"});
}

TEST_CASE("clustering the representatives again is the identity") {
    LocalHashEmbedding emb;
    for (double delta : {0.4, 0.5, 0.8}) {
        auto first = cluster_tags(
            std::vector<std::string>{"GCD Calculation", "GCD Property", "alpha", "beta",
                                     "alpha beta beta", "Fraction Simplification"},
            emb, delta);
        std::vector<std::string> reps;
        for (const auto& [rep, tags] : first.members) {
            (void)tags;
            reps.push_back(rep);
        }
        auto second = cluster_tags(reps, emb, delta);
        for (const auto& [tag, rep] : second.cluster_map) CHECK(tag == rep);
    }
}

TEST_CASE("clustering rejects thresholds outside the unit interval and empty input") {
    LocalHashEmbedding emb;
    for (double delta : {0.0, -0.2, 1.5}) {
        CHECK_THROWS_WITH_AS(cluster_tags(std::vector<std::string>{"A"}, emb, delta),
                             doctest::Contains("delta"), ValidationError);
    }
    CHECK_THROWS_AS(cluster_tags(std::vector<std::string>{}, emb, 0.5), ValidationError);
}

TEST_CASE("clustering matches a straight-line reference over random tag pools") {
    const std::vector<std::string> pool{
        "GCD Calculation",     "GCD Property",     "Fraction Simplification",
        "Fraction Addition",   "Addition",         "Multiplication",
        "Exponentiation",      "Factorization",    "Prime Factorization",
        "Modular Arithmetic",  "Modular Inverse",  "Angle Chasing"};
    LocalHashEmbedding emb;
    SplitMix64 rng(2026);
    for (int round = 0; round < 25; ++round) {
        std::map<std::string, int> counts;
        while (counts.size() < 6) {
            const std::string& tag = pool[static_cast<size_t>(rng.below(pool.size()))];
            if (!counts.count(tag)) counts[tag] = 1 + static_cast<int>(rng.below(4));
        }
        for (double delta : {0.3, 0.5, 0.8}) {
            CAPTURE(round);
            CAPTURE(delta);
            auto got = cluster_tags(counts, emb, delta);
            auto want = reference_clustering(counts, emb, delta);
            CHECK(got.cluster_map == want.cluster_map);
            CHECK(got.members == want.members);
        }
    }
}

TEST_CASE("raising the threshold never reduces the cluster count on the test pool") {
    const std::vector<std::string> pool{
        "GCD Calculation",     "GCD Property",     "Fraction Simplification",
        "Fraction Addition",   "Addition",         "Multiplication",
        "Exponentiation",      "Factorization",    "Prime Factorization",
        "Modular Arithmetic",  "Modular Inverse",  "Angle Chasing"};
    LocalHashEmbedding emb;
    size_t previous = 0;
    for (double delta : {0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0}) {
        auto c = cluster_tags(pool, emb, delta);
        CHECK(c.members.size() >= previous);
        previous = c.members.size();
    }
    CHECK(previous == pool.size());  // at delta 1.0 everything is a singleton
}

TEST_CASE("tree edges become concept edges between tagged nodes") {
    auto t1 = tag_tree({tag_node("A", {tag_node("B")})});
    auto g1 = build_raw_graph({t1});
    CHECK(g1.nodes == std::set<std::string>{"A", "B"});
    REQUIRE(g1.edges.size() == 1);
    CHECK(g1.edges.at({"A", "B"}) == 1);
    CHECK(g1.cluster_map.at("A") == "A");
    CHECK(g1.members.at("B") == std::vector<std::string>{"B"});
    CHECK(g1.depth.empty());

    // A child tagged like its parent adds no edge.
    auto t2 = tag_tree({tag_node("GCD", {tag_node("GCD")})});
    auto g2 = build_raw_graph({t2});
    CHECK(g2.nodes == std::set<std::string>{"GCD"});
    CHECK(g2.edges.empty());

    // Untagged children contribute nothing.
    TreeNode untagged = tag_node("ignored");
    untagged.record.tag.reset();
    auto g3 = build_raw_graph({tag_tree({tag_node("A", {untagged})})});
    CHECK(g3.nodes == std::set<std::string>{"A"});
    CHECK(g3.edges.empty());
}

TEST_CASE("edges deduplicate across trees while keeping a count") {
    auto t1 = tag_tree({tag_node("Summation", {tag_node("Addition")})});
    auto t2 = tag_tree({tag_node("Multiplication", {tag_node("Addition")})});
    auto t3 = tag_tree({tag_node("Summation", {tag_node("Addition")})});
    auto g = build_raw_graph({t1, t2, t3});
    CHECK(g.nodes == std::set<std::string>{"Addition", "Multiplication", "Summation"});
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges.at({"Summation", "Addition"}) == 2);
    CHECK(g.edges.at({"Multiplication", "Addition"}) == 1);

    auto occ = tag_occurrences({t1, t2, t3});
    CHECK(occ.at("Addition") == 3);
    CHECK(occ.at("Summation") == 2);
    CHECK(occ.at("Multiplication") == 1);
}

TEST_CASE("rewiring relabels, collapses parallel edges, and drops self-loops") {
    auto g = graph_of({"A", "A2", "B", "B2", "C", "D", "E", "F"},
                      {{"A", "B"},
                       {"A2", "B2"},
                       {"B", "C"},
                       {"B2", "C"},
                       {"C", "D"},
                       {"D", "E"},
                       {"E", "F"}});
    TagClustering clustering;
    for (const char* n : {"A", "A2"}) clustering.cluster_map[n] = "A";
    for (const char* n : {"B", "B2"}) clustering.cluster_map[n] = "B";
    for (const char* n : {"C", "D", "E", "F"}) clustering.cluster_map[n] = n;
    clustering.members = {{"A", {"A", "A2"}}, {"B", {"B", "B2"}}, {"C", {"C"}},
                          {"D", {"D"}},       {"E", {"E"}},       {"F", {"F"}}};

    auto out = apply_clustering(g, clustering);
    CHECK(out.nodes == std::set<std::string>{"A", "B", "C", "D", "E", "F"});
    REQUIRE(out.edges.size() == 5);
    CHECK(out.edges.at({"A", "B"}) == 2);
    CHECK(out.edges.at({"B", "C"}) == 2);
    CHECK(out.edges.at({"C", "D"}) == 1);
    CHECK(out.members.at("A") == std::vector<std::string>{"A", "A2"});

    // Both ends mapping to one representative turns the edge into a dropped
    // self-loop.
    auto loop = graph_of({"GCD", "GCD Calculation"}, {{"GCD", "GCD Calculation"}});
    TagClustering merge;
    merge.cluster_map = {{"GCD", "GCD Calculation"}, {"GCD Calculation", "GCD Calculation"}};
    merge.members = {{"GCD Calculation", {"GCD", "GCD Calculation"}}};
    auto merged = apply_clustering(loop, merge);
    CHECK(merged.nodes == std::set<std::string>{"GCD Calculation"});
    CHECK(merged.edges.empty());

    TagClustering partial;
    partial.cluster_map = {{"GCD", "GCD"}};
    CHECK_THROWS_WITH_AS(apply_clustering(loop, partial),
                         doctest::Contains("GCD Calculation"), ValidationError);
}

TEST_CASE("reachability between representatives survives rewiring") {
    SplitMix64 rng(404);
    for (int round = 0; round < 20; ++round) {
        std::vector<std::string> nodes;
        for (char c = 'a'; c <= 'j'; ++c) nodes.push_back(std::string(1, c));
        std::vector<std::pair<std::string, std::string>> edges;
        for (size_t i = 0; i < nodes.size(); ++i) {
            for (size_t j = 0; j < nodes.size(); ++j) {
                if (i != j && rng.below(100) < 20) edges.push_back({nodes[i], nodes[j]});
            }
        }
        auto raw = graph_of(nodes, edges);
        TagClustering clustering;
        for (size_t i = 0; i < nodes.size(); ++i) {
            std::string rep(1, static_cast<char>('a' + (i / 2) * 2));
            clustering.cluster_map[nodes[i]] = rep;
        }
        for (const auto& [tag, rep] : clustering.cluster_map) {
            clustering.members[rep].push_back(tag);
        }
        auto clustered = apply_clustering(raw, clustering);
        for (const auto& u : nodes) {
            for (const auto& v : nodes) {
                const std::string& ru = clustering.cluster_map.at(u);
                const std::string& rv = clustering.cluster_map.at(v);
                if (ru == rv) continue;
                if (reaches(raw, u, v)) {
                    CAPTURE(round);
                    CAPTURE(u);
                    CAPTURE(v);
                    CHECK(reaches(clustered, ru, rv));
                }
            }
        }
    }
}

TEST_CASE("depths follow the longest prerequisite chain") {
    auto chain = graph_of({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    CHECK(compute_depths(chain) == std::map<std::string, int>{{"A", 0}, {"B", 1}, {"C", 2}});

    auto diamond = graph_of({"A", "B", "C", "D", "E"},
                            {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}, {"A", "E"}});
    auto d = compute_depths(diamond);
    CHECK(d.at("A") == 0);
    CHECK(d.at("D") == 2);
    CHECK(d.at("E") == 1);

    auto lone = graph_of({"solo"}, {});
    CHECK(compute_depths(lone).at("solo") == 0);
}

TEST_CASE("cycles condense to one depth") {
    auto g = graph_of({"P", "A", "B"}, {{"P", "A"}, {"A", "B"}, {"B", "A"}});
    auto d = compute_depths(g);
    CHECK(d.at("P") == 0);
    CHECK(d.at("A") == 1);
    CHECK(d.at("B") == 1);

    // A free-floating two-cycle has no acyclic entry point, so it sits at 0.
    auto loop = graph_of({"X", "Y"}, {{"X", "Y"}, {"Y", "X"}});
    auto dl = compute_depths(loop);
    CHECK(dl.at("X") == 0);
    CHECK(dl.at("Y") == 0);
}

TEST_CASE("condensed depths equal exhaustive path search on random dags") {
    SplitMix64 rng(1234);
    for (int round = 0; round < 30; ++round) {
        int n = 3 + static_cast<int>(rng.below(8));
        std::vector<std::string> nodes;
        for (int i = 0; i < n; ++i) nodes.push_back("t" + std::to_string(i));
        std::vector<std::pair<std::string, std::string>> edges;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (rng.below(100) < 35) edges.push_back({nodes[static_cast<size_t>(i)],
                                                          nodes[static_cast<size_t>(j)]});
            }
        }
        auto g = graph_of(nodes, edges);
        CAPTURE(round);
        CHECK(compute_depths(g) == brute_force_depths(g));
    }
}

TEST_CASE("the full graph build clusters tags and scores depths") {
    auto t1 = tag_tree({tag_node("GCD Calculation", {tag_node("GCD Property")})});
    auto t2 = tag_tree({tag_node("Fraction Simplification", {tag_node("GCD Calculation")})});
    LocalHashEmbedding emb;
    auto g = build_concept_graph({t1, t2}, emb, 0.5);
    CHECK(g.nodes == std::set<std::string>{"Fraction Simplification", "GCD Calculation"});
    REQUIRE(g.edges.size() == 1);  // the intra-cluster edge became a self-loop
    CHECK(g.edges.at({"Fraction Simplification", "GCD Calculation"}) == 1);
    CHECK(g.depth.at("Fraction Simplification") == 0);
    CHECK(g.depth.at("GCD Calculation") == 1);
    CHECK(g.cluster_map.at("GCD Property") == "GCD Calculation");
    CHECK(build_concept_graph({}, emb, 0.5).nodes.empty());
}

TEST_CASE("dot export lists labeled nodes, rank groups, and edges") {
    auto g = graph_of({"A", "B"}, {{"A", "B"}});
    g.depth = {{"A", 0}, {"B", 1}};
    g.members["A"] = {"A", "A prime"};
    std::string dot = graph_to_dot(g);
    CHECK(dot.find("digraph concepts {") != std::string::npos);
    CHECK(dot.find("\"A\" [label=\"A\", tooltip=\"A, A prime\", rank=0];") != std::string::npos);
    CHECK(dot.find("\"B\" [label=\"B\", tooltip=\"B\", rank=1];") != std::string::npos);
    CHECK(dot.find("{ rank=same; \"A\"; }") != std::string::npos);
    CHECK(dot.find("\"A\" -> \"B\";") != std::string::npos);
    CHECK(dot == graph_to_dot(g));

    auto quoted = graph_of({"say \"hi\""}, {});
    CHECK(graph_to_dot(quoted).find("\"say \\\"hi\\\"\"") != std::string::npos);
}

TEST_CASE("graphs survive a save/load round trip") {
    auto t1 = tag_tree({tag_node("GCD Calculation", {tag_node("GCD Property")})});
    auto t2 = tag_tree({tag_node("Fraction Simplification", {tag_node("GCD Calculation")})});
    LocalHashEmbedding emb;
    auto g = build_concept_graph({t1, t2}, emb, 0.5);

    auto dir = std::filesystem::temp_directory_path() / "concept_graph_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "graph.json";
    save_graph(g, path);
    auto loaded = load_graph(path);
    CHECK(loaded == g);
    std::string first = read_text_file(path);
    save_graph(loaded, path);
    CHECK(read_text_file(path) == first);
    std::filesystem::remove_all(dir);

    nlohmann::json bad = graph_to_json(g);
    bad["surprise"] = 1;
    CHECK_THROWS_WITH_AS(graph_from_json(bad), doctest::Contains("surprise"), ValidationError);
    nlohmann::json missing = graph_to_json(g);
    missing.erase("depth");
    CHECK_THROWS_WITH_AS(graph_from_json(missing), doctest::Contains("depth"), ValidationError);
}
