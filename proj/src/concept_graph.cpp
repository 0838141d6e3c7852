#include "decomp/concept_graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "decomp/errors.hpp"
#include "decomp/util.hpp"

namespace decomp {

namespace {

void l2_normalize(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq <= 0.0) return;
    double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

}  // namespace

LocalHashEmbedding::LocalHashEmbedding(int dimension) : dimension_(dimension) {
    if (dimension < 1) {
        throw ValidationError("embedding dimension must be positive");
    }
}

std::vector<double> LocalHashEmbedding::embed(const std::string& text) const {
    std::vector<double> acc(static_cast<size_t>(dimension_), 0.0);
    const std::string normalized = collapse_whitespace(to_lower_ascii(text));
    for (const std::string& word : split_words(normalized)) {
        std::vector<double> block(static_cast<size_t>(dimension_), 0.0);
        if (word.size() < 3) {
            block[fnv1a64(word) % static_cast<uint64_t>(dimension_)] += 1.0;
        } else {
            for (size_t i = 0; i + 3 <= word.size(); ++i) {
                std::string_view gram(word.data() + i, 3);
                block[fnv1a64(gram) % static_cast<uint64_t>(dimension_)] += 1.0;
            }
        }
        l2_normalize(block);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += block[i];
    }
    l2_normalize(acc);
    return acc;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw ValidationError("cosine_similarity: dimension mismatch");
    }
    double dot = 0.0;
    for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
}

double tag_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    return std::round(cosine_similarity(a, b) * 1e12) / 1e12;
}

namespace {

void walk_tags(const TreeNode& node, std::map<std::string, int>& counts) {
    if (node.record.tag) ++counts[*node.record.tag];
    for (const TreeNode& child : node.children) walk_tags(child, counts);
}

void walk_edges(const TreeNode& node, ConceptGraph& graph) {
    if (node.record.tag) graph.nodes.insert(*node.record.tag);
    for (const TreeNode& child : node.children) {
        if (node.record.tag && child.record.tag && *node.record.tag != *child.record.tag) {
            ++graph.edges[{*node.record.tag, *child.record.tag}];
        }
        walk_edges(child, graph);
    }
}

}  // namespace

std::map<std::string, int> tag_occurrences(const std::vector<DecompositionTree>& trees) {
    std::map<std::string, int> counts;
    for (const DecompositionTree& tree : trees) {
        for (const TreeNode& child : tree.children) walk_tags(child, counts);
    }
    return counts;
}

ConceptGraph build_raw_graph(const std::vector<DecompositionTree>& trees) {
    ConceptGraph graph;
    for (const DecompositionTree& tree : trees) {
        // The original problem is untagged, so top-level steps contribute
        // nodes but no incoming edges.
        for (const TreeNode& child : tree.children) walk_edges(child, graph);
    }
    for (const std::string& tag : graph.nodes) {
        graph.cluster_map[tag] = tag;
        graph.members[tag] = {tag};
    }
    return graph;
}

TagClustering cluster_tags(const std::map<std::string, int>& occurrences,
                           const EmbeddingProvider& provider, double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw ValidationError("clustering delta must lie in (0, 1]");
    }
    if (occurrences.empty()) {
        throw ValidationError("cluster_tags: no tags to cluster");
    }

    std::vector<std::string> order;
    order.reserve(occurrences.size());
    for (const auto& [tag, count] : occurrences) {
        if (count < 1) throw ValidationError("cluster_tags: non-positive count for " + tag);
        order.push_back(tag);
    }
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        int ca = occurrences.at(a);
        int cb = occurrences.at(b);
        if (ca != cb) return ca > cb;
        return a < b;
    });

    std::map<std::string, std::vector<double>> vectors;
    for (const std::string& tag : order) vectors[tag] = provider.embed(tag);

    // Pass 1: pick representatives greedily; each one claims every
    // still-unassigned tag within the threshold.
    std::vector<std::string> reps;
    std::set<std::string> assigned;
    for (size_t i = 0; i < order.size(); ++i) {
        const std::string& tag = order[i];
        if (assigned.count(tag)) continue;
        reps.push_back(tag);
        assigned.insert(tag);
        for (size_t j = i + 1; j < order.size(); ++j) {
            const std::string& other = order[j];
            if (assigned.count(other)) continue;
            if (tag_similarity(vectors.at(tag), vectors.at(other)) >= delta) {
                assigned.insert(other);
            }
        }
    }

    // Pass 2: final assignment is the highest-similarity representative at
    // or above the threshold, ties to the lexicographically smaller one.
    TagClustering out;
    std::set<std::string> rep_set(reps.begin(), reps.end());
    for (const std::string& tag : order) {
        if (rep_set.count(tag)) {
            out.cluster_map[tag] = tag;
            continue;
        }
        std::string best;
        double best_sim = -1.0;
        for (const std::string& rep : reps) {
            double sim = tag_similarity(vectors.at(tag), vectors.at(rep));
            if (sim < delta) continue;
            if (sim > best_sim || (sim == best_sim && rep < best)) {
                best = rep;
                best_sim = sim;
            }
        }
        if (best.empty()) {
            // Cannot happen: the greedy pass only marked the tag assigned
            // because some representative cleared the threshold.
            throw Error("cluster_tags: no representative for " + tag);
        }
        out.cluster_map[tag] = best;
    }
    for (const auto& [tag, rep] : out.cluster_map) {
        out.members[rep].push_back(tag);
    }
    for (auto& [rep, tags] : out.members) {
        std::sort(tags.begin(), tags.end());
    }
    return out;
}

TagClustering cluster_tags(const std::vector<std::string>& tags,
                           const EmbeddingProvider& provider, double delta) {
    std::map<std::string, int> occurrences;
    for (const std::string& tag : tags) ++occurrences[tag];
    return cluster_tags(occurrences, provider, delta);
}

ConceptGraph apply_clustering(const ConceptGraph& graph, const TagClustering& clustering) {
    ConceptGraph out;
    for (const std::string& tag : graph.nodes) {
        auto it = clustering.cluster_map.find(tag);
        if (it == clustering.cluster_map.end()) {
            throw ValidationError("apply_clustering: no cluster for tag " + tag);
        }
        out.nodes.insert(it->second);
    }
    for (const auto& [edge, count] : graph.edges) {
        const std::string& u = clustering.cluster_map.at(edge.first);
        const std::string& v = clustering.cluster_map.at(edge.second);
        if (u == v) continue;
        out.edges[{u, v}] += count;
    }
    out.cluster_map = clustering.cluster_map;
    out.members = clustering.members;
    return out;
}

namespace {

// Iterative Tarjan; returns the component index of every node, components
// numbered in reverse topological order of discovery.
std::vector<int> strongly_connected_components(int n, const std::vector<std::vector<int>>& adj,
                                               int& component_count) {
    std::vector<int> index(n, -1);
    std::vector<int> lowlink(n, 0);
    std::vector<int> comp(n, -1);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int next_index = 0;
    component_count = 0;

    struct Frame {
        int node;
        size_t next_edge;
    };
    for (int start = 0; start < n; ++start) {
        if (index[start] != -1) continue;
        std::vector<Frame> frames{{start, 0}};
        index[start] = lowlink[start] = next_index++;
        stack.push_back(start);
        on_stack[start] = true;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.next_edge < adj[f.node].size()) {
                int w = adj[f.node][f.next_edge++];
                if (index[w] == -1) {
                    index[w] = lowlink[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    lowlink[f.node] = std::min(lowlink[f.node], index[w]);
                }
            } else {
                int v = f.node;
                frames.pop_back();
                if (!frames.empty()) {
                    lowlink[frames.back().node] = std::min(lowlink[frames.back().node], lowlink[v]);
                }
                if (lowlink[v] == index[v]) {
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp[w] = component_count;
                        if (w == v) break;
                    }
                    ++component_count;
                }
            }
        }
    }
    return comp;
}

}  // namespace

std::map<std::string, int> compute_depths(const ConceptGraph& graph) {
    std::vector<std::string> names(graph.nodes.begin(), graph.nodes.end());
    std::map<std::string, int> id_of;
    for (size_t i = 0; i < names.size(); ++i) id_of[names[i]] = static_cast<int>(i);
    const int n = static_cast<int>(names.size());

    std::vector<std::vector<int>> adj(n);
    for (const auto& [edge, count] : graph.edges) {
        (void)count;
        adj[id_of.at(edge.first)].push_back(id_of.at(edge.second));
    }

    int comp_count = 0;
    std::vector<int> comp = strongly_connected_components(n, adj, comp_count);

    std::set<std::pair<int, int>> comp_edges;
    for (const auto& [edge, count] : graph.edges) {
        (void)count;
        int cu = comp[id_of.at(edge.first)];
        int cv = comp[id_of.at(edge.second)];
        if (cu != cv) comp_edges.insert({cu, cv});
    }

    std::vector<std::vector<int>> comp_adj(comp_count);
    std::vector<int> in_degree(comp_count, 0);
    for (const auto& [cu, cv] : comp_edges) {
        comp_adj[cu].push_back(cv);
        ++in_degree[cv];
    }

    std::vector<int> depth(comp_count, 0);
    std::vector<int> ready;
    for (int c = 0; c < comp_count; ++c) {
        if (in_degree[c] == 0) ready.push_back(c);
    }
    while (!ready.empty()) {
        int c = ready.back();
        ready.pop_back();
        for (int d : comp_adj[c]) {
            depth[d] = std::max(depth[d], depth[c] + 1);
            if (--in_degree[d] == 0) ready.push_back(d);
        }
    }

    std::map<std::string, int> out;
    for (int v = 0; v < n; ++v) out[names[static_cast<size_t>(v)]] = depth[comp[v]];
    return out;
}

ConceptGraph build_concept_graph(const std::vector<DecompositionTree>& trees,
                                 const EmbeddingProvider& provider, double delta) {
    ConceptGraph raw = build_raw_graph(trees);
    if (raw.nodes.empty()) {
        return raw;
    }
    TagClustering clustering = cluster_tags(tag_occurrences(trees), provider, delta);
    ConceptGraph graph = apply_clustering(raw, clustering);
    graph.depth = compute_depths(graph);
    return graph;
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\' || c == '"') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::string graph_to_dot(const ConceptGraph& graph) {
    std::ostringstream out;
    out << "digraph concepts {\n";
    out << "  rankdir=TB;\n";
    std::map<int, std::vector<std::string>> by_depth;
    for (const std::string& node : graph.nodes) {
        auto it = graph.depth.find(node);
        int d = it == graph.depth.end() ? 0 : it->second;
        by_depth[d].push_back(node);
        std::string tooltip;
        auto mem = graph.members.find(node);
        if (mem != graph.members.end()) {
            for (const std::string& m : mem->second) {
                if (!tooltip.empty()) tooltip += ", ";
                tooltip += m;
            }
        } else {
            tooltip = node;
        }
        out << "  \"" << dot_escape(node) << "\" [label=\"" << dot_escape(node)
            << "\", tooltip=\"" << dot_escape(tooltip) << "\", rank=" << d << "];\n";
    }
    for (const auto& [d, nodes] : by_depth) {
        out << "  { rank=same;";
        for (const std::string& node : nodes) out << " \"" << dot_escape(node) << "\";";
        out << " }\n";
    }
    for (const auto& [edge, count] : graph.edges) {
        (void)count;
        out << "  \"" << dot_escape(edge.first) << "\" -> \"" << dot_escape(edge.second)
            << "\";\n";
    }
    out << "}\n";
    return out.str();
}

nlohmann::ordered_json graph_to_json(const ConceptGraph& graph) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const std::string& node : graph.nodes) j["nodes"].push_back(node);
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& [edge, count] : graph.edges) {
        nlohmann::ordered_json e;
        e["parent"] = edge.first;
        e["child"] = edge.second;
        e["count"] = count;
        j["edges"].push_back(e);
    }
    j["depth"] = nlohmann::ordered_json::object();
    for (const auto& [node, d] : graph.depth) j["depth"][node] = d;
    j["cluster_map"] = nlohmann::ordered_json::object();
    for (const auto& [tag, rep] : graph.cluster_map) j["cluster_map"][tag] = rep;
    return j;
}

ConceptGraph graph_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("graph json: expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "nodes" && key != "edges" && key != "depth" && key != "cluster_map") {
            throw ValidationError("graph json: unknown field " + key);
        }
    }
    for (const char* key : {"nodes", "edges", "depth", "cluster_map"}) {
        if (!j.contains(key)) throw ValidationError(std::string("graph json: missing field ") + key);
    }
    ConceptGraph graph;
    for (const auto& node : j.at("nodes")) {
        graph.nodes.insert(node.get<std::string>());
    }
    for (const auto& e : j.at("edges")) {
        graph.edges[{e.at("parent").get<std::string>(), e.at("child").get<std::string>()}] =
            e.at("count").get<int>();
    }
    for (const auto& [node, d] : j.at("depth").items()) {
        graph.depth[node] = d.get<int>();
    }
    for (const auto& [tag, rep] : j.at("cluster_map").items()) {
        graph.cluster_map[tag] = rep.get<std::string>();
        graph.members[rep.get<std::string>()].push_back(tag);
    }
    for (auto& [rep, tags] : graph.members) {
        std::sort(tags.begin(), tags.end());
    }
    return graph;
}

void save_graph(const ConceptGraph& graph, const std::filesystem::path& path) {
    write_text_file(path, graph_to_json(graph).dump(2) + "\n");
}

ConceptGraph load_graph(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("graph file " + path.string() + ": " + e.what());
    }
    return graph_from_json(j);
}

}  // namespace decomp
