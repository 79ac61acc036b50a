#include "egi/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace egi {

namespace {

void build_csr(Graph& g) {
    g.adj_offsets.assign(static_cast<std::size_t>(g.node_count) + 1, 0);
    for (const auto& [u, v] : g.edges) {
        (void)v;
        ++g.adj_offsets[static_cast<std::size_t>(u) + 1];
    }
    for (std::size_t i = 1; i < g.adj_offsets.size(); ++i) g.adj_offsets[i] += g.adj_offsets[i - 1];
    g.adj_targets.resize(g.edges.size());
    std::vector<int> cursor(g.adj_offsets.begin(), g.adj_offsets.end() - 1);
    for (const auto& [u, v] : g.edges) {
        g.adj_targets[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = v;
    }
}

}  // namespace

Graph from_edge_list(const std::vector<std::pair<int, int>>& pairs, bool directed) {
    if (pairs.empty()) {
        throw std::invalid_argument("from_edge_list: empty edge list");
    }
    int max_id = 0;
    for (const auto& [u, v] : pairs) {
        if (u < 0 || v < 0) {
            throw std::invalid_argument("from_edge_list: negative node id");
        }
        max_id = std::max({max_id, u, v});
    }
    std::set<std::pair<int, int>> arcs;
    for (const auto& [u, v] : pairs) {
        if (u == v) continue;  // self-loops are never stored
        arcs.emplace(u, v);
        if (!directed) arcs.emplace(v, u);
    }
    Graph g;
    g.node_count = max_id + 1;
    g.directed = directed;
    g.edges.assign(arcs.begin(), arcs.end());
    build_csr(g);
    return g;
}

int degree(const Graph& g, int v) {
    if (v < 0 || v >= g.node_count) {
        throw std::out_of_range("degree: node " + std::to_string(v) + " out of range [0," +
                                std::to_string(g.node_count) + ")");
    }
    return g.adj_offsets[static_cast<std::size_t>(v) + 1] - g.adj_offsets[static_cast<std::size_t>(v)];
}

EdgeListFile load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_edge_list: cannot open " + path);
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream ls(line);
        std::int64_t u, v;
        if (!(ls >> u >> v)) continue;
        raw.emplace_back(u, v);
    }
    if (raw.empty()) {
        throw std::runtime_error("load_edge_list: no edge records in " + path);
    }
    std::set<std::int64_t> ids;
    for (const auto& [u, v] : raw) {
        ids.insert(u);
        ids.insert(v);
    }
    EdgeListFile out;
    out.original_ids.assign(ids.begin(), ids.end());
    std::map<std::int64_t, int> remap;
    for (std::size_t i = 0; i < out.original_ids.size(); ++i) {
        remap[out.original_ids[i]] = static_cast<int>(i);
    }
    out.pairs.reserve(raw.size());
    for (const auto& [u, v] : raw) {
        out.pairs.emplace_back(remap[u], remap[v]);
    }
    out.record_count = raw.size();
    return out;
}

std::vector<int> load_labels(const std::string& path, const std::vector<std::int64_t>& original_ids) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_labels: cannot open " + path);
    }
    std::map<std::int64_t, int> remap;
    for (std::size_t i = 0; i < original_ids.size(); ++i) {
        remap[original_ids[i]] = static_cast<int>(i);
    }
    std::vector<int> labels(original_ids.size(), -1);
    std::string line;
    bool first_line = true;
    while (std::getline(in, line)) {
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream ls(line);
        std::string tok_node, tok_label;
        if (!(ls >> tok_node >> tok_label)) continue;
        std::int64_t node, label;
        auto rn = std::from_chars(tok_node.data(), tok_node.data() + tok_node.size(), node);
        auto rl = std::from_chars(tok_label.data(), tok_label.data() + tok_label.size(), label);
        bool numeric = rn.ec == std::errc() && rn.ptr == tok_node.data() + tok_node.size() &&
                       rl.ec == std::errc() && rl.ptr == tok_label.data() + tok_label.size();
        if (!numeric) {
            if (first_line) {  // single header line is tolerated
                first_line = false;
                continue;
            }
            throw std::runtime_error("load_labels: malformed line in " + path + ": " + line);
        }
        first_line = false;
        auto it = remap.find(node);
        if (it == remap.end()) {
            throw std::runtime_error("load_labels: label for unknown node " + std::to_string(node) +
                                     " in " + path);
        }
        labels[static_cast<std::size_t>(it->second)] = static_cast<int>(label);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) {
            throw std::runtime_error("load_labels: node " + std::to_string(original_ids[i]) +
                                     " has no label in " + path);
        }
    }
    return labels;
}

}  // namespace egi
