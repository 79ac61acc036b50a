#pragma once

// Immutable graph container and text-format loaders.
//
// Graph stores a deduplicated, self-loop-free arc list sorted by
// (source, target) plus a CSR index for O(1) neighbor queries. Undirected
// graphs store both arc directions and maintain the symmetry invariant.
// All other modules consume this type read-only; instances are safe to share
// across threads after construction.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace egi {

struct Graph {
    int node_count = 0;
    bool directed = false;
    // Arcs sorted ascending by (source, target); for undirected graphs every
    // edge appears in both orientations. Never contains duplicates or
    // self-loops (layers that need self-loops add them locally).
    std::vector<std::pair<int, int>> edges;
    // Optional per-node class labels; empty when the graph is unlabeled.
    std::vector<int> labels;

    // CSR over `edges` (built by from_edge_list): neighbors of v are
    // adj_targets[adj_offsets[v] .. adj_offsets[v+1]).
    std::vector<int> adj_offsets;
    std::vector<int> adj_targets;

    std::span<const int> neighbors(int v) const {
        return {adj_targets.data() + adj_offsets[static_cast<std::size_t>(v)],
                adj_targets.data() + adj_offsets[static_cast<std::size_t>(v) + 1]};
    }

    // Number of distinct undirected edges (arc count / 2 for undirected).
    std::size_t undirected_edge_count() const {
        return directed ? edges.size() : edges.size() / 2;
    }
};

// Dense row-major feature matrix; row r annotates node r of the graph it
// accompanies.
struct FeatureMatrix {
    int rows = 0;
    int dim = 0;
    std::vector<double> values;  // rows * dim, row-major

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * dim + c]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * dim + c]; }
    const double* row(int r) const { return values.data() + static_cast<std::size_t>(r) * dim; }
};

// Build a Graph from raw id pairs. Node count becomes 1 + max id; duplicate
// pairs and self-loops are dropped; undirected input is symmetrized.
// Throws std::invalid_argument on empty input or negative ids.
Graph from_edge_list(const std::vector<std::pair<int, int>>& pairs, bool directed);

// Undirected degree (out-degree for directed graphs).
// Throws std::out_of_range for an invalid node id.
int degree(const Graph& g, int v);

// Result of parsing an edge-list text file: raw pairs in file order (after id
// remapping), the number of data records read, and the dense-id remap
// (sorted original ids; position = new id).
struct EdgeListFile {
    std::vector<std::pair<int, int>> pairs;
    std::size_t record_count = 0;
    std::vector<std::int64_t> original_ids;
};

// Parse "u v" per line; '#'-prefixed lines are skipped. Arbitrary ids are
// remapped to dense 0..n-1 by ascending original id.
// Throws std::runtime_error when the file is missing or holds no records.
EdgeListFile load_edge_list(const std::string& path);

// Parse "node label" per line into labels indexed by dense id, using the
// remap from load_edge_list. A single non-numeric header line is skipped.
// Throws std::runtime_error if any graph node is missing a label (the error
// names the node) or a label references an unknown node.
std::vector<int> load_labels(const std::string& path, const std::vector<std::int64_t>& original_ids);

}  // namespace egi
