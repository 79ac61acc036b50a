#pragma once

// Seeded synthetic graph generators and dataset loaders.
//
// Two families are provided, both classic growth models:
//  - barabasi: preferential attachment. Growth starts from an (m+1)-node
//    clique; each new node attaches to m existing nodes chosen by repeated
//    degree-proportional sampling without replacement.
//  - forest_fire: each new node picks a uniform ambassador among existing
//    nodes and "burns" outward from it: from every burned node w, sample
//    x ~ Geometric(1-p_f) of w's unvisited out-neighbors (mean p_f/(1-p_f))
//    and y ~ Geometric(1-p_f*p_b) of w's unvisited in-neighbors
//    (mean p_f*p_b/(1-p_f*p_b), i.e. p_b acts as the backward burning ratio),
//    then recurse from the newly burned nodes (BFS order, global
//    visited-marking per episode). The new node links to every burned node;
//    arcs are kept directed during growth and symmetrized in the result.
//
// Determinism: an identical GenSpec produces a bit-identical Graph.

#include <cstdint>
#include <string>
#include <vector>

#include "egi/graph.hpp"

namespace egi {

enum class Family { barabasi, forest_fire };

struct GenSpec {
    Family family = Family::barabasi;
    int node_count = 100;
    int ba_m = 2;              // edges attached per new node (barabasi)
    double ff_forward = 0.4;   // forward burning probability (forest_fire)
    double ff_backward = 0.3;  // backward burning ratio (forest_fire)
    std::uint64_t seed = 0;
};

// Generate one undirected graph from the given parameters. Throws
// std::invalid_argument on out-of-range parameters (probabilities outside
// [0,1), ba_m < 1, node_count < ba_m + 1).
Graph generate(const GenSpec& spec);

// `count` graphs with seeds base_seed, base_seed+1, ..., base_seed+count-1.
std::vector<Graph> generate_suite(Family family, int count, GenSpec spec, std::uint64_t base_seed);

// A loaded real-world dataset: the deduplicated symmetrized graph (labels
// attached) plus raw-file statistics. Edge-list files in the wild repeat
// some records; `edge_records` preserves the published raw count while the
// Graph itself stores each undirected edge exactly once.
struct Dataset {
    Graph graph;
    std::size_t edge_records = 0;           // data lines in the edge file
    std::vector<std::int64_t> original_ids;  // dense id -> original id
};

// Load an undirected edge list plus per-node 4-class labels.
// Throws std::runtime_error on missing files or missing labels (naming the
// offending node).
Dataset load_airport(const std::string& edges_path, const std::string& labels_path);

}  // namespace egi
