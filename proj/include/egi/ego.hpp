#pragma once

// k-hop ego-graph extraction, canonical ordering, padding, feature builders,
// and Weisfeiler-Lehman structural labels.
//
// An EgoGraph is the induced subgraph on all nodes within distance k of a
// center, partitioned into hops V_0..V_k (V_0 = {center}). Edges are typed:
// type_a edges connect consecutive hops (recorded closer->farther), type_b
// edges stay within one hop (recorded once, undirected). The edge list is
// BFS-ordered: all type_a edges for hop 1, then hop 2, ..., then type_b
// edges grouped by hop; inside each group, destination-then-source index
// order under the current within-hop node order.
//
// canonical_order fixes one deterministic within-hop node order so that two
// structurally identical egos produce identical matrices; pad_pair aligns
// two egos hop-by-hop with isolated padding slots (original id -1).

#include <cstdint>
#include <utility>
#include <vector>

#include "egi/graph.hpp"

namespace egi {

enum class EdgeKind { type_a, type_b };

struct TypedEdge {
    int p;      // hop of the destination endpoint
    int src_q;  // index in hop p-1 (type_a) or hop p (type_b)
    int dst_q;  // index in hop p
    EdgeKind kind;
};

struct EgoGraph {
    int center = 0;  // original graph id
    int k = 0;
    // hops[p] = original ids of hop-p members; -1 marks an isolated padding
    // slot added by pad_pair. Real members precede padding in each hop.
    std::vector<std::vector<int>> hops;
    std::vector<TypedEdge> edges_typed;

    // Total slot count (real + padding) and hop-major local indexing.
    int size() const {
        int s = 0;
        for (const auto& h : hops) s += static_cast<int>(h.size());
        return s;
    }
    int hop_offset(int p) const {
        int s = 0;
        for (int i = 0; i < p; ++i) s += static_cast<int>(hops[static_cast<std::size_t>(i)].size());
        return s;
    }
    int local_index(int p, int q) const { return hop_offset(p) + q; }

    // Arcs in local hop-major indices, oriented leaves->center: one arc
    // farther->closer per type_a edge, both directions per type_b edge, and
    // a self-loop on every real (non-padding) slot. The transpose of this
    // list is the reversed adjacency used by the in-degree Laplacian.
    std::vector<std::pair<int, int>> forward_arcs() const;
};

// One ego plus its feature rows in hop-major slot order (padding rows zero).
struct EgoSample {
    EgoGraph ego;
    FeatureMatrix features;
};

// Extract the k-hop ego-graph of `center`. With cap >= 0, at most cap
// neighbors of each expanded node are retained during BFS (sampled uniformly
// without replacement from the node's full neighbor list, seeded); the ego
// is the subgraph induced on the retained membership. cap < 0 means exact.
EgoGraph extract_ego(const Graph& g, int center, int k, int cap, std::uint64_t seed);
inline EgoGraph extract_ego(const Graph& g, int center, int k) {
    return extract_ego(g, center, k, -1, 0);
}

// Deterministic canonical form: within each hop, real nodes sorted by
// (within-ego degree descending, original id ascending), padding last;
// edges_typed regenerated. Idempotent, and invariant to the input's
// within-hop node order.
EgoGraph canonical_order(const EgoGraph& ego);

// Align two egos hop-by-hop: each hop is padded with isolated -1 slots to
// the pairwise maximum size. Throws std::invalid_argument when k differs.
std::pair<EgoGraph, EgoGraph> pad_pair(const EgoGraph& a, const EgoGraph& b);

// Restrict features to the ego's slots, hop-major; padding rows are zero.
EgoSample make_sample(const EgoGraph& ego, const FeatureMatrix& feats);

// Feature builders.
// degree_onehot: row v = one-hot at min(degree(v), dim-1).
FeatureMatrix degree_onehot(const Graph& g, int dim);
// constant_features: every row = (1/dim, ..., 1/dim).
FeatureMatrix constant_features(const Graph& g, int dim);
// random_features: i.i.d. uniform [0,1) entries, seeded.
FeatureMatrix random_features(const Graph& g, int dim, std::uint64_t seed);

// WL color refinement: initial color = degree; each round recolors by
// (own color, sorted multiset of neighbor colors); colors are compacted to
// 0..C-1 (assigned by sorted signature order, so output is deterministic).
// Two nodes share a label iff their round-`rounds` colors agree.
std::vector<int> wl_labels(const Graph& g, int rounds);

}  // namespace egi
