#pragma once

// Normalized ego-graph Laplacians, spectral norm, pairwise ego distance, and
// the structural-gap estimator between two graphs.
//
// Two distance paths coexist deliberately:
//
//  - ego_distance works on exact EgoGraph objects: canonical order, pad,
//    self-loop in-degree-normalized Laplacians, spectral norm of the
//    difference. It is the analytically clean object used by unit and
//    property tests.
//
//  - the gap estimator (egi_gap_full / egi_gap_sampled) uses sampled layered
//    egos ("flows"): per center pair, each side samples k rounds of up to
//    `cap` neighbors per node (uniform, without replacement, per-layer
//    dedup), nodes are deduped to their closest hop, hops are padded to the
//    pairwise maximum, and the normalized adjacency is built from the
//    sampled parent arcs with rows and columns of zero row-sum vanishing.
//    This is the construction whose magnitudes match the published
//    transferability numbers; see the project notes for the calibration.
//
// Both paths are deterministic: per-pair sample seeds are derived by hashing
// (seed, center_a, center_b), so results never depend on enumeration order
// or worker count.

#include <cstdint>
#include <vector>

#include "egi/ego.hpp"
#include "egi/graph.hpp"

namespace egi {

struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;  // row-major

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
};

struct GapEstimate {
    double value = 0.0;       // mean spectral distance, >= 0
    long pairs_used = 0;      // center pairs entering the mean
    double dispersion = 0.0;  // std over independent repetitions (0 = single run / full)
    int k = 0;                // hop count
    int source_index = 0;     // position of the source graph in gap_matrix input
};

// Self-loop in-degree-normalized Laplacian of the ego's reversed adjacency
// (arcs center->leaves plus both type_b directions plus self-loops on real
// slots): L = I - D^{-1/2} A D^{-1/2} with A[v][u] = 1 per arc u->v and
// D = diag(row sums). Rows/columns are hop-major; padding slots are all-zero
// (their self-loop is omitted). The ego should be canonically ordered (and
// padded when comparing two egos).
DenseMatrix in_degree_laplacian(const EgoGraph& ego);

// Largest singular value via power iteration on M^T M (relative tolerance
// 1e-10, at most 5000 iterations, deterministic all-ones start, seeded
// perturbation on stagnation). Throws std::invalid_argument for non-square
// or non-finite input.
double spectral_norm(const DenseMatrix& m);

// canonical_order + pad_pair + spectral_norm of the Laplacian difference.
// Throws std::invalid_argument when the hop counts differ.
double ego_distance(const EgoGraph& a, const EgoGraph& b);

// --- sampled-flow engine -------------------------------------------------

// Layered sampled ego: hops[p] holds original ids deduped to their closest
// hop and pre-sorted canonically (graph degree descending, id ascending);
// arcs are the sampled (farther, closer) parent edges by original id.
struct FlowEgo {
    std::vector<std::vector<int>> hops;
    std::vector<std::pair<int, int>> arcs;
};

// k sampling rounds from `center`; every frontier node keeps min(cap, deg)
// distinct neighbors. A node reached in several rounds is kept at its
// closest hop in the frame; its sampled arcs are kept regardless.
FlowEgo sample_flow_ego(const Graph& g, int center, int k, int cap, std::uint64_t seed);

// Spectral distance between two flow egos: hop-wise pairwise-max padding,
// normalized adjacency from sampled arcs (row = closer endpoint; rows and
// columns with zero row-sum vanish; unit diagonal elsewhere), spectral norm
// of the difference.
double flow_distance(const FlowEgo& a, const FlowEgo& b);

// Mean flow distance over all n*m ordered center pairs; deterministic
// (per-pair seeds derived from an internal fixed base), dispersion 0.
GapEstimate egi_gap_full(const Graph& ga, const Graph& gb, int k, int cap = 10);

// Mean flow distance over `pairs` uniformly sampled center pairs (with
// replacement), deterministic per seed; dispersion 0 (single run).
GapEstimate egi_gap_sampled(const Graph& ga, const Graph& gb, int k, long pairs, std::uint64_t seed,
                            int cap = 10);

// egi_gap_sampled repeated with seeds seed, seed+1, ...: value = mean of the
// run means, dispersion = population std over runs.
GapEstimate egi_gap_repeated(const Graph& ga, const Graph& gb, int k, long pairs,
                             std::uint64_t seed, int repeats, int cap = 10);

// One sampled estimate per source against the target, sorted ascending by
// value (best source first); source_index preserves the input position.
// Every source uses the same seed, so identical sources get equal estimates.
std::vector<GapEstimate> gap_matrix(const std::vector<Graph>& sources, const Graph& target, int k,
                                    long pairs, std::uint64_t seed, int cap = 10);

}  // namespace egi
