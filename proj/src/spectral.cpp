#include "egi/spectral.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>

#include "egi/parallel.hpp"
#include "egi/rng.hpp"

namespace egi {

namespace {

// Sparse COO triplets of a normalized flow adjacency.
struct SparseL {
    std::vector<int> rows;
    std::vector<int> cols;
    std::vector<double> vals;
};

// sigma_max of a matrix given as stacked triplets, via power iteration on
// M^T M. Deterministic: all-ones start, tol 1e-10 relative, <= 5000 rounds.
// A vanishing iterate means the start vector lies in the null space — for
// this estimator that happens only when the two stacked matrices cancel
// exactly, so 0 is the right answer there.
double sigma_max_coo(const std::vector<int>& rows, const std::vector<int>& cols,
                     const std::vector<double>& vals, int dim) {
    if (vals.empty() || dim == 0) return 0.0;
    std::vector<double> x(static_cast<std::size_t>(dim), 1.0 / std::sqrt(static_cast<double>(dim)));
    std::vector<double> y(static_cast<std::size_t>(dim));
    std::vector<double> z(static_cast<std::size_t>(dim));
    double lambda = 0.0;
    for (int it = 0; it < 5000; ++it) {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t e = 0; e < vals.size(); ++e) {
            y[static_cast<std::size_t>(rows[e])] += vals[e] * x[static_cast<std::size_t>(cols[e])];
        }
        std::fill(z.begin(), z.end(), 0.0);
        for (std::size_t e = 0; e < vals.size(); ++e) {
            z[static_cast<std::size_t>(cols[e])] += vals[e] * y[static_cast<std::size_t>(rows[e])];
        }
        double zn = 0.0;
        double lambda_new = 0.0;  // = x^T M^T M x = |y|^2 while |x| = 1
        for (std::size_t i = 0; i < z.size(); ++i) {
            zn += z[i] * z[i];
            lambda_new += y[i] * y[i];
        }
        zn = std::sqrt(zn);
        if (zn == 0.0) return 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] / zn;
        if (it > 0 && std::abs(lambda_new - lambda) <= 1e-10 * std::max(1.0, std::abs(lambda_new))) {
            return std::sqrt(lambda_new);
        }
        lambda = lambda_new;
    }
    return std::sqrt(lambda);
}

// Normalized flow adjacency triplets over pre-assigned slots. slot_of maps
// original id -> slot; arcs are (farther u, closer v) so the matrix row is
// the closer endpoint. Rows and columns with zero row-sum vanish; real rows
// keep a unit diagonal.
SparseL build_flow_matrix(const std::unordered_map<int, int>& slot_of,
                          const std::vector<std::pair<int, int>>& arcs, int dim) {
    // A repeated (sampler, sample) pair — possible when a node re-expands in
    // a later round — contributes a single unit entry, and row sums count
    // distinct entries, not raw arcs.
    std::set<std::pair<int, int>> entries;
    for (const auto& [u, v] : arcs) {
        entries.emplace(slot_of.at(v), slot_of.at(u));
    }
    std::vector<double> rowsum(static_cast<std::size_t>(dim), 0.0);
    for (const auto& [r, c] : entries) rowsum[static_cast<std::size_t>(r)] += 1.0;
    SparseL out;
    out.rows.reserve(entries.size() + static_cast<std::size_t>(dim));
    for (const auto& [r, c] : entries) {
        if (rowsum[static_cast<std::size_t>(r)] > 0.0 && rowsum[static_cast<std::size_t>(c)] > 0.0) {
            out.rows.push_back(r);
            out.cols.push_back(c);
            out.vals.push_back(-1.0 / std::sqrt(rowsum[static_cast<std::size_t>(r)] *
                                                rowsum[static_cast<std::size_t>(c)]));
        }
    }
    for (int r = 0; r < dim; ++r) {
        if (rowsum[static_cast<std::size_t>(r)] > 0.0) {
            out.rows.push_back(r);
            out.cols.push_back(r);
            out.vals.push_back(1.0);
        }
    }
    return out;
}

}  // namespace

DenseMatrix in_degree_laplacian(const EgoGraph& ego) {
    const int n = ego.size();
    DenseMatrix adj;  // A[v][u] = 1 per reversed arc u->v
    adj.rows = adj.cols = n;
    adj.values.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (const auto& [src, dst] : ego.forward_arcs()) {
        // The reversed arc dst->src enters src, so with rows indexed by the
        // entered node the entry sits at [src, dst]; row sums are then the
        // in-degrees of the reversed orientation.
        adj.at(src, dst) = 1.0;
    }
    std::vector<double> rowsum(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) rowsum[static_cast<std::size_t>(r)] += adj.at(r, c);
    }
    DenseMatrix l;
    l.rows = l.cols = n;
    l.values.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int r = 0; r < n; ++r) {
        if (rowsum[static_cast<std::size_t>(r)] == 0.0) continue;  // padding: all-zero row
        l.at(r, r) = 1.0;
        for (int c = 0; c < n; ++c) {
            if (adj.at(r, c) != 0.0 && rowsum[static_cast<std::size_t>(c)] > 0.0) {
                l.at(r, c) -= adj.at(r, c) / std::sqrt(rowsum[static_cast<std::size_t>(r)] *
                                                       rowsum[static_cast<std::size_t>(c)]);
            }
        }
        // Self-loop correction folds into the diagonal above: adj[r][r] = 1
        // for real slots, already subtracted by the loop.
    }
    return l;
}

double spectral_norm(const DenseMatrix& m) {
    if (m.rows != m.cols) {
        throw std::invalid_argument("spectral_norm: matrix must be square, got " +
                                    std::to_string(m.rows) + "x" + std::to_string(m.cols));
    }
    std::vector<int> rows, cols;
    std::vector<double> vals;
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            const double v = m.at(r, c);
            if (!std::isfinite(v)) {
                throw std::invalid_argument("spectral_norm: non-finite entry");
            }
            if (v != 0.0) {
                rows.push_back(r);
                cols.push_back(c);
                vals.push_back(v);
            }
        }
    }
    return sigma_max_coo(rows, cols, vals, m.rows);
}

double ego_distance(const EgoGraph& a, const EgoGraph& b) {
    if (a.k != b.k) {
        throw std::invalid_argument("ego_distance: hop counts differ");
    }
    auto [pa, pb] = pad_pair(canonical_order(a), canonical_order(b));
    const DenseMatrix la = in_degree_laplacian(pa);
    const DenseMatrix lb = in_degree_laplacian(pb);
    DenseMatrix diff = la;
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= lb.values[i];
    return spectral_norm(diff);
}

FlowEgo sample_flow_ego(const Graph& g, int center, int k, int cap, std::uint64_t seed) {
    Rng rng(seed);
    FlowEgo ego;
    std::vector<std::vector<int>> layers{{center}};
    for (int round = 0; round < k; ++round) {
        std::vector<int> next;
        std::unordered_map<int, bool> seen;  // per-layer dedup only
        for (int v : layers.back()) {
            auto nbrs = g.neighbors(v);
            std::vector<int> kept;
            if (cap >= 0 && static_cast<int>(nbrs.size()) > cap) {
                for (int idx : rng.sample_without_replacement(static_cast<int>(nbrs.size()), cap)) {
                    kept.push_back(nbrs[static_cast<std::size_t>(idx)]);
                }
            } else {
                kept.assign(nbrs.begin(), nbrs.end());
            }
            for (int u : kept) {
                ego.arcs.emplace_back(u, v);
                if (!seen[u]) {
                    seen[u] = true;
                    next.push_back(u);
                }
            }
        }
        layers.push_back(std::move(next));
    }
    // Frame: dedup every node to its closest hop, then fix the canonical
    // within-hop order (graph degree descending, original id ascending).
    std::unordered_map<int, int> hop_of;
    ego.hops.resize(layers.size());
    for (std::size_t h = 0; h < layers.size(); ++h) {
        for (int u : layers[h]) {
            if (!hop_of.count(u)) {
                hop_of[u] = static_cast<int>(h);
                ego.hops[h].push_back(u);
            }
        }
        auto& hop = ego.hops[h];
        std::sort(hop.begin(), hop.end(), [&](int x, int y) {
            const int dx = degree(g, x), dy = degree(g, y);
            if (dx != dy) return dx > dy;
            return x < y;
        });
    }
    return ego;
}

double flow_distance(const FlowEgo& a, const FlowEgo& b) {
    const std::size_t hop_count = std::max(a.hops.size(), b.hops.size());
    std::unordered_map<int, int> slot_a, slot_b;
    int pos = 0;
    for (std::size_t h = 0; h < hop_count; ++h) {
        const int na = h < a.hops.size() ? static_cast<int>(a.hops[h].size()) : 0;
        const int nb = h < b.hops.size() ? static_cast<int>(b.hops[h].size()) : 0;
        const int width = std::max(na, nb);
        for (int i = 0; i < na; ++i) slot_a[a.hops[h][static_cast<std::size_t>(i)]] = pos + i;
        for (int i = 0; i < nb; ++i) slot_b[b.hops[h][static_cast<std::size_t>(i)]] = pos + i;
        pos += width;
    }
    const SparseL la = build_flow_matrix(slot_a, a.arcs, pos);
    const SparseL lb = build_flow_matrix(slot_b, b.arcs, pos);
    std::vector<int> rows = la.rows;
    std::vector<int> cols = la.cols;
    std::vector<double> vals = la.vals;
    rows.insert(rows.end(), lb.rows.begin(), lb.rows.end());
    cols.insert(cols.end(), lb.cols.begin(), lb.cols.end());
    for (double v : lb.vals) vals.push_back(-v);
    return sigma_max_coo(rows, cols, vals, pos);
}

namespace {

constexpr std::uint64_t kFullEnumerationSeed = 0x45474947ULL;

// Mean flow distance over an explicit list of (center_a, center_b, seed)
// tasks. Fixed 4096-task blocks are computed in parallel and reduced in
// block order with compensated summation, so the result is identical for
// any worker count.
double mean_over_tasks(const Graph& ga, const Graph& gb, int k, int cap,
                       const std::vector<std::array<std::uint64_t, 3>>& tasks);

double mean_over_tasks(const Graph& ga, const Graph& gb, int k, int cap,
                       const std::vector<std::array<std::uint64_t, 3>>& tasks) {
    constexpr std::size_t kBlock = 4096;
    const std::size_t blocks = (tasks.size() + kBlock - 1) / kBlock;
    std::vector<double> block_sums(blocks, 0.0);
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next_block{0};
    const int workers = std::min<int>(worker_count(), static_cast<int>(blocks));
    auto run = [&]() {
        for (;;) {
            const std::size_t bi = next_block.fetch_add(1);
            if (bi >= blocks) return;
            const std::size_t lo = bi * kBlock;
            const std::size_t hi = std::min(tasks.size(), lo + kBlock);
            double sum = 0.0, comp = 0.0;
            for (std::size_t t = lo; t < hi; ++t) {
                const FlowEgo ea = sample_flow_ego(ga, static_cast<int>(tasks[t][0]), k, cap,
                                                   derive_seed(tasks[t][2], 0xA));
                const FlowEgo eb = sample_flow_ego(gb, static_cast<int>(tasks[t][1]), k, cap,
                                                   derive_seed(tasks[t][2], 0xB));
                const double d = flow_distance(ea, eb);
                const double yy = d - comp;  // Kahan within the block
                const double tt = sum + yy;
                comp = (tt - sum) - yy;
                sum = tt;
            }
            block_sums[bi] = sum;
        }
    };
    if (workers <= 1) {
        run();
    } else {
        for (int w = 0; w < workers; ++w) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }
    double total = 0.0, comp = 0.0;
    for (double s : block_sums) {  // fixed order, compensated
        const double yy = s - comp;
        const double tt = total + yy;
        comp = (tt - total) - yy;
        total = tt;
    }
    return total / static_cast<double>(tasks.size());
}

}  // namespace

GapEstimate egi_gap_full(const Graph& ga, const Graph& gb, int k, int cap) {
    if (ga.node_count == 0 || gb.node_count == 0) {
        throw std::invalid_argument("egi_gap_full: empty graph");
    }
    std::vector<std::array<std::uint64_t, 3>> tasks;
    tasks.reserve(static_cast<std::size_t>(ga.node_count) * static_cast<std::size_t>(gb.node_count));
    for (int i = 0; i < ga.node_count; ++i) {
        for (int j = 0; j < gb.node_count; ++j) {
            tasks.push_back({static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                             derive_seed(kFullEnumerationSeed, static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(j))});
        }
    }
    GapEstimate est;
    est.value = mean_over_tasks(ga, gb, k, cap, tasks);
    est.pairs_used = static_cast<long>(tasks.size());
    est.dispersion = 0.0;
    est.k = k;
    return est;
}

GapEstimate egi_gap_sampled(const Graph& ga, const Graph& gb, int k, long pairs,
                            std::uint64_t seed, int cap) {
    if (pairs < 1) throw std::invalid_argument("egi_gap_sampled: pairs must be >= 1");
    Rng rng(derive_seed(seed, 0x5A4DULL));
    std::vector<std::array<std::uint64_t, 3>> tasks;
    tasks.reserve(static_cast<std::size_t>(pairs));
    for (long t = 0; t < pairs; ++t) {
        const std::uint64_t i = rng.below(static_cast<std::uint64_t>(ga.node_count));
        const std::uint64_t j = rng.below(static_cast<std::uint64_t>(gb.node_count));
        tasks.push_back({i, j, derive_seed(seed, static_cast<std::uint64_t>(t) + 1, i * 131071 + j)});
    }
    GapEstimate est;
    est.value = mean_over_tasks(ga, gb, k, cap, tasks);
    est.pairs_used = pairs;
    est.dispersion = 0.0;
    est.k = k;
    return est;
}

GapEstimate egi_gap_repeated(const Graph& ga, const Graph& gb, int k, long pairs,
                             std::uint64_t seed, int repeats, int cap) {
    if (repeats < 1) throw std::invalid_argument("egi_gap_repeated: repeats must be >= 1");
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        means.push_back(egi_gap_sampled(ga, gb, k, pairs, seed + static_cast<std::uint64_t>(r), cap).value);
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= static_cast<double>(repeats);
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    GapEstimate est;
    est.value = mean;
    est.pairs_used = pairs;
    est.dispersion = std::sqrt(var / static_cast<double>(repeats));
    est.k = k;
    return est;
}

std::vector<GapEstimate> gap_matrix(const std::vector<Graph>& sources, const Graph& target, int k,
                                    long pairs, std::uint64_t seed, int cap) {
    if (sources.empty()) throw std::invalid_argument("gap_matrix: need at least one source");
    std::vector<GapEstimate> out;
    out.reserve(sources.size());
    for (std::size_t s = 0; s < sources.size(); ++s) {
        GapEstimate est = egi_gap_sampled(sources[s], target, k, pairs, seed, cap);
        est.source_index = static_cast<int>(s);
        out.push_back(est);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const GapEstimate& a, const GapEstimate& b) { return a.value < b.value; });
    return out;
}

}  // namespace egi
