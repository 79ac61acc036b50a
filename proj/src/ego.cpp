#include "egi/ego.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "egi/rng.hpp"

namespace egi {

namespace {

// Rebuild edges_typed for the current hop membership/order by scanning the
// graph-free structure: callers pass the set of undirected member pairs.
// Here we reconstruct from an adjacency map over (hop, index) built earlier.
struct LocalRef {
    int p;
    int q;
};

// Gather edges_typed from an original-id adjacency restricted to members.
// `position` maps original id -> (hop, index); edges between consecutive
// hops become type_a (closer is src), same-hop edges type_b (smaller index
// is src). Deterministic order: type_a before type_b, by hop, type_a keyed
// (dst_q, src_q), type_b keyed (src_q, dst_q).
std::vector<TypedEdge> collect_typed_edges(
    const std::unordered_map<int, LocalRef>& position,
    const std::vector<std::pair<int, int>>& member_pairs) {
    std::vector<TypedEdge> out;
    for (const auto& [u, v] : member_pairs) {
        const LocalRef a = position.at(u);
        const LocalRef b = position.at(v);
        if (a.p == b.p) {
            out.push_back({a.p, std::min(a.q, b.q), std::max(a.q, b.q), EdgeKind::type_b});
        } else if (a.p + 1 == b.p) {
            out.push_back({b.p, a.q, b.q, EdgeKind::type_a});
        } else if (b.p + 1 == a.p) {
            out.push_back({a.p, b.q, a.q, EdgeKind::type_a});
        }
        // BFS structure guarantees no |hop difference| > 1 edges; induced
        // pairs violating that would indicate a bug upstream.
    }
    std::sort(out.begin(), out.end(), [](const TypedEdge& x, const TypedEdge& y) {
        const int xa = x.kind == EdgeKind::type_a ? 0 : 1;
        const int ya = y.kind == EdgeKind::type_a ? 0 : 1;
        if (xa != ya) return xa < ya;
        if (x.p != y.p) return x.p < y.p;
        if (xa == 0) {  // type_a: destination-major
            if (x.dst_q != y.dst_q) return x.dst_q < y.dst_q;
            return x.src_q < y.src_q;
        }
        if (x.src_q != y.src_q) return x.src_q < y.src_q;
        return x.dst_q < y.dst_q;
    });
    return out;
}

// Undirected member pairs (u < v by original id) induced on the membership.
std::vector<std::pair<int, int>> induced_pairs(const Graph& g,
                                               const std::unordered_map<int, LocalRef>& position) {
    std::vector<std::pair<int, int>> pairs;
    for (const auto& [u, ref] : position) {
        (void)ref;
        for (int v : g.neighbors(u)) {
            if (v > u && position.count(v)) pairs.emplace_back(u, v);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::unordered_map<int, LocalRef> positions_of(const std::vector<std::vector<int>>& hops) {
    std::unordered_map<int, LocalRef> position;
    for (int p = 0; p < static_cast<int>(hops.size()); ++p) {
        const auto& hop = hops[static_cast<std::size_t>(p)];
        for (int q = 0; q < static_cast<int>(hop.size()); ++q) {
            if (hop[static_cast<std::size_t>(q)] >= 0) {
                position[hop[static_cast<std::size_t>(q)]] = {p, q};
            }
        }
    }
    return position;
}

}  // namespace

std::vector<std::pair<int, int>> EgoGraph::forward_arcs() const {
    std::vector<std::pair<int, int>> arcs;
    for (const auto& e : edges_typed) {
        if (e.kind == EdgeKind::type_a) {
            // farther -> closer
            arcs.emplace_back(local_index(e.p, e.dst_q), local_index(e.p - 1, e.src_q));
        } else {
            const int a = local_index(e.p, e.src_q);
            const int b = local_index(e.p, e.dst_q);
            arcs.emplace_back(a, b);
            arcs.emplace_back(b, a);
        }
    }
    for (int p = 0; p < static_cast<int>(hops.size()); ++p) {
        const auto& hop = hops[static_cast<std::size_t>(p)];
        for (int q = 0; q < static_cast<int>(hop.size()); ++q) {
            if (hop[static_cast<std::size_t>(q)] >= 0) {
                const int i = local_index(p, q);
                arcs.emplace_back(i, i);  // self-loops on real slots only
            }
        }
    }
    std::sort(arcs.begin(), arcs.end());
    return arcs;
}

EgoGraph extract_ego(const Graph& g, int center, int k, int cap, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("extract_ego: k must be >= 1");
    if (center < 0 || center >= g.node_count) {
        throw std::invalid_argument("extract_ego: center out of range");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(center)));
    std::vector<int> hop_of(static_cast<std::size_t>(g.node_count), -1);
    hop_of[static_cast<std::size_t>(center)] = 0;
    EgoGraph ego;
    ego.center = center;
    ego.k = k;
    ego.hops.assign(static_cast<std::size_t>(k) + 1, {});
    ego.hops[0] = {center};
    std::vector<int> frontier{center};
    for (int p = 1; p <= k && !frontier.empty(); ++p) {
        std::vector<int> next;
        for (int v : frontier) {
            auto nbrs = g.neighbors(v);
            std::vector<int> kept;
            if (cap >= 0 && static_cast<int>(nbrs.size()) > cap) {
                for (int idx : rng.sample_without_replacement(static_cast<int>(nbrs.size()), cap)) {
                    kept.push_back(nbrs[static_cast<std::size_t>(idx)]);
                }
                std::sort(kept.begin(), kept.end());
            } else {
                kept.assign(nbrs.begin(), nbrs.end());
            }
            for (int u : kept) {
                if (hop_of[static_cast<std::size_t>(u)] < 0) {
                    hop_of[static_cast<std::size_t>(u)] = p;
                    next.push_back(u);
                }
            }
        }
        std::sort(next.begin(), next.end());
        ego.hops[static_cast<std::size_t>(p)] = next;
        frontier = std::move(next);
    }
    auto position = positions_of(ego.hops);
    ego.edges_typed = collect_typed_edges(position, induced_pairs(g, position));
    return ego;
}

EgoGraph canonical_order(const EgoGraph& ego) {
    // Within-ego degree per original id (padding ignored).
    std::unordered_map<int, int> deg;
    auto position = positions_of(ego.hops);
    for (const auto& [id, ref] : position) {
        (void)ref;
        deg[id] = 0;
    }
    for (const auto& e : ego.edges_typed) {
        int u, v;
        if (e.kind == EdgeKind::type_a) {
            u = ego.hops[static_cast<std::size_t>(e.p - 1)][static_cast<std::size_t>(e.src_q)];
            v = ego.hops[static_cast<std::size_t>(e.p)][static_cast<std::size_t>(e.dst_q)];
        } else {
            u = ego.hops[static_cast<std::size_t>(e.p)][static_cast<std::size_t>(e.src_q)];
            v = ego.hops[static_cast<std::size_t>(e.p)][static_cast<std::size_t>(e.dst_q)];
        }
        ++deg[u];
        ++deg[v];
    }
    EgoGraph out;
    out.center = ego.center;
    out.k = ego.k;
    out.hops.resize(ego.hops.size());
    for (std::size_t p = 0; p < ego.hops.size(); ++p) {
        std::vector<int> real;
        int padding = 0;
        for (int id : ego.hops[p]) {
            if (id >= 0) {
                real.push_back(id);
            } else {
                ++padding;
            }
        }
        std::sort(real.begin(), real.end(), [&](int a, int b) {
            if (deg[a] != deg[b]) return deg[a] > deg[b];
            return a < b;
        });
        real.insert(real.end(), static_cast<std::size_t>(padding), -1);
        out.hops[p] = std::move(real);
    }
    // Re-express edges under the new indices.
    auto new_position = positions_of(out.hops);
    std::vector<std::pair<int, int>> member_pairs;
    for (const auto& e : ego.edges_typed) {
        int u, v;
        if (e.kind == EdgeKind::type_a) {
            u = ego.hops[static_cast<std::size_t>(e.p - 1)][static_cast<std::size_t>(e.src_q)];
        } else {
            u = ego.hops[static_cast<std::size_t>(e.p)][static_cast<std::size_t>(e.src_q)];
        }
        v = ego.hops[static_cast<std::size_t>(e.p)][static_cast<std::size_t>(e.dst_q)];
        member_pairs.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(member_pairs.begin(), member_pairs.end());
    out.edges_typed = collect_typed_edges(new_position, member_pairs);
    return out;
}

std::pair<EgoGraph, EgoGraph> pad_pair(const EgoGraph& a, const EgoGraph& b) {
    if (a.k != b.k) {
        throw std::invalid_argument("pad_pair: hop counts differ (" + std::to_string(a.k) + " vs " +
                                    std::to_string(b.k) + ")");
    }
    EgoGraph pa = a;
    EgoGraph pb = b;
    const std::size_t hop_count = std::max(pa.hops.size(), pb.hops.size());
    pa.hops.resize(hop_count);
    pb.hops.resize(hop_count);
    for (std::size_t p = 0; p < hop_count; ++p) {
        const std::size_t target = std::max(pa.hops[p].size(), pb.hops[p].size());
        pa.hops[p].resize(target, -1);
        pb.hops[p].resize(target, -1);
    }
    return {std::move(pa), std::move(pb)};
}

EgoSample make_sample(const EgoGraph& ego, const FeatureMatrix& feats) {
    EgoSample s;
    s.ego = ego;
    s.features.rows = ego.size();
    s.features.dim = feats.dim;
    s.features.values.assign(static_cast<std::size_t>(s.features.rows) * feats.dim, 0.0);
    int r = 0;
    for (const auto& hop : ego.hops) {
        for (int id : hop) {
            if (id >= 0) {
                for (int c = 0; c < feats.dim; ++c) s.features.at(r, c) = feats.at(id, c);
            }
            ++r;
        }
    }
    return s;
}

FeatureMatrix degree_onehot(const Graph& g, int dim) {
    if (dim < 1) throw std::invalid_argument("degree_onehot: dim must be >= 1");
    FeatureMatrix f;
    f.rows = g.node_count;
    f.dim = dim;
    f.values.assign(static_cast<std::size_t>(f.rows) * dim, 0.0);
    for (int v = 0; v < g.node_count; ++v) {
        f.at(v, std::min(degree(g, v), dim - 1)) = 1.0;
    }
    return f;
}

FeatureMatrix constant_features(const Graph& g, int dim) {
    if (dim < 1) throw std::invalid_argument("constant_features: dim must be >= 1");
    FeatureMatrix f;
    f.rows = g.node_count;
    f.dim = dim;
    f.values.assign(static_cast<std::size_t>(f.rows) * dim, 1.0 / dim);
    return f;
}

FeatureMatrix random_features(const Graph& g, int dim, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("random_features: dim must be >= 1");
    FeatureMatrix f;
    f.rows = g.node_count;
    f.dim = dim;
    f.values.resize(static_cast<std::size_t>(f.rows) * dim);
    Rng rng(seed);
    for (double& x : f.values) x = rng.real();
    return f;
}

std::vector<int> wl_labels(const Graph& g, int rounds) {
    if (rounds < 1) throw std::invalid_argument("wl_labels: rounds must be >= 1");
    std::vector<int> color(static_cast<std::size_t>(g.node_count));
    for (int v = 0; v < g.node_count; ++v) color[static_cast<std::size_t>(v)] = degree(g, v);
    for (int r = 0; r < rounds; ++r) {
        // Signature = (own color, sorted neighbor colors); compact by sorted
        // signature order so the output is independent of memory layout.
        std::vector<std::vector<int>> sig(static_cast<std::size_t>(g.node_count));
        for (int v = 0; v < g.node_count; ++v) {
            auto& s = sig[static_cast<std::size_t>(v)];
            s.push_back(color[static_cast<std::size_t>(v)]);
            for (int u : g.neighbors(v)) s.push_back(color[static_cast<std::size_t>(u)]);
            std::sort(s.begin() + 1, s.end());
        }
        std::map<std::vector<int>, int> compact;
        for (const auto& s : sig) compact.emplace(s, 0);
        int next = 0;
        for (auto& [key, id] : compact) {
            (void)key;
            id = next++;
        }
        for (int v = 0; v < g.node_count; ++v) {
            color[static_cast<std::size_t>(v)] = compact[sig[static_cast<std::size_t>(v)]];
        }
    }
    return color;
}

}  // namespace egi
