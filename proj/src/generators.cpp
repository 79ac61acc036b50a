#include "egi/generators.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "egi/rng.hpp"

namespace egi {

namespace {

Graph generate_barabasi(const GenSpec& spec) {
    const int n = spec.node_count;
    const int m = spec.ba_m;
    std::vector<std::pair<int, int>> pairs;
    // Seed clique on nodes 0..m.
    for (int i = 0; i <= m; ++i) {
        for (int j = 0; j < i; ++j) pairs.emplace_back(j, i);
    }
    // Degree-proportional sampling via the repeated-endpoint list: each node
    // appears once per incident edge, so a uniform draw is degree-weighted.
    std::vector<int> endpoints;
    for (const auto& [u, v] : pairs) {
        endpoints.push_back(u);
        endpoints.push_back(v);
    }
    Rng rng(spec.seed);
    for (int v = m + 1; v < n; ++v) {
        std::set<int> targets;
        while (static_cast<int>(targets.size()) < m) {
            targets.insert(endpoints[static_cast<std::size_t>(rng.index(endpoints.size()))]);
        }
        for (int t : targets) {
            pairs.emplace_back(t, v);
            endpoints.push_back(t);
            endpoints.push_back(v);
        }
    }
    return from_edge_list(pairs, /*directed=*/false);
}

Graph generate_forest_fire(const GenSpec& spec) {
    const int n = spec.node_count;
    const double pf = spec.ff_forward;
    const double pb_eff = spec.ff_forward * spec.ff_backward;  // backward ratio
    Rng rng(spec.seed);
    std::vector<std::vector<int>> out_adj(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> in_adj(static_cast<std::size_t>(n));
    std::vector<int> visited_at(static_cast<std::size_t>(n), -1);  // episode stamp
    std::vector<std::pair<int, int>> pairs;

    for (int v = 1; v < n; ++v) {
        const int ambassador = static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
        std::vector<int> queue{ambassador};
        visited_at[static_cast<std::size_t>(ambassador)] = v;
        std::size_t head = 0;
        while (head < queue.size()) {
            const int w = queue[head++];
            const std::uint64_t x = pf > 0.0 ? rng.geometric_failures(1.0 - pf) : 0;
            const std::uint64_t y = pb_eff > 0.0 ? rng.geometric_failures(1.0 - pb_eff) : 0;
            for (int pass = 0; pass < 2; ++pass) {
                const auto& pool_all = pass == 0 ? out_adj[static_cast<std::size_t>(w)]
                                                 : in_adj[static_cast<std::size_t>(w)];
                const std::uint64_t want = pass == 0 ? x : y;
                std::vector<int> pool;
                for (int u : pool_all) {
                    if (visited_at[static_cast<std::size_t>(u)] != v) pool.push_back(u);
                }
                std::vector<int> picked;
                if (want >= pool.size()) {
                    picked = pool;
                } else {
                    for (int idx : rng.sample_without_replacement(static_cast<int>(pool.size()),
                                                                  static_cast<int>(want))) {
                        picked.push_back(pool[static_cast<std::size_t>(idx)]);
                    }
                }
                for (int u : picked) {
                    visited_at[static_cast<std::size_t>(u)] = v;
                    queue.push_back(u);
                }
            }
        }
        for (int u : queue) {
            out_adj[static_cast<std::size_t>(v)].push_back(u);
            in_adj[static_cast<std::size_t>(u)].push_back(v);
            pairs.emplace_back(v, u);
        }
    }
    return from_edge_list(pairs, /*directed=*/false);
}

}  // namespace

Graph generate(const GenSpec& spec) {
    if (spec.ff_forward < 0.0 || spec.ff_forward >= 1.0 || spec.ff_backward < 0.0 ||
        spec.ff_backward >= 1.0) {
        throw std::invalid_argument("generate: burning probabilities must lie in [0,1)");
    }
    if (spec.ba_m < 1) {
        throw std::invalid_argument("generate: ba_m must be >= 1");
    }
    if (spec.node_count < spec.ba_m + 1) {
        throw std::invalid_argument("generate: node_count must be >= ba_m + 1");
    }
    return spec.family == Family::barabasi ? generate_barabasi(spec) : generate_forest_fire(spec);
}

std::vector<Graph> generate_suite(Family family, int count, GenSpec spec, std::uint64_t base_seed) {
    if (count < 1) {
        throw std::invalid_argument("generate_suite: count must be >= 1");
    }
    spec.family = family;
    std::vector<Graph> suite;
    suite.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        spec.seed = base_seed + static_cast<std::uint64_t>(i);
        suite.push_back(generate(spec));
    }
    return suite;
}

Dataset load_airport(const std::string& edges_path, const std::string& labels_path) {
    EdgeListFile file = load_edge_list(edges_path);
    Dataset ds;
    ds.graph = from_edge_list(file.pairs, /*directed=*/false);
    ds.graph.labels = load_labels(labels_path, file.original_ids);
    ds.edge_records = file.record_count;
    ds.original_ids = std::move(file.original_ids);
    return ds;
}

}  // namespace egi
