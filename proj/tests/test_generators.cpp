// Generator tests: exact structural facts where the construction fixes them
// (clique seed, per-node attachment counts), distributional bands measured
// over many seeds where growth is stochastic, and full determinism.

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "egi/generators.hpp"
#include "egi/graph.hpp"

using namespace egi;

namespace {

bool connected(const Graph& g) {
    if (g.node_count == 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(g.node_count), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int cnt = 1;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int u : g.neighbors(v)) {
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = 1;
                ++cnt;
                q.push(u);
            }
        }
    }
    return cnt == g.node_count;
}

double mean_degree(const Graph& g) {
    return 2.0 * static_cast<double>(g.undirected_edge_count()) / g.node_count;
}

}  // namespace

TEST_CASE("preferential attachment: exact edge count from the construction") {
    // Seed (m+1)-clique has C(m+1,2) edges; every later node adds exactly m
    // distinct edges, so the total is fixed: 3 + 97*2 = 197 at n=100, m=2.
    GenSpec spec;
    spec.family = Family::barabasi;
    spec.node_count = 100;
    spec.ba_m = 2;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        spec.seed = s;
        Graph g = generate(spec);
        CHECK(g.node_count == 100);
        CHECK(g.undirected_edge_count() == 197);
        CHECK(connected(g));
        // Every node outside the seed clique has degree >= m.
        for (int v = spec.ba_m + 1; v < g.node_count; ++v) CHECK(degree(g, v) >= spec.ba_m);
    }
}

TEST_CASE("preferential attachment: right-skewed degrees (hubs emerge)") {
    GenSpec spec;
    spec.family = Family::barabasi;
    spec.node_count = 100;
    spec.ba_m = 2;
    double mean_max = 0.0;
    int skewed = 0;
    const int kSeeds = 10;
    for (std::uint64_t s = 1; s <= kSeeds; ++s) {
        spec.seed = s;
        Graph g = generate(spec);
        std::vector<int> degs(static_cast<std::size_t>(g.node_count));
        for (int v = 0; v < g.node_count; ++v) degs[static_cast<std::size_t>(v)] = degree(g, v);
        std::sort(degs.begin(), degs.end());
        const double med = degs[degs.size() / 2];
        const double mean = std::accumulate(degs.begin(), degs.end(), 0.0) / degs.size();
        mean_max += degs.back();
        if (mean > med) ++skewed;  // long right tail pulls the mean above the median
    }
    mean_max /= kSeeds;
    CHECK(mean_max >= 4.0 * 2);  // hubs well above the attachment count
    CHECK(skewed >= 8);          // right-skew in (almost) every instance
}

TEST_CASE("forest fire: connectivity and mean-degree band") {
    GenSpec spec;
    spec.family = Family::forest_fire;
    spec.node_count = 100;
    spec.ff_forward = 0.4;
    spec.ff_backward = 0.3;
    double md = 0.0;
    const int kSeeds = 20;
    for (std::uint64_t s = 1; s <= kSeeds; ++s) {
        spec.seed = s;
        Graph g = generate(spec);
        CHECK(g.node_count == 100);
        CHECK(connected(g));  // every joining node links to its ambassador
        md += mean_degree(g);
    }
    md /= kSeeds;
    // Subcritical burning at (0.4, 0.3): measured long-run mean ~3.7.
    CHECK(md > 2.5);
    CHECK(md < 5.0);
}

TEST_CASE("generate is deterministic per seed and varies across seeds") {
    GenSpec spec;
    spec.family = Family::forest_fire;
    spec.node_count = 60;
    spec.seed = 42;
    Graph a = generate(spec);
    Graph b = generate(spec);
    CHECK(a.edges == b.edges);
    spec.seed = 43;
    Graph c = generate(spec);
    CHECK(a.edges != c.edges);
}

TEST_CASE("generate_suite shards seeds base..base+count-1") {
    GenSpec spec;
    spec.family = Family::barabasi;
    spec.node_count = 40;
    spec.ba_m = 2;
    auto suite = generate_suite(Family::barabasi, 5, spec, 7);
    REQUIRE(suite.size() == 5);
    for (int i = 0; i < 5; ++i) {
        spec.seed = 7 + static_cast<std::uint64_t>(i);
        Graph g = generate(spec);
        CHECK(suite[static_cast<std::size_t>(i)].edges == g.edges);
    }
    // Members are pairwise distinct.
    for (std::size_t i = 0; i < suite.size(); ++i) {
        for (std::size_t j = i + 1; j < suite.size(); ++j) {
            CHECK(suite[i].edges != suite[j].edges);
        }
    }
}

TEST_CASE("parameter validation") {
    GenSpec spec;
    spec.family = Family::forest_fire;
    spec.ff_forward = 1.0;  // probabilities live in [0,1)
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec.ff_forward = -0.1;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);

    spec = GenSpec{};
    spec.family = Family::barabasi;
    spec.ba_m = 0;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec.ba_m = 5;
    spec.node_count = 5;  // needs at least m+1 nodes
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("load_airport attaches labels and reports raw record counts") {
    const std::string base = EGI_DATA_DIR;
    Dataset brazil = load_airport(base + "/brazil-airports.edgelist",
                                  base + "/labels-brazil-airports.txt");
    CHECK(brazil.graph.node_count == 131);
    CHECK(brazil.graph.undirected_edge_count() == 1003);
    CHECK(brazil.edge_records == 1074);
    REQUIRE(brazil.graph.labels.size() == 131);
    std::set<int> classes(brazil.graph.labels.begin(), brazil.graph.labels.end());
    CHECK(classes == std::set<int>{0, 1, 2, 3});

    Dataset europe = load_airport(base + "/europe-airports.edgelist",
                                  base + "/labels-europe-airports.txt");
    CHECK(europe.graph.node_count == 399);
    CHECK(europe.graph.labels.size() == 399);

    Dataset usa =
        load_airport(base + "/usa-airports.edgelist", base + "/labels-usa-airports.txt");
    CHECK(usa.graph.node_count == 1190);
    CHECK(usa.graph.labels.size() == 1190);
    CHECK(usa.original_ids.size() == 1190);

    CHECK_THROWS_AS(load_airport("./missing.edgelist", "./missing.txt"), std::runtime_error);
}
