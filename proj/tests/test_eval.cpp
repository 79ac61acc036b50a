// Tests for frozen-embedding evaluation: k-NN structural accuracy, the MLP
// classifier harness, the direct-transfer pipeline, and CSV reports.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "egi/ego.hpp"
#include "egi/eval.hpp"
#include "egi/generators.hpp"
#include "egi/graph.hpp"
#include "egi/model.hpp"
#include "egi/rng.hpp"

using namespace egi;

namespace {

Graph forest_fire(int n, double pf, double pb, std::uint64_t seed) {
    GenSpec s;
    s.family = Family::forest_fire;
    s.node_count = n;
    s.ff_forward = pf;
    s.ff_backward = pb;
    s.seed = seed;
    return generate(s);
}

FeatureMatrix matrix_from(int rows, int dim, std::vector<double> values) {
    return FeatureMatrix{rows, dim, std::move(values)};
}

// Independent k-NN oracle with the same contract: squared Euclidean
// distances, ties toward the smaller row index, c_v - 1 neighbors.
double knn_oracle(const FeatureMatrix& emb, const std::vector<int>& labels) {
    const int n = emb.rows;
    std::vector<int> class_size(256, 0);
    for (int l : labels) class_size[static_cast<std::size_t>(l)] += 1;
    double total = 0.0;
    int eligible = 0;
    for (int v = 0; v < n; ++v) {
        const int cv = class_size[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])];
        if (cv < 2) continue;
        std::vector<std::pair<double, int>> order;
        for (int u = 0; u < n; ++u) {
            if (u == v) continue;
            double d2 = 0.0;
            for (int f = 0; f < emb.dim; ++f) {
                const double diff = emb.at(v, f) - emb.at(u, f);
                d2 += diff * diff;
            }
            order.emplace_back(d2, u);
        }
        std::sort(order.begin(), order.end());
        int matches = 0;
        for (int i = 0; i < cv - 1; ++i) {
            if (labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)] ==
                labels[static_cast<std::size_t>(v)]) {
                ++matches;
            }
        }
        total += static_cast<double>(matches) / static_cast<double>(cv - 1);
        ++eligible;
    }
    return total / static_cast<double>(eligible);
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("knn_accuracy: six-point hand case") {
    // 1-D layout: class a = {0.0, 0.1, 9.95}, class b = {10.0, 10.1},
    // class c = {5.0} (singleton, ineligible).
    FeatureMatrix emb = matrix_from(6, 1, {0.0, 0.1, 9.95, 10.0, 10.1, 5.0});
    std::vector<int> labels{0, 0, 0, 1, 1, 2};
    // Per-node fractions: 1/2, 1/2, 0, 0, 1 over the five eligible nodes.
    CHECK(knn_accuracy(emb, labels) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("knn_accuracy matches an independent oracle on random data") {
    Rng rng(0xA1);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 20;
        FeatureMatrix emb = matrix_from(n, 3, {});
        emb.values.resize(static_cast<std::size_t>(n) * 3);
        for (double& v : emb.values) v = rng.real(-2.0, 2.0);
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (auto& l : labels) l = rng.index(3);
        // Ensure every class is populated twice so all nodes are eligible.
        labels[0] = labels[1] = 0;
        labels[2] = labels[3] = 1;
        labels[4] = labels[5] = 2;
        CHECK(knn_accuracy(emb, labels) ==
              doctest::Approx(knn_oracle(emb, labels)).epsilon(1e-12));
    }
}

TEST_CASE("knn_accuracy: one class everywhere scores 1.0 exactly") {
    FeatureMatrix emb = matrix_from(5, 2, {0., 0., 1., 0., 2., 0., 3., 0., 4., 0.});
    std::vector<int> labels(5, 7);
    CHECK(knn_accuracy(emb, labels) == 1.0);
}

TEST_CASE("knn_accuracy is invariant under translation") {
    Rng rng(0xA2);
    FeatureMatrix emb = matrix_from(12, 2, {});
    emb.values.resize(24);
    for (double& v : emb.values) v = rng.real(-1.0, 1.0);
    std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
    const double base = knn_accuracy(emb, labels);
    FeatureMatrix moved = emb;
    for (int r = 0; r < 12; ++r) {
        moved.at(r, 0) += 100.0;
        moved.at(r, 1) -= 3.5;
    }
    CHECK(knn_accuracy(moved, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("knn_accuracy rejects impossible inputs") {
    FeatureMatrix emb = matrix_from(3, 1, {0.0, 1.0, 2.0});
    CHECK_THROWS_AS(knn_accuracy(emb, {0, 1, 2}), std::invalid_argument);  // all singletons
    CHECK_THROWS_AS(knn_accuracy(emb, {0, 0}), std::invalid_argument);     // size mismatch
}

TEST_CASE("mlp_eval separates well-separated clusters perfectly") {
    Rng rng(0xA3);
    const int per_class = 20;
    FeatureMatrix emb = matrix_from(2 * per_class, 2, {});
    emb.values.resize(static_cast<std::size_t>(2 * per_class) * 2);
    std::vector<int> labels(static_cast<std::size_t>(2 * per_class));
    for (int i = 0; i < per_class; ++i) {
        emb.at(i, 0) = rng.real(-0.5, 0.5);
        emb.at(i, 1) = rng.real(-0.5, 0.5);
        labels[static_cast<std::size_t>(i)] = 0;
        emb.at(per_class + i, 0) = 6.0 + rng.real(-0.5, 0.5);
        emb.at(per_class + i, 1) = 6.0 + rng.real(-0.5, 0.5);
        labels[static_cast<std::size_t>(per_class + i)] = 1;
    }
    EvalStats stats = mlp_eval(emb, labels, 5, 13);
    CHECK(stats.mean == doctest::Approx(1.0));
    CHECK(stats.std_dev == doctest::Approx(0.0));
}

TEST_CASE("mlp_eval on label-free noise sits near chance level") {
    Rng rng(0xA4);
    const int n = 80;
    FeatureMatrix emb = matrix_from(n, 4, {});
    emb.values.resize(static_cast<std::size_t>(n) * 4);
    for (double& v : emb.values) v = rng.real(0.0, 1.0);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % 4;
    EvalStats stats = mlp_eval(emb, labels, 20, 29);
    CHECK(stats.mean > 0.10);
    CHECK(stats.mean < 0.40);
    CHECK(stats.std_dev > 0.0);
}

TEST_CASE("mlp_eval is reproducible per seed and worker-independent") {
    Rng rng(0xA5);
    const int n = 40;
    FeatureMatrix emb = matrix_from(n, 3, {});
    emb.values.resize(static_cast<std::size_t>(n) * 3);
    for (double& v : emb.values) v = rng.real(-1.0, 1.0);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % 2;

    EvalStats a = mlp_eval(emb, labels, 8, 31);
    EvalStats b = mlp_eval(emb, labels, 8, 31);
    CHECK(a.mean == b.mean);
    CHECK(a.std_dev == b.std_dev);

    setenv("EGI_WORKERS", "1", 1);
    EvalStats serial = mlp_eval(emb, labels, 8, 31);
    setenv("EGI_WORKERS", "4", 1);
    EvalStats parallel = mlp_eval(emb, labels, 8, 31);
    unsetenv("EGI_WORKERS");
    CHECK(serial.mean == parallel.mean);
    CHECK(serial.std_dev == parallel.std_dev);
}

TEST_CASE("mlp_eval validates classes and sizes") {
    FeatureMatrix emb = matrix_from(6, 2, std::vector<double>(12, 0.5));
    CHECK_THROWS_AS(mlp_eval(emb, {0, 0, 0, 0, 0, 0}, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(mlp_eval(emb, {0, 0, 0, 0, 0, 1}, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(mlp_eval(emb, {0, 1}, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(mlp_eval(emb, {0, 0, 0, 1, 1, 1}, 0, 1), std::invalid_argument);
}

TEST_CASE("direct_transfer names the dimension clash") {
    Graph src = forest_fire(30, 0.4, 0.3, 1);
    Graph dst = forest_fire(30, 0.4, 0.3, 2);
    TrainConfig cfg;
    cfg.k = 2;
    cfg.hidden_dim = 4;
    cfg.epochs = 1;
    std::vector<EvalTarget> targets{{"other", dst, degree_onehot(dst, 2),
                                     wl_labels(dst, 2), false}};
    bool threw = false;
    try {
        direct_transfer("self", src, degree_onehot(src, 3), targets, cfg, EvalOptions{});
    } catch (const std::invalid_argument& e) {
        threw = true;
        CHECK(std::string(e.what()).find("share one dimension") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("direct_transfer: end-to-end records with gaps and honest baseline") {
    Graph src = forest_fire(40, 0.4, 0.3, 3);
    Graph dst = forest_fire(40, 0.4, 0.3, 4);
    TrainConfig cfg;
    cfg.k = 2;
    cfg.hidden_dim = 8;
    cfg.epochs = 10;
    cfg.seed = 5;
    EvalOptions opts;
    opts.attach_gaps = true;
    opts.gap_pairs = 50;
    opts.gap_seed = 17;

    std::vector<EvalTarget> targets{
        {"self", src, degree_onehot(src, 3), wl_labels(src, 2), false},
        {"other", dst, degree_onehot(dst, 3), wl_labels(dst, 2), false}};
    TransferReport report = direct_transfer("self", src, degree_onehot(src, 3), targets, cfg, opts);
    CHECK(report.source == "self");
    REQUIRE(report.records.size() == 2);
    for (const auto& r : report.records) {
        CHECK(r.runs == 1);  // knn mode is a single deterministic pass
        CHECK(r.acc_mean >= 0.0);
        CHECK(r.acc_mean <= 1.0);
        CHECK(r.acc_std == 0.0);
        CHECK(r.has_gap);
        CHECK(r.gap.value >= 0.0);
        CHECK(r.gap.pairs_used == 50);
    }

    // The reported baseline is exactly the untrained initialization's score.
    ModelParams fresh = init_model(cfg, 3);
    FeatureMatrix base_emb = embed_all(dst, degree_onehot(dst, 3), fresh.enc, cfg.k);
    CHECK(report.records[1].baseline_mean ==
          doctest::Approx(knn_accuracy(base_emb, wl_labels(dst, 2))).epsilon(1e-12));
}

TEST_CASE("direct_transfer equals train-then-evaluate_transfer") {
    Graph src = forest_fire(40, 0.4, 0.3, 6);
    Graph dst = forest_fire(40, 0.4, 0.3, 7);
    TrainConfig cfg;
    cfg.k = 2;
    cfg.hidden_dim = 8;
    cfg.epochs = 5;
    cfg.seed = 8;
    EvalOptions opts;
    opts.attach_gaps = true;
    opts.gap_pairs = 40;

    std::vector<EvalTarget> targets{
        {"other", dst, degree_onehot(dst, 3), wl_labels(dst, 2), false}};
    TransferReport direct =
        direct_transfer("src", src, degree_onehot(src, 3), targets, cfg, opts);

    TrainResult trained = train(src, degree_onehot(src, 3), cfg);
    TransferReport staged =
        evaluate_transfer("src", src, trained.model, targets, cfg, opts);
    REQUIRE(staged.records.size() == direct.records.size());
    for (std::size_t i = 0; i < staged.records.size(); ++i) {
        CHECK(staged.records[i].acc_mean == direct.records[i].acc_mean);
        CHECK(staged.records[i].baseline_mean == direct.records[i].baseline_mean);
        CHECK(staged.records[i].gap.value == direct.records[i].gap.value);
    }
}

TEST_CASE("gap_gain_table: two-point correlation has the right sign") {
    TransferReport report;
    report.source = "s";
    TargetRecord a;
    a.target = "t1";
    a.acc_mean = 0.6;
    a.baseline_mean = 0.5;  // gain +0.1
    a.has_gap = true;
    a.gap.value = 0.2;
    TargetRecord b;
    b.target = "t2";
    b.acc_mean = 0.2;
    b.baseline_mean = 0.5;  // gain -0.3
    b.has_gap = true;
    b.gap.value = 0.8;
    report.records = {a, b};
    auto lines = lines_of(gap_gain_table(report));
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "source,target,gap,gain");
    CHECK(lines[1] == "s,t1,0.200000,0.100000");
    CHECK(lines[2] == "s,t2,0.800000,-0.300000");
    // Larger gap pairs with smaller gain: perfect negative correlation.
    CHECK(lines[3] == "pearson,-1.000000");
}

TEST_CASE("gap_gain_table degrades to NA without usable gap variance") {
    TransferReport report;
    report.source = "s";
    TargetRecord only;
    only.target = "t";
    only.acc_mean = 0.6;
    only.baseline_mean = 0.5;
    only.has_gap = true;
    only.gap.value = 0.3;
    report.records = {only};
    auto lines = lines_of(gap_gain_table(report));
    CHECK(lines.back() == "pearson,NA");

    TargetRecord twin = only;
    twin.target = "t2";
    twin.acc_mean = 0.9;  // different gain, identical gap: zero gap variance
    report.records = {only, twin};
    lines = lines_of(gap_gain_table(report));
    CHECK(lines.back() == "pearson,NA");

    // Records without gaps contribute no correlation rows at all.
    TargetRecord bare;
    bare.target = "t3";
    bare.acc_mean = 0.4;
    bare.baseline_mean = 0.1;
    bare.has_gap = false;
    report.records = {only, bare};
    lines = lines_of(gap_gain_table(report));
    REQUIRE(lines.size() == 4);
    CHECK(lines[2] == "s,t3,,0.300000");
    CHECK(lines.back() == "pearson,NA");
}

TEST_CASE("report_csv emits the pinned schema with paired rows") {
    TransferReport report;
    report.source = "europe";
    TargetRecord r;
    r.target = "brazil";
    r.acc_mean = 0.715;
    r.acc_std = 0.074;
    r.baseline_mean = 0.636;
    r.baseline_std = 0.075;
    r.runs = 100;
    r.has_gap = true;
    r.gap.value = 0.842;
    r.gap.dispersion = 0.01;
    TargetRecord bare;
    bare.target = "usa";
    bare.acc_mean = 0.6;
    bare.baseline_mean = 0.5;
    bare.runs = 1;
    bare.has_gap = false;
    report.records = {r, bare};

    auto lines = lines_of(report_csv("airports", "degree:10", 2, report));
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] ==
          "experiment,source,target,method,feature_kind,k,acc_mean,acc_std,runs,gap_mean,gap_std");
    CHECK(lines[1] ==
          "airports,europe,brazil,egi,degree:10,2,0.715000,0.074000,100,0.842000,0.010000");
    CHECK(lines[2] ==
          "airports,europe,brazil,untrained,degree:10,2,0.636000,0.075000,100,0.842000,0.010000");
    CHECK(lines[3] == "airports,europe,usa,egi,degree:10,2,0.600000,0.000000,1,,");
    CHECK(lines[4] == "airports,europe,usa,untrained,degree:10,2,0.500000,0.000000,1,,");
}
