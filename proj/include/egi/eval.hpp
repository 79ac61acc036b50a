#pragma once

// Downstream evaluation on frozen embeddings: structural k-NN accuracy,
// MLP role classification, the direct-transfer harness (train on a source,
// embed targets with frozen parameters, compare against the untrained
// initialization), and gap-vs-gain correlation reports.

#include <cstdint>
#include <string>
#include <vector>

#include "egi/graph.hpp"
#include "egi/model.hpp"
#include "egi/spectral.hpp"

namespace egi {

struct EvalStats {
    double mean = 0.0;
    double std_dev = 0.0;  // population std over runs
};

// Structural-equivalence score: for every node v whose label class has
// c_v >= 2 members, take its c_v - 1 nearest other rows by Euclidean
// distance (ties broken by smaller row index) and count label matches;
// return the mean of per-node match fractions over eligible nodes.
// Throws std::invalid_argument when no node is eligible or sizes mismatch.
double knn_accuracy(const FeatureMatrix& emb, const std::vector<int>& labels);

// Frozen-embedding classifier: per run, a seeded stratified 80/20 split,
// then a one-hidden-layer perceptron (hidden 32, ReLU, softmax cross
// entropy, Adam lr 0.01, 300 epochs, full batch) on the training rows;
// returns mean/std of test accuracy over `runs` runs. Runs execute in
// parallel; results are independent of worker count. Throws
// std::invalid_argument when any present class has < 2 members or fewer
// than 2 classes exist.
EvalStats mlp_eval(const FeatureMatrix& emb, const std::vector<int>& labels, int runs,
                   std::uint64_t seed);

struct EvalTarget {
    std::string name;
    Graph graph;
    FeatureMatrix feats;
    std::vector<int> labels;
    bool use_mlp = false;  // false: knn_accuracy (single deterministic run)
};

struct EvalOptions {
    int mlp_runs = 100;
    std::uint64_t eval_seed = 7;
    bool attach_gaps = true;
    long gap_pairs = 0;  // 0 = full enumeration
    std::uint64_t gap_seed = 11;
    int gap_cap = 10;
};

struct TargetRecord {
    std::string target;
    double acc_mean = 0.0;
    double acc_std = 0.0;
    double baseline_mean = 0.0;  // untrained encoder, identical initialization
    double baseline_std = 0.0;
    int runs = 1;
    bool has_gap = false;
    GapEstimate gap;
};

struct TransferReport {
    std::string source;
    std::vector<TargetRecord> records;
};

// Evaluation core shared by direct_transfer and checkpoint-resuming
// drivers: embeds every target with the given trained parameters and with a
// fresh untrained initialization of the same config, evaluates both, and
// (optionally) attaches source→target gap estimates. Sampled gaps draw an
// independent stream per target derived from opts.gap_seed.
TransferReport evaluate_transfer(const std::string& source_name, const Graph& source,
                                 ModelParams& trained, const std::vector<EvalTarget>& targets,
                                 const TrainConfig& cfg, const EvalOptions& opts);

// Train on the source, then embed every target with the frozen encoder and
// evaluate; the baseline repeats the evaluation with the untrained
// initialization (same config, same seed-derived tensors the training run
// started from). Feature dimensions must match across all graphs —
// transferable features are structure-respecting vectors in one shared
// space — otherwise throws std::invalid_argument.
TransferReport direct_transfer(const std::string& source_name, const Graph& source,
                               const FeatureMatrix& source_feats,
                               const std::vector<EvalTarget>& targets, const TrainConfig& cfg,
                               const EvalOptions& opts);

// CSV: header "source,target,gap,gain", one row per target (gain = trained
// minus baseline accuracy), then a trailing "pearson,<r>" row correlating
// gap with gain ("pearson,NA" when fewer than 2 gap-bearing rows or zero
// variance).
std::string gap_gain_table(const TransferReport& report);

// Pinned report schema:
// experiment,source,target,method,feature_kind,k,acc_mean,acc_std,runs,gap_mean,gap_std
// with one "egi" row and one "untrained" row per target (gap fields empty
// when no gap was attached).
std::string report_csv(const std::string& experiment, const std::string& feature_kind, int k,
                       const TransferReport& report);

}  // namespace egi
