#include "egi/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "egi/parallel.hpp"
#include "egi/rng.hpp"

namespace egi {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Compact arbitrary labels to 0..C-1 (by ascending original label).
std::vector<int> compact_labels(const std::vector<int>& labels, int* class_count) {
    std::map<int, int> remap;
    for (int l : labels) remap.emplace(l, 0);
    int next = 0;
    for (auto& [l, id] : remap) id = next++;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = remap[labels[i]];
    *class_count = next;
    return out;
}

struct MlpRunInput {
    const FeatureMatrix* emb;
    const std::vector<int>* labels;  // compacted
    int class_count;
    std::uint64_t seed;
};

// One seeded stratified-split + train + test round; returns test accuracy.
double mlp_single_run(const MlpRunInput& in, int run) {
    const int n = in.emb->rows;
    const int d = in.emb->dim;
    const int c = in.class_count;
    const int hidden = 32;
    const int epochs = 300;

    // Stratified 80/20 split, both sides nonempty per class.
    std::vector<std::vector<int>> members(static_cast<std::size_t>(c));
    for (int i = 0; i < n; ++i) {
        members[static_cast<std::size_t>((*in.labels)[static_cast<std::size_t>(i)])].push_back(i);
    }
    Rng split_rng(derive_seed(in.seed, static_cast<std::uint64_t>(run), 0x517ULL));
    std::vector<int> train_idx, test_idx;
    for (auto& m : members) {
        split_rng.shuffle(m);
        const int sz = static_cast<int>(m.size());
        int ntrain = static_cast<int>(std::floor(0.8 * sz + 0.5));
        ntrain = std::clamp(ntrain, 1, sz - 1);
        for (int i = 0; i < sz; ++i) (i < ntrain ? train_idx : test_idx).push_back(m[static_cast<std::size_t>(i)]);
    }
    const int ntr = static_cast<int>(train_idx.size());

    Rng init_rng(derive_seed(in.seed, static_cast<std::uint64_t>(run), 0x141ULL));
    Tensor w1 = Tensor::glorot(d, hidden, init_rng);
    Tensor b1 = Tensor::zeros(1, hidden, true);
    Tensor w2 = Tensor::glorot(hidden, c, init_rng);
    Tensor b2 = Tensor::zeros(1, c, true);
    std::vector<Tensor*> params{&w1, &b1, &w2, &b2};
    AdamState opt(params, 0.01);
    for (Tensor* p : params) p->ensure_grad();

    std::vector<double> hval(static_cast<std::size_t>(ntr) * hidden);
    std::vector<double> probs(static_cast<std::size_t>(ntr) * c);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        // forward: H = relu(X.W1 + b1), P = softmax(H.W2 + b2)
        for (int i = 0; i < ntr; ++i) {
            const double* xrow = in.emb->row(train_idx[static_cast<std::size_t>(i)]);
            for (int j = 0; j < hidden; ++j) {
                double s = b1.values[static_cast<std::size_t>(j)];
                for (int f = 0; f < d; ++f) s += xrow[f] * w1.at(f, j);
                hval[static_cast<std::size_t>(i) * hidden + j] = s > 0.0 ? s : 0.0;
            }
            double mx = -1e300;
            for (int j = 0; j < c; ++j) {
                double s = b2.values[static_cast<std::size_t>(j)];
                for (int f = 0; f < hidden; ++f) {
                    s += hval[static_cast<std::size_t>(i) * hidden + f] * w2.at(f, j);
                }
                probs[static_cast<std::size_t>(i) * c + j] = s;
                mx = std::max(mx, s);
            }
            double z = 0.0;
            for (int j = 0; j < c; ++j) {
                double& p = probs[static_cast<std::size_t>(i) * c + j];
                p = std::exp(p - mx);
                z += p;
            }
            for (int j = 0; j < c; ++j) probs[static_cast<std::size_t>(i) * c + j] /= z;
        }
        // backward: dlogits = (P - Y)/ntr
        for (int i = 0; i < ntr; ++i) {
            const int y = (*in.labels)[static_cast<std::size_t>(train_idx[static_cast<std::size_t>(i)])];
            const double* xrow = in.emb->row(train_idx[static_cast<std::size_t>(i)]);
            for (int j = 0; j < c; ++j) {
                const double dl =
                    (probs[static_cast<std::size_t>(i) * c + j] - (j == y ? 1.0 : 0.0)) /
                    static_cast<double>(ntr);
                if (dl == 0.0) continue;
                b2.grad[static_cast<std::size_t>(j)] += dl;
                for (int f = 0; f < hidden; ++f) {
                    w2.grad[static_cast<std::size_t>(f) * c + j] +=
                        hval[static_cast<std::size_t>(i) * hidden + f] * dl;
                }
            }
            // dH = dlogits . W2^T, masked by relu
            for (int f = 0; f < hidden; ++f) {
                if (hval[static_cast<std::size_t>(i) * hidden + f] <= 0.0) continue;
                double dh = 0.0;
                for (int j = 0; j < c; ++j) {
                    dh += (probs[static_cast<std::size_t>(i) * c + j] - ((*in.labels)[static_cast<std::size_t>(train_idx[static_cast<std::size_t>(i)])] == j ? 1.0 : 0.0)) /
                          static_cast<double>(ntr) * w2.at(f, j);
                }
                b1.grad[static_cast<std::size_t>(f)] += dh;
                for (int ff = 0; ff < d; ++ff) {
                    w1.grad[static_cast<std::size_t>(ff) * hidden + f] += xrow[ff] * dh;
                }
            }
        }
        adam_step(opt, params);  // zeroes grads
    }

    // test accuracy, argmax with smallest-index tie break
    int correct = 0;
    for (int idx : test_idx) {
        const double* xrow = in.emb->row(idx);
        double hbuf[32];
        for (int j = 0; j < hidden; ++j) {
            double s = b1.values[static_cast<std::size_t>(j)];
            for (int f = 0; f < d; ++f) s += xrow[f] * w1.at(f, j);
            hbuf[j] = s > 0.0 ? s : 0.0;
        }
        int best = 0;
        double bestv = -1e300;
        for (int j = 0; j < c; ++j) {
            double s = b2.values[static_cast<std::size_t>(j)];
            for (int f = 0; f < hidden; ++f) s += hbuf[f] * w2.at(f, j);
            if (s > bestv) {
                bestv = s;
                best = j;
            }
        }
        if (best == (*in.labels)[static_cast<std::size_t>(idx)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_idx.size());
}

}  // namespace

double knn_accuracy(const FeatureMatrix& emb, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != emb.rows) {
        throw std::invalid_argument("knn_accuracy: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(emb.rows) + " rows");
    }
    const int n = emb.rows;
    std::map<int, int> class_size;
    for (int l : labels) class_size[l] += 1;

    double total = 0.0;
    int eligible = 0;
    std::vector<std::pair<double, int>> order(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        const int cv = class_size[labels[static_cast<std::size_t>(v)]];
        if (cv < 2) continue;
        for (int u = 0; u < n; ++u) {
            double d2 = 0.0;
            for (int f = 0; f < emb.dim; ++f) {
                const double diff = emb.at(v, f) - emb.at(u, f);
                d2 += diff * diff;
            }
            order[static_cast<std::size_t>(u)] = {d2, u};
        }
        order[static_cast<std::size_t>(v)] = {std::numeric_limits<double>::infinity(), v};
        std::sort(order.begin(), order.end());  // ties break toward smaller index
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
    if (eligible == 0) {
        throw std::invalid_argument("knn_accuracy: no class has >= 2 members");
    }
    return total / static_cast<double>(eligible);
}

EvalStats mlp_eval(const FeatureMatrix& emb, const std::vector<int>& labels, int runs,
                   std::uint64_t seed) {
    if (static_cast<int>(labels.size()) != emb.rows) {
        throw std::invalid_argument("mlp_eval: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(emb.rows) + " rows");
    }
    if (runs < 1) throw std::invalid_argument("mlp_eval: runs must be >= 1");
    MlpRunInput in;
    std::vector<int> compacted = compact_labels(labels, &in.class_count);
    if (in.class_count < 2) {
        throw std::invalid_argument("mlp_eval: need at least 2 classes");
    }
    std::vector<int> counts(static_cast<std::size_t>(in.class_count), 0);
    for (int l : compacted) counts[static_cast<std::size_t>(l)] += 1;
    for (std::size_t ci = 0; ci < counts.size(); ++ci) {
        if (counts[ci] < 2) {
            throw std::invalid_argument("mlp_eval: a class has fewer than 2 members");
        }
    }
    in.emb = &emb;
    in.labels = &compacted;
    in.seed = seed;

    std::vector<double> accs(static_cast<std::size_t>(runs), 0.0);
    parallel_for(static_cast<std::size_t>(runs),
                 [&](std::size_t r) { accs[r] = mlp_single_run(in, static_cast<int>(r)); });

    EvalStats st;
    for (double a : accs) st.mean += a;
    st.mean /= static_cast<double>(runs);
    double var = 0.0;
    for (double a : accs) var += (a - st.mean) * (a - st.mean);
    st.std_dev = std::sqrt(var / static_cast<double>(runs));
    return st;
}

TransferReport evaluate_transfer(const std::string& source_name, const Graph& source,
                                 ModelParams& trained, const std::vector<EvalTarget>& targets,
                                 const TrainConfig& cfg, const EvalOptions& opts) {
    ModelParams baseline = init_model(cfg, trained.enc.input_dim);

    TransferReport report;
    report.source = source_name;
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const EvalTarget& t = targets[ti];
        FeatureMatrix emb = embed_all(t.graph, t.feats, trained.enc, cfg.k);
        FeatureMatrix emb0 = embed_all(t.graph, t.feats, baseline.enc, cfg.k);
        TargetRecord rec;
        rec.target = t.name;
        if (t.use_mlp) {
            const EvalStats a = mlp_eval(emb, t.labels, opts.mlp_runs, opts.eval_seed);
            const EvalStats b = mlp_eval(emb0, t.labels, opts.mlp_runs, opts.eval_seed);
            rec.acc_mean = a.mean;
            rec.acc_std = a.std_dev;
            rec.baseline_mean = b.mean;
            rec.baseline_std = b.std_dev;
            rec.runs = opts.mlp_runs;
        } else {
            rec.acc_mean = knn_accuracy(emb, t.labels);
            rec.baseline_mean = knn_accuracy(emb0, t.labels);
            rec.runs = 1;
        }
        if (opts.attach_gaps) {
            rec.has_gap = true;
            // Independent sampling stream per target so suite means average
            // uncorrelated estimates.
            rec.gap = opts.gap_pairs == 0
                          ? egi_gap_full(source, t.graph, cfg.k, opts.gap_cap)
                          : egi_gap_sampled(source, t.graph, cfg.k, opts.gap_pairs,
                                            derive_seed(opts.gap_seed, ti), opts.gap_cap);
        }
        report.records.push_back(std::move(rec));
    }
    return report;
}

TransferReport direct_transfer(const std::string& source_name, const Graph& source,
                               const FeatureMatrix& source_feats,
                               const std::vector<EvalTarget>& targets, const TrainConfig& cfg,
                               const EvalOptions& opts) {
    for (const auto& t : targets) {
        if (t.feats.dim != source_feats.dim) {
            throw std::invalid_argument(
                "direct_transfer: transferable features must share one dimension; source d=" +
                std::to_string(source_feats.dim) + " but target '" + t.name +
                "' has d=" + std::to_string(t.feats.dim));
        }
    }
    TrainResult trained = train(source, source_feats, cfg);
    return evaluate_transfer(source_name, source, trained.model, targets, cfg, opts);
}

std::string gap_gain_table(const TransferReport& report) {
    std::string out = "source,target,gap,gain\n";
    std::vector<double> gaps, gains;
    for (const auto& r : report.records) {
        const double gain = r.acc_mean - r.baseline_mean;
        out += report.source + "," + r.target + ",";
        if (r.has_gap) {
            out += fmt(r.gap.value);
            gaps.push_back(r.gap.value);
            gains.push_back(gain);
        }
        out += "," + fmt(gain) + "\n";
    }
    double pearson = 0.0;
    bool defined = gaps.size() >= 2;
    if (defined) {
        double mg = 0.0, ma = 0.0;
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            mg += gaps[i];
            ma += gains[i];
        }
        mg /= static_cast<double>(gaps.size());
        ma /= static_cast<double>(gains.size());
        double sgg = 0.0, saa = 0.0, sga = 0.0;
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            sgg += (gaps[i] - mg) * (gaps[i] - mg);
            saa += (gains[i] - ma) * (gains[i] - ma);
            sga += (gaps[i] - mg) * (gains[i] - ma);
        }
        if (sgg <= 0.0 || saa <= 0.0) {
            defined = false;
        } else {
            pearson = sga / std::sqrt(sgg * saa);
        }
    }
    out += "pearson,";
    out += defined ? fmt(pearson) : "NA";
    out += "\n";
    return out;
}

std::string report_csv(const std::string& experiment, const std::string& feature_kind, int k,
                       const TransferReport& report) {
    std::string out =
        "experiment,source,target,method,feature_kind,k,acc_mean,acc_std,runs,gap_mean,gap_std\n";
    for (const auto& r : report.records) {
        const std::string gap_mean = r.has_gap ? fmt(r.gap.value) : "";
        const std::string gap_std = r.has_gap ? fmt(r.gap.dispersion) : "";
        out += experiment + "," + report.source + "," + r.target + ",egi," + feature_kind + "," +
               std::to_string(k) + "," + fmt(r.acc_mean) + "," + fmt(r.acc_std) + "," +
               std::to_string(r.runs) + "," + gap_mean + "," + gap_std + "\n";
        out += experiment + "," + report.source + "," + r.target + ",untrained," + feature_kind +
               "," + std::to_string(k) + "," + fmt(r.baseline_mean) + "," + fmt(r.baseline_std) +
               "," + std::to_string(r.runs) + "," + gap_mean + "," + gap_std + "\n";
    }
    return out;
}

}  // namespace egi
