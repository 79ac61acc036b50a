#include "egi/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "egi/parallel.hpp"
#include "egi/rng.hpp"

namespace egi {

namespace {

using nlohmann::json;

constexpr std::uint64_t kInitTag = 0x12170001ULL;
constexpr std::uint64_t kEpochTag = 0xE0ULL;
constexpr std::uint64_t kShuffleTag = 0x5FULL;
constexpr std::uint64_t kBatchTag = 0xBAULL;

// type_a edges whose farther endpoint sits in hop p, in edges_typed order.
std::vector<TypedEdge> hop_cross_edges(const EgoGraph& ego, int p) {
    std::vector<TypedEdge> out;
    for (const auto& e : ego.edges_typed) {
        if (e.kind == EdgeKind::type_a && e.p == p) out.push_back(e);
    }
    return out;
}

}  // namespace

std::vector<Tensor*> EncoderParams::parameters() {
    std::vector<Tensor*> out;
    for (auto& l : layers) {
        out.push_back(&l.w1);
        out.push_back(&l.b1);
        out.push_back(&l.w2);
        out.push_back(&l.b2);
        out.push_back(&l.eps);
    }
    return out;
}

std::vector<Tensor*> DiscriminatorParams::parameters() {
    std::vector<Tensor*> out;
    for (auto& w : w_hop) out.push_back(&w);
    out.push_back(&w_score);
    out.push_back(&u_score);
    return out;
}

ModelParams init_model(const TrainConfig& cfg, int input_dim) {
    if (cfg.k < 1 || cfg.hidden_dim < 1 || input_dim < 1) {
        throw std::invalid_argument("init_model: k, hidden_dim, input_dim must be positive");
    }
    Rng rng(derive_seed(cfg.seed, kInitTag));
    ModelParams mp;
    mp.enc.k = cfg.k;
    mp.enc.input_dim = input_dim;
    mp.enc.hidden_dim = cfg.hidden_dim;
    for (int l = 0; l < cfg.k; ++l) {
        const int in = l == 0 ? input_dim : cfg.hidden_dim;
        EncoderLayer layer;
        layer.w1 = Tensor::glorot(in, cfg.hidden_dim, rng);
        layer.b1 = Tensor::zeros(1, cfg.hidden_dim, true);
        layer.w2 = Tensor::glorot(cfg.hidden_dim, cfg.hidden_dim, rng);
        layer.b2 = Tensor::zeros(1, cfg.hidden_dim, true);
        layer.eps = Tensor::zeros(1, 1, true);
        mp.enc.layers.push_back(std::move(layer));
    }
    mp.disc.k = cfg.k;
    mp.disc.input_dim = input_dim;
    mp.disc.hidden_dim = cfg.hidden_dim;
    mp.disc.pad_width = std::max(input_dim, cfg.hidden_dim);
    for (int p = 0; p < cfg.k; ++p) {
        mp.disc.w_hop.push_back(Tensor::glorot(mp.disc.pad_width, cfg.hidden_dim, rng));
    }
    mp.disc.w_score =
        Tensor::glorot(cfg.hidden_dim + input_dim + cfg.hidden_dim, cfg.hidden_dim, rng);
    mp.disc.u_score = Tensor::glorot(cfg.hidden_dim, 1, rng);
    return mp;
}

Tensor* encode_center(Tape& tape, const EgoSample& sample, EncoderParams& enc) {
    const EgoGraph& ego = sample.ego;
    if (sample.features.dim != enc.input_dim) {
        throw std::invalid_argument("encode_center: feature dim " +
                                    std::to_string(sample.features.dim) + " vs encoder input " +
                                    std::to_string(enc.input_dim));
    }
    if (ego.k != static_cast<int>(enc.layers.size())) {
        throw std::invalid_argument("encode_center: ego k " + std::to_string(ego.k) +
                                    " vs encoder depth " + std::to_string(enc.layers.size()));
    }
    const int k = ego.k;
    Tensor* x = tape.constant(sample.features.rows, sample.features.dim, sample.features.values);

    std::vector<int> nhop(static_cast<std::size_t>(k) + 1), off(static_cast<std::size_t>(k) + 1);
    std::vector<Tensor*> h(static_cast<std::size_t>(k) + 1, nullptr);
    for (int p = 0; p <= k; ++p) {
        off[static_cast<std::size_t>(p)] = ego.hop_offset(p);
        nhop[static_cast<std::size_t>(p)] = static_cast<int>(ego.hops[static_cast<std::size_t>(p)].size());
        if (nhop[static_cast<std::size_t>(p)] > 0) {
            h[static_cast<std::size_t>(p)] =
                tape.slice_rows(x, off[static_cast<std::size_t>(p)],
                                off[static_cast<std::size_t>(p)] + nhop[static_cast<std::size_t>(p)]);
        }
    }

    // Structural aggregation matrices, shared across layers: into[p] gathers
    // hop p+1 rows along the hop-crossing arcs, within[p] gathers same-hop
    // rows along both directions of the same-hop edges. The (1 + eps) term
    // is the node's only self-contribution.
    std::vector<SparseConst*> into(static_cast<std::size_t>(k), nullptr);
    std::vector<SparseConst*> within(static_cast<std::size_t>(k) + 1, nullptr);
    for (const auto& e : ego.edges_typed) {
        if (e.kind == EdgeKind::type_a) {
            auto& s = into[static_cast<std::size_t>(e.p) - 1];
            if (!s) s = tape.sparse(nhop[static_cast<std::size_t>(e.p) - 1], nhop[static_cast<std::size_t>(e.p)]);
            s->add(e.src_q, e.dst_q, 1.0);
        } else {
            auto& s = within[static_cast<std::size_t>(e.p)];
            if (!s) s = tape.sparse(nhop[static_cast<std::size_t>(e.p)], nhop[static_cast<std::size_t>(e.p)]);
            s->add(e.src_q, e.dst_q, 1.0);
            s->add(e.dst_q, e.src_q, 1.0);
        }
    }

    for (int l = 0; l < k; ++l) {
        EncoderLayer& layer = enc.layers[static_cast<std::size_t>(l)];
        const int pmax = k - (l + 1);
        std::vector<Tensor*> next = h;
        Tensor* one_plus_eps = tape.add_const(&layer.eps, 1.0);
        for (int p = 0; p <= pmax; ++p) {
            if (!h[static_cast<std::size_t>(p)]) continue;
            Tensor* agg = tape.scale_by_scalar(h[static_cast<std::size_t>(p)], one_plus_eps);
            if (p < k && into[static_cast<std::size_t>(p)] && h[static_cast<std::size_t>(p) + 1]) {
                agg = tape.add(agg, tape.spmm(*into[static_cast<std::size_t>(p)],
                                              h[static_cast<std::size_t>(p) + 1]));
            }
            if (within[static_cast<std::size_t>(p)]) {
                agg = tape.add(agg, tape.spmm(*within[static_cast<std::size_t>(p)],
                                              h[static_cast<std::size_t>(p)]));
            }
            Tensor* hid = tape.relu(tape.add_rowvec(tape.matmul(agg, &layer.w1), &layer.b1));
            next[static_cast<std::size_t>(p)] =
                tape.add_rowvec(tape.matmul(hid, &layer.w2), &layer.b2);
        }
        h = next;  // hops above pmax keep stale values; nothing reads them again
    }
    return h[0];  // hop 0 is exactly the center row
}

NeighborCodes encode_neighbors(Tape& tape, const EgoSample& sample, DiscriminatorParams& disc) {
    const EgoGraph& ego = sample.ego;
    if (sample.features.dim != disc.input_dim) {
        throw std::invalid_argument("encode_neighbors: feature dim " +
                                    std::to_string(sample.features.dim) +
                                    " vs discriminator input " + std::to_string(disc.input_dim));
    }
    const int k = ego.k;
    const int w = disc.pad_width;
    NeighborCodes out;
    out.h.assign(static_cast<std::size_t>(k), nullptr);
    out.x_dst.assign(static_cast<std::size_t>(k), nullptr);
    out.edge_count.assign(static_cast<std::size_t>(k), 0);

    Tensor* x = tape.constant(sample.features.rows, sample.features.dim, sample.features.values);
    Tensor* xpad = w > sample.features.dim ? tape.pad_cols(x, w) : x;
    Tensor* m_prev = tape.slice_rows(xpad, 0, 1);  // hop-0 base: the raw center feature

    for (int p = 1; p <= k; ++p) {
        const int np = static_cast<int>(ego.hops[static_cast<std::size_t>(p)].size());
        const auto edges = hop_cross_edges(ego, p);
        if (edges.empty()) break;  // deeper hops are unreachable too
        const int ecount = static_cast<int>(edges.size());
        out.edge_count[static_cast<std::size_t>(p) - 1] = ecount;

        SparseConst* pick_src = tape.sparse(ecount, m_prev->rows);
        SparseConst* pick_dst = tape.sparse(ecount, np);
        std::vector<int> incoming(static_cast<std::size_t>(np), 0);
        for (int e = 0; e < ecount; ++e) {
            pick_src->add(e, edges[static_cast<std::size_t>(e)].src_q, 1.0);
            pick_dst->add(e, edges[static_cast<std::size_t>(e)].dst_q, 1.0);
            incoming[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].dst_q)] += 1;
        }

        const int hop_off = ego.hop_offset(p);
        Tensor* x_hop_pad = tape.slice_rows(xpad, hop_off, hop_off + np);
        Tensor* inp = tape.add(tape.spmm(*pick_src, m_prev), tape.spmm(*pick_dst, x_hop_pad));
        Tensor* hp = tape.relu(tape.matmul(inp, &disc.w_hop[static_cast<std::size_t>(p) - 1]));
        out.h[static_cast<std::size_t>(p) - 1] = hp;

        Tensor* x_hop_raw = tape.slice_rows(x, hop_off, hop_off + np);
        out.x_dst[static_cast<std::size_t>(p) - 1] = tape.spmm(*pick_dst, x_hop_raw);

        if (p == k) break;  // no deeper hop needs the mean
        SparseConst* avg = tape.sparse(np, ecount);
        for (int e = 0; e < ecount; ++e) {
            const int q = edges[static_cast<std::size_t>(e)].dst_q;
            avg->add(q, e, 1.0 / static_cast<double>(incoming[static_cast<std::size_t>(q)]));
        }
        Tensor* mh = tape.spmm(*avg, hp);  // per-node mean of entering h rows
        m_prev = w > disc.hidden_dim ? tape.pad_cols(mh, w) : mh;
    }
    return out;
}

Tensor* edge_scores(Tape& tape, Tensor* h, Tensor* x_dst, Tensor* z, DiscriminatorParams& disc) {
    SparseConst* tile = tape.sparse(h->rows, 1);
    for (int e = 0; e < h->rows; ++e) tile->add(e, 0, 1.0);
    Tensor* ztile = tape.spmm(*tile, z);
    Tensor* v = tape.concat_cols({h, x_dst, ztile});
    return tape.matmul(tape.relu(tape.matmul(v, &disc.w_score)), &disc.u_score);
}

Tensor* egi_loss(Tape& tape, const std::vector<EgoSample>& batch, EncoderParams& enc,
                 DiscriminatorParams& disc, std::uint64_t seed) {
    if (batch.size() < 2) {
        throw std::invalid_argument("egi_loss: batch needs >= 2 samples for in-batch negatives");
    }
    std::vector<Tensor*> z;
    z.reserve(batch.size());
    for (const auto& s : batch) z.push_back(encode_center(tape, s, enc));

    // Seeded derangement: resample the shuffle until it is fixed-point-free.
    Rng rng(seed);
    std::vector<int> pi(batch.size());
    std::iota(pi.begin(), pi.end(), 0);
    for (;;) {
        rng.shuffle(pi);
        bool fixed = false;
        for (std::size_t i = 0; i < pi.size(); ++i) {
            if (pi[i] == static_cast<int>(i)) {
                fixed = true;
                break;
            }
        }
        if (!fixed) break;
    }

    Tensor* total = nullptr;
    long count = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        NeighborCodes nc = encode_neighbors(tape, batch[i], disc);
        for (std::size_t p = 0; p < nc.h.size(); ++p) {
            if (!nc.h[p]) continue;
            Tensor* t_pos = edge_scores(tape, nc.h[p], nc.x_dst[p], z[i], disc);
            Tensor* t_neg =
                edge_scores(tape, nc.h[p], nc.x_dst[p], z[static_cast<std::size_t>(pi[i])], disc);
            Tensor* contrib = tape.add(tape.sum_all(tape.softplus(tape.scalar_mul(t_pos, -1.0))),
                                       tape.sum_all(tape.softplus(t_neg)));
            total = total ? tape.add(total, contrib) : contrib;
            count += nc.edge_count[p];
        }
    }
    if (count == 0) {
        throw std::invalid_argument("egi_loss: batch has no hop-crossing edges to score");
    }
    return tape.scalar_mul(total, 1.0 / static_cast<double>(count));
}

TrainResult train(const Graph& g, const FeatureMatrix& feats, const TrainConfig& cfg) {
    if (feats.rows != g.node_count) {
        throw std::invalid_argument("train: feature rows " + std::to_string(feats.rows) +
                                    " vs node count " + std::to_string(g.node_count));
    }
    if (cfg.batch_size < 2 || cfg.epochs < 0 || cfg.lr <= 0.0 || cfg.neighbor_cap < 0) {
        throw std::invalid_argument("train: invalid config");
    }
    if (g.node_count < 2) {
        throw std::invalid_argument("train: need at least 2 nodes for in-batch negatives");
    }

    TrainResult result;
    result.model = init_model(cfg, feats.dim);
    std::vector<Tensor*> params = result.model.enc.parameters();
    for (Tensor* t : result.model.disc.parameters()) params.push_back(t);
    AdamState opt(params, cfg.lr);

    double prev = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::uint64_t epoch_seed =
            derive_seed(cfg.seed, kEpochTag, static_cast<std::uint64_t>(epoch));
        std::vector<int> centers(static_cast<std::size_t>(g.node_count));
        std::iota(centers.begin(), centers.end(), 0);
        Rng shuffle_rng(derive_seed(epoch_seed, kShuffleTag));
        shuffle_rng.shuffle(centers);

        double epoch_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < centers.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(centers.size(), start + static_cast<std::size_t>(cfg.batch_size));
            if (stop - start < 2) continue;  // a 1-sample remainder cannot form negatives
            std::vector<EgoSample> batch;
            batch.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                EgoGraph ego = canonical_order(
                    extract_ego(g, centers[i], cfg.k, cfg.neighbor_cap, epoch_seed));
                batch.push_back(make_sample(ego, feats));
            }
            Tape tape;
            Tensor* loss =
                egi_loss(tape, batch, result.model.enc, result.model.disc,
                         derive_seed(epoch_seed, kBatchTag, static_cast<std::uint64_t>(batches)));
            tape.backward(loss);
            adam_step(opt, params);
            epoch_sum += loss->values[0];
            batches += 1;
        }
        const double epoch_mean = epoch_sum / static_cast<double>(batches);
        result.loss_trace.push_back(epoch_mean);
        stall = (prev - epoch_mean < 1e-4) ? stall + 1 : 0;
        prev = epoch_mean;
        if (stall >= 5) break;
    }
    return result;
}

FeatureMatrix embed_all(const Graph& g, const FeatureMatrix& feats, EncoderParams& enc, int k) {
    FeatureMatrix out;
    out.rows = g.node_count;
    out.dim = enc.hidden_dim;
    out.values.assign(static_cast<std::size_t>(out.rows) * out.dim, 0.0);
    parallel_for(static_cast<std::size_t>(g.node_count), [&](std::size_t v) {
        EgoGraph ego = canonical_order(extract_ego(g, static_cast<int>(v), k));
        EgoSample sample = make_sample(ego, feats);
        Tape tape;
        Tensor* z = encode_center(tape, sample, enc);
        std::copy(z->values.begin(), z->values.end(),
                  out.values.begin() + static_cast<std::ptrdiff_t>(v * static_cast<std::size_t>(out.dim)));
    });
    return out;
}

namespace {

json tensor_to_json(const Tensor& t) {
    return json{{"rows", t.rows}, {"cols", t.cols}, {"values", t.values}};
}

Tensor tensor_from_json(const json& j, bool requires_grad) {
    return Tensor::from(j.at("rows").get<int>(), j.at("cols").get<int>(),
                        j.at("values").get<std::vector<double>>(), requires_grad);
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainConfig& cfg, const ModelParams& model) {
    json j;
    j["format"] = "egi-checkpoint";
    j["version"] = 1;
    j["config"] = {{"k", cfg.k},
                   {"hidden_dim", cfg.hidden_dim},
                   {"lr", cfg.lr},
                   {"batch_size", cfg.batch_size},
                   {"epochs", cfg.epochs},
                   {"neighbor_cap", cfg.neighbor_cap},
                   {"seed", cfg.seed}};
    j["input_dim"] = model.enc.input_dim;
    json layers = json::array();
    for (const auto& l : model.enc.layers) {
        layers.push_back({{"w1", tensor_to_json(l.w1)},
                          {"b1", tensor_to_json(l.b1)},
                          {"w2", tensor_to_json(l.w2)},
                          {"b2", tensor_to_json(l.b2)},
                          {"eps", tensor_to_json(l.eps)}});
    }
    j["encoder"] = {{"layers", layers}};
    json hops = json::array();
    for (const auto& w : model.disc.w_hop) hops.push_back(tensor_to_json(w));
    j["discriminator"] = {{"w_hop", hops},
                          {"w_score", tensor_to_json(model.disc.w_score)},
                          {"u_score", tensor_to_json(model.disc.u_score)}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_checkpoint: " + path + " is not valid JSON: " + e.what());
    }
    if (j.value("format", "") != "egi-checkpoint" || j.value("version", 0) != 1) {
        throw std::runtime_error("load_checkpoint: " + path + " has unknown format/version");
    }
    Checkpoint cp;
    const json& c = j.at("config");
    cp.cfg.k = c.at("k").get<int>();
    cp.cfg.hidden_dim = c.at("hidden_dim").get<int>();
    cp.cfg.lr = c.at("lr").get<double>();
    cp.cfg.batch_size = c.at("batch_size").get<int>();
    cp.cfg.epochs = c.at("epochs").get<int>();
    cp.cfg.neighbor_cap = c.at("neighbor_cap").get<int>();
    cp.cfg.seed = c.at("seed").get<std::uint64_t>();

    const int input_dim = j.at("input_dim").get<int>();
    cp.model.enc.k = cp.cfg.k;
    cp.model.enc.input_dim = input_dim;
    cp.model.enc.hidden_dim = cp.cfg.hidden_dim;
    for (const auto& l : j.at("encoder").at("layers")) {
        EncoderLayer layer;
        layer.w1 = tensor_from_json(l.at("w1"), true);
        layer.b1 = tensor_from_json(l.at("b1"), true);
        layer.w2 = tensor_from_json(l.at("w2"), true);
        layer.b2 = tensor_from_json(l.at("b2"), true);
        layer.eps = tensor_from_json(l.at("eps"), true);
        cp.model.enc.layers.push_back(std::move(layer));
    }
    cp.model.disc.k = cp.cfg.k;
    cp.model.disc.input_dim = input_dim;
    cp.model.disc.hidden_dim = cp.cfg.hidden_dim;
    cp.model.disc.pad_width = std::max(input_dim, cp.cfg.hidden_dim);
    for (const auto& w : j.at("discriminator").at("w_hop")) {
        cp.model.disc.w_hop.push_back(tensor_from_json(w, true));
    }
    cp.model.disc.w_score = tensor_from_json(j.at("discriminator").at("w_score"), true);
    cp.model.disc.u_score = tensor_from_json(j.at("discriminator").at("u_score"), true);
    if (static_cast<int>(cp.model.enc.layers.size()) != cp.cfg.k ||
        static_cast<int>(cp.model.disc.w_hop.size()) != cp.cfg.k) {
        throw std::runtime_error("load_checkpoint: layer count does not match config k");
    }
    return cp;
}

}  // namespace egi
