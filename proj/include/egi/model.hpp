#pragma once

// The ego-graph encoder, the per-edge discriminator, the contrastive
// training objective with in-batch negatives, and the training loop.
//
// Encoder: k rounds of directed message passing on the ego's forward
// (leaves-to-center) arcs. Round l updates only hops 0..k-l, each node as a
// graph-isomorphism-network unit: MLP_l((1 + eps_l) * h_v + sum of h_u over
// incoming arcs from other nodes). The center's final row is the embedding.
//
// Discriminator: walks the ego outward from the center. For each
// center-to-leaf ("type_a") edge into hop p it computes
// h = ReLU(W_p^T (m_prev + x_node)), where m_prev is the mean of h-values
// entering the edge's closer endpoint (the raw center feature at hop 0),
// both zero-padded to a common width. An edge is then scored against an
// embedding z as t = U^T ReLU(W^T [h | x_node | z]). Scoring covers only
// the hop-crossing edges, so the objective is invariant to the order of
// same-hop edges by construction.
//
// Loss: per (sample, hop-crossing edge), softplus(-t_pos) + softplus(t_neg)
// where t_pos scores the sample's own embedding and t_neg a deranged batch
// mate's; the loss is the mean over all such contributions.

#include <cstdint>
#include <string>
#include <vector>

#include "egi/ego.hpp"
#include "egi/graph.hpp"
#include "egi/tensor.hpp"

namespace egi {

struct EncoderLayer {
    Tensor w1;   // [in x hidden]
    Tensor b1;   // [1 x hidden]
    Tensor w2;   // [hidden x hidden]
    Tensor b2;   // [1 x hidden]
    Tensor eps;  // [1 x 1], the GIN self-weight offset, initialized to 0
};

struct EncoderParams {
    int k = 2;
    int input_dim = 0;
    int hidden_dim = 32;
    std::vector<EncoderLayer> layers;  // layer 0 maps input_dim -> hidden

    std::vector<Tensor*> parameters();  // stable order: per layer w1,b1,w2,b2,eps
};

struct DiscriminatorParams {
    int k = 2;
    int input_dim = 0;
    int hidden_dim = 32;
    int pad_width = 0;           // max(input_dim, hidden_dim)
    std::vector<Tensor> w_hop;   // k matrices [pad_width x hidden]
    Tensor w_score;              // [(hidden + input + hidden) x hidden]
    Tensor u_score;              // [hidden x 1]

    std::vector<Tensor*> parameters();  // w_hop..., w_score, u_score
};

struct TrainConfig {
    int k = 2;
    int hidden_dim = 32;
    double lr = 0.01;
    int batch_size = 32;
    int epochs = 100;
    int neighbor_cap = 10;
    std::uint64_t seed = 0;
};

struct ModelParams {
    EncoderParams enc;
    DiscriminatorParams disc;
};

// Deterministic Glorot initialization from (cfg, input_dim): encoder layers
// first (weights Glorot, biases and eps zero), then discriminator weights.
// An untrained baseline built with an identical config starts from the
// exact same tensors.
ModelParams init_model(const TrainConfig& cfg, int input_dim);

// Center embedding z [1 x hidden] of one canonical ego sample. The tape
// records gradients for all touched parameters.
Tensor* encode_center(Tape& tape, const EgoSample& sample, EncoderParams& enc);

// Per-hop discriminator codes for the sample's hop-crossing edges.
struct NeighborCodes {
    // index p-1 holds hop p's data; empty tensors are null
    std::vector<Tensor*> h;           // [E_p x hidden] edge representations
    std::vector<Tensor*> x_dst;       // [E_p x input_dim] farther-endpoint features
    std::vector<int> edge_count;      // E_p per hop
};
NeighborCodes encode_neighbors(Tape& tape, const EgoSample& sample, DiscriminatorParams& disc);

// Pre-activation scores [E x 1] for edges with representations h, farther
// features x_dst, against embedding z [1 x hidden].
Tensor* edge_scores(Tape& tape, Tensor* h, Tensor* x_dst, Tensor* z, DiscriminatorParams& disc);

// Contrastive batch loss (see file header). Negatives pair each sample with
// a deranged batch mate chosen by `seed`. Throws std::invalid_argument on
// batch size < 2 or a batch with no hop-crossing edges.
Tensor* egi_loss(Tape& tape, const std::vector<EgoSample>& batch, EncoderParams& enc,
                 DiscriminatorParams& disc, std::uint64_t seed);

struct TrainResult {
    ModelParams model;
    std::vector<double> loss_trace;  // epoch-mean loss, one entry per epoch run
};

// Full training loop: per epoch, shuffle centers, extract capped egos,
// batch (a trailing 1-sample remainder is dropped), minimize with Adam.
// Stops early when the epoch-mean improvement stays below 1e-4 for 5
// consecutive epochs. Deterministic per config.
TrainResult train(const Graph& g, const FeatureMatrix& feats, const TrainConfig& cfg);

// Row v = encode_center over v's exact (uncapped) k-hop ego. Parallel over
// nodes; identical results for any worker count.
FeatureMatrix embed_all(const Graph& g, const FeatureMatrix& feats, EncoderParams& enc, int k);

// Versioned JSON checkpoint holding the config, every parameter tensor, and
// the seed; numbers round-trip exactly. Throws std::runtime_error on I/O or
// format problems.
void save_checkpoint(const std::string& path, const TrainConfig& cfg, const ModelParams& model);
struct Checkpoint {
    TrainConfig cfg;
    ModelParams model;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace egi
