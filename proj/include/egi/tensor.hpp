#pragma once

// Minimal dense tensor arithmetic with reverse-mode differentiation and an
// Adam optimizer: just enough machinery to train a small message-passing
// encoder and edge discriminator in double precision.
//
// Model: a Tape records operations in execution order; backward() replays
// the recorded local-gradient closures in exact reverse order. Tensors
// created by tape ops are owned by the tape; externally owned tensors
// (parameters, constant inputs) may be passed to any op and must outlive
// the tape. Parameter gradients accumulate across backward() calls until
// explicitly zeroed (adam_step zeroes them after applying an update);
// tape-internal gradients are reset at the start of every backward().
//
// A Tape is single-threaded. Independent tapes may run concurrently as long
// as they never share an output tensor; sharing read-only inputs is fine.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "egi/rng.hpp"

namespace egi {

struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;  // row-major, rows*cols entries
    std::vector<double> grad;    // empty until touched; then same shape
    bool requires_grad = false;  // gradient flows into this tensor

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor full(int rows, int cols, double value, bool requires_grad = false);
    // Row-major init from a flat list; list size must equal rows*cols.
    static Tensor from(int rows, int cols, std::vector<double> values,
                       bool requires_grad = false);
    // Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)) = sqrt(6/(rows+cols)),
    // drawn row-major from rng; requires_grad = true.
    static Tensor glorot(int rows, int cols, Rng& rng);

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return values.size(); }

    void ensure_grad();  // allocate zero-filled grad if absent
    void zero_grad();    // zero (and allocate) grad
};

// Constant sparse matrix in coordinate form, used for structural
// propagation (adjacency, row selection, row averaging). Never receives
// gradients; entries are fixed at construction.
struct SparseConst {
    int rows = 0;
    int cols = 0;
    std::vector<int> r;
    std::vector<int> c;
    std::vector<double> v;

    void add(int row, int col, double value);
};

class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Tape-owned constant (requires_grad = false), e.g. a feature block.
    Tensor* constant(int rows, int cols, std::vector<double> values);
    // Tape-owned sparse constant: fill via add(), then pass to spmm. Owning
    // it here guarantees it outlives the recorded closures.
    SparseConst* sparse(int rows, int cols);

    // out = a . b                                    [m x k] . [k x n]
    Tensor* matmul(Tensor* a, Tensor* b);
    // out = s . x with s constant                    [m x k] . [k x n]
    Tensor* spmm(const SparseConst& s, Tensor* x);
    // out = a + b (same shape)
    Tensor* add(Tensor* a, Tensor* b);
    // out = a + row broadcast over rows              a [m x n], row [1 x n]
    Tensor* add_rowvec(Tensor* a, Tensor* row);
    // out = horizontal concatenation (equal row counts)
    Tensor* concat_cols(const std::vector<Tensor*>& parts);
    Tensor* relu(Tensor* a);
    Tensor* sigmoid(Tensor* a);
    // max(t, 0) + log1p(exp(-|t|)): overflow-safe at any magnitude
    Tensor* softplus(Tensor* a);
    // column means: [m x n] -> [1 x n]
    Tensor* mean_rows(Tensor* a);
    // sum of all entries: -> [1 x 1]
    Tensor* sum_all(Tensor* a);
    // out = c * a, c a plain number
    Tensor* scalar_mul(Tensor* a, double c);
    // out = a + c elementwise
    Tensor* add_const(Tensor* a, double c);
    // out = s[0,0] * a with s a trainable [1 x 1] tensor
    Tensor* scale_by_scalar(Tensor* a, Tensor* s);
    // zero-pad on the right to `width` columns (width >= a->cols)
    Tensor* pad_cols(Tensor* a, int width);
    // rows [r0, r1) of a
    Tensor* slice_rows(Tensor* a, int r0, int r1);

    // Seed d(loss)/d(loss) = 1 and replay recorded closures in reverse.
    // Throws std::invalid_argument unless loss is 1x1. Parameter gradients
    // accumulate; calling twice without zeroing doubles them.
    void backward(Tensor* loss);

  private:
    Tensor* fresh(int rows, int cols, bool requires_grad);
    std::vector<std::unique_ptr<Tensor>> owned_;
    std::vector<std::unique_ptr<SparseConst>> sparse_owned_;
    std::vector<std::function<void()>> ops_;  // recorded forward order
};

// Adam with bias correction over a fixed, ordered parameter list. Moment
// buffers are sized from the parameters given at construction; the same
// list (same order, same shapes) must be passed to every adam_step.
struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    explicit AdamState(const std::vector<Tensor*>& params, double lr = 0.01,
                       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
};

// One optimizer step; reads and then zeroes every parameter's gradient (an
// absent gradient counts as zero). Throws std::invalid_argument if the
// parameter list does not match the state's buffers.
void adam_step(AdamState& state, const std::vector<Tensor*>& params);

}  // namespace egi
