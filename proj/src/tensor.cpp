#include "egi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace egi {

namespace {

std::string shape_str(int r, int c) { return std::to_string(r) + "x" + std::to_string(c); }

std::string shape_str(const Tensor* t) { return shape_str(t->rows, t->cols); }

[[noreturn]] void shape_error(const char* op, const Tensor* a, const Tensor* b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) +
                                " vs " + shape_str(b));
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    Tensor t;
    t.rows = rows;
    t.cols = cols;
    t.values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    t.requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(int rows, int cols, double value, bool requires_grad) {
    Tensor t = zeros(rows, cols, requires_grad);
    std::fill(t.values.begin(), t.values.end(), value);
    return t;
}

Tensor Tensor::from(int rows, int cols, std::vector<double> values, bool requires_grad) {
    if (values.size() != static_cast<std::size_t>(rows) * cols) {
        throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) +
                                    " values for shape " + shape_str(rows, cols));
    }
    Tensor t;
    t.rows = rows;
    t.cols = cols;
    t.values = std::move(values);
    t.requires_grad = requires_grad;
    return t;
}

Tensor Tensor::glorot(int rows, int cols, Rng& rng) {
    Tensor t = zeros(rows, cols, true);
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (auto& v : t.values) v = rng.real(-a, a);
    return t;
}

void Tensor::ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(values.size(), 0.0); }

void SparseConst::add(int row, int col, double value) {
    r.push_back(row);
    c.push_back(col);
    v.push_back(value);
}

Tensor* Tape::fresh(int rows, int cols, bool requires_grad) {
    owned_.push_back(std::make_unique<Tensor>(Tensor::zeros(rows, cols, requires_grad)));
    return owned_.back().get();
}

Tensor* Tape::constant(int rows, int cols, std::vector<double> values) {
    owned_.push_back(
        std::make_unique<Tensor>(Tensor::from(rows, cols, std::move(values), false)));
    return owned_.back().get();
}

SparseConst* Tape::sparse(int rows, int cols) {
    sparse_owned_.push_back(std::make_unique<SparseConst>());
    sparse_owned_.back()->rows = rows;
    sparse_owned_.back()->cols = cols;
    return sparse_owned_.back().get();
}

Tensor* Tape::matmul(Tensor* a, Tensor* b) {
    if (a->cols != b->rows) shape_error("matmul", a, b);
    Tensor* out = fresh(a->rows, b->cols, a->requires_grad || b->requires_grad);
    for (int i = 0; i < a->rows; ++i) {
        for (int k = 0; k < a->cols; ++k) {
            const double aik = a->at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b->cols; ++j) out->at(i, j) += aik * b->at(k, j);
        }
    }
    if (!out->requires_grad) return out;
    ops_.push_back([a, b, out]() {
        if (a->requires_grad) {
            a->ensure_grad();  // dA += dOut . B^T
            for (int i = 0; i < a->rows; ++i) {
                for (int k = 0; k < a->cols; ++k) {
                    double s = 0.0;
                    for (int j = 0; j < b->cols; ++j) {
                        s += out->grad[static_cast<std::size_t>(i) * out->cols + j] * b->at(k, j);
                    }
                    a->grad[static_cast<std::size_t>(i) * a->cols + k] += s;
                }
            }
        }
        if (b->requires_grad) {
            b->ensure_grad();  // dB += A^T . dOut
            for (int k = 0; k < b->rows; ++k) {
                for (int i = 0; i < a->rows; ++i) {
                    const double aik = a->at(i, k);
                    if (aik == 0.0) continue;
                    for (int j = 0; j < b->cols; ++j) {
                        b->grad[static_cast<std::size_t>(k) * b->cols + j] +=
                            aik * out->grad[static_cast<std::size_t>(i) * out->cols + j];
                    }
                }
            }
        }
    });
    return out;
}

Tensor* Tape::spmm(const SparseConst& s, Tensor* x) {
    if (s.cols != x->rows) {
        throw std::invalid_argument("spmm: incompatible shapes " + shape_str(s.rows, s.cols) +
                                    " vs " + shape_str(x));
    }
    Tensor* out = fresh(s.rows, x->cols, x->requires_grad);
    const int n = x->cols;
    for (std::size_t e = 0; e < s.v.size(); ++e) {
        const double w = s.v[e];
        const std::size_t ro = static_cast<std::size_t>(s.r[e]) * n;
        const std::size_t co = static_cast<std::size_t>(s.c[e]) * n;
        for (int j = 0; j < n; ++j) out->values[ro + j] += w * x->values[co + j];
    }
    if (!out->requires_grad) return out;
    const SparseConst* sp = &s;  // caller keeps s alive for the tape's lifetime
    ops_.push_back([sp, x, out, n]() {
        x->ensure_grad();  // dX += S^T . dOut
        for (std::size_t e = 0; e < sp->v.size(); ++e) {
            const double w = sp->v[e];
            const std::size_t ro = static_cast<std::size_t>(sp->r[e]) * n;
            const std::size_t co = static_cast<std::size_t>(sp->c[e]) * n;
            for (int j = 0; j < n; ++j) x->grad[co + j] += w * out->grad[ro + j];
        }
    });
    return out;
}

Tensor* Tape::add(Tensor* a, Tensor* b) {
    if (a->rows != b->rows || a->cols != b->cols) shape_error("add", a, b);
    Tensor* out = fresh(a->rows, a->cols, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < a->values.size(); ++i) {
        out->values[i] = a->values[i] + b->values[i];
    }
    if (!out->requires_grad) return out;
    ops_.push_back([a, b, out]() {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += out->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < b->grad.size(); ++i) b->grad[i] += out->grad[i];
        }
    });
    return out;
}

Tensor* Tape::add_rowvec(Tensor* a, Tensor* row) {
    if (row->rows != 1 || row->cols != a->cols) shape_error("add_rowvec", a, row);
    Tensor* out = fresh(a->rows, a->cols, a->requires_grad || row->requires_grad);
    for (int i = 0; i < a->rows; ++i) {
        for (int j = 0; j < a->cols; ++j) out->at(i, j) = a->at(i, j) + row->values[static_cast<std::size_t>(j)];
    }
    if (!out->requires_grad) return out;
    ops_.push_back([a, row, out]() {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += out->grad[i];
        }
        if (row->requires_grad) {
            row->ensure_grad();
            for (int i = 0; i < a->rows; ++i) {
                for (int j = 0; j < a->cols; ++j) {
                    row->grad[static_cast<std::size_t>(j)] +=
                        out->grad[static_cast<std::size_t>(i) * a->cols + j];
                }
            }
        }
    });
    return out;
}

Tensor* Tape::concat_cols(const std::vector<Tensor*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty part list");
    int total = 0;
    bool needs = false;
    for (const Tensor* p : parts) {
        if (p->rows != parts.front()->rows) shape_error("concat_cols", parts.front(), p);
        total += p->cols;
        needs = needs || p->requires_grad;
    }
    Tensor* out = fresh(parts.front()->rows, total, needs);
    int off = 0;
    for (const Tensor* p : parts) {
        for (int i = 0; i < p->rows; ++i) {
            for (int j = 0; j < p->cols; ++j) out->at(i, off + j) = p->at(i, j);
        }
        off += p->cols;
    }
    if (!out->requires_grad) return out;
    std::vector<Tensor*> ps = parts;
    ops_.push_back([ps, out]() {
        int off = 0;
        for (Tensor* p : ps) {
            if (p->requires_grad) {
                p->ensure_grad();
                for (int i = 0; i < p->rows; ++i) {
                    for (int j = 0; j < p->cols; ++j) {
                        p->grad[static_cast<std::size_t>(i) * p->cols + j] +=
                            out->grad[static_cast<std::size_t>(i) * out->cols + off + j];
                    }
                }
            }
            off += p->cols;
        }
    });
    return out;
}

Tensor* Tape::relu(Tensor* a) {
    Tensor* out = fresh(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < a->values.size(); ++i) {
        out->values[i] = a->values[i] > 0.0 ? a->values[i] : 0.0;
    }
    if (!out->requires_grad) return out;
    ops_.push_back([a, out]() {
        a->ensure_grad();
        for (std::size_t i = 0; i < a->grad.size(); ++i) {
            if (a->values[i] > 0.0) a->grad[i] += out->grad[i];
        }
    });
    return out;
}

Tensor* Tape::sigmoid(Tensor* a) {
    Tensor* out = fresh(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < a->values.size(); ++i) {
        out->values[i] = stable_sigmoid(a->values[i]);
    }
    if (!out->requires_grad) return out;
    ops_.push_back([a, out]() {
        a->ensure_grad();
        for (std::size_t i = 0; i < a->grad.size(); ++i) {
            const double s = out->values[i];
            a->grad[i] += out->grad[i] * s * (1.0 - s);
        }
    });
    return out;
}

Tensor* Tape::softplus(Tensor* a) {
    Tensor* out = fresh(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < a->values.size(); ++i) {
        const double t = a->values[i];
        out->values[i] = std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
    }
    if (!out->requires_grad) return out;
    ops_.push_back([a, out]() {
        a->ensure_grad();
        for (std::size_t i = 0; i < a->grad.size(); ++i) {
            a->grad[i] += out->grad[i] * stable_sigmoid(a->values[i]);
        }
    });
    return out;
}

Tensor* Tape::mean_rows(Tensor* a) {
    if (a->rows == 0) throw std::invalid_argument("mean_rows: zero rows");
    Tensor* out = fresh(1, a->cols, a->requires_grad);
    const double inv = 1.0 / static_cast<double>(a->rows);
    for (int i = 0; i < a->rows; ++i) {
        for (int j = 0; j < a->cols; ++j) out->values[static_cast<std::size_t>(j)] += inv * a->at(i, j);
    }
    if (!out->requires_grad) return out;
    ops_.push_back([a, out, inv]() {
        a->ensure_grad();
        for (int i = 0; i < a->rows; ++i) {
            for (int j = 0; j < a->cols; ++j) {
                a->grad[static_cast<std::size_t>(i) * a->cols + j] +=
                    inv * out->grad[static_cast<std::size_t>(j)];
            }
        }
    });
    return out;
}

Tensor* Tape::sum_all(Tensor* a) {
    Tensor* out = fresh(1, 1, a->requires_grad);
    double s = 0.0;
    for (double v : a->values) s += v;
    out->values[0] = s;
    if (!out->requires_grad) return out;
    ops_.push_back([a, out]() {
        a->ensure_grad();
        for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += out->grad[0];
    });
    return out;
}

Tensor* Tape::scalar_mul(Tensor* a, double c) {
    Tensor* out = fresh(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < a->values.size(); ++i) out->values[i] = c * a->values[i];
    if (!out->requires_grad) return out;
    ops_.push_back([a, out, c]() {
        a->ensure_grad();
        for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += c * out->grad[i];
    });
    return out;
}

Tensor* Tape::add_const(Tensor* a, double c) {
    Tensor* out = fresh(a->rows, a->cols, a->requires_grad);
    for (std::size_t i = 0; i < a->values.size(); ++i) out->values[i] = a->values[i] + c;
    if (!out->requires_grad) return out;
    ops_.push_back([a, out]() {
        a->ensure_grad();
        for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += out->grad[i];
    });
    return out;
}

Tensor* Tape::scale_by_scalar(Tensor* a, Tensor* s) {
    if (s->rows != 1 || s->cols != 1) {
        throw std::invalid_argument("scale_by_scalar: scale must be 1x1, got " + shape_str(s));
    }
    Tensor* out = fresh(a->rows, a->cols, a->requires_grad || s->requires_grad);
    const double sv = s->values[0];
    for (std::size_t i = 0; i < a->values.size(); ++i) out->values[i] = sv * a->values[i];
    if (!out->requires_grad) return out;
    ops_.push_back([a, s, out, sv]() {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += sv * out->grad[i];
        }
        if (s->requires_grad) {
            s->ensure_grad();
            double acc = 0.0;
            for (std::size_t i = 0; i < a->values.size(); ++i) acc += a->values[i] * out->grad[i];
            s->grad[0] += acc;
        }
    });
    return out;
}

Tensor* Tape::pad_cols(Tensor* a, int width) {
    if (width < a->cols) {
        throw std::invalid_argument("pad_cols: width " + std::to_string(width) +
                                    " below input " + shape_str(a));
    }
    Tensor* out = fresh(a->rows, width, a->requires_grad);
    for (int i = 0; i < a->rows; ++i) {
        for (int j = 0; j < a->cols; ++j) out->at(i, j) = a->at(i, j);
    }
    if (!out->requires_grad) return out;
    ops_.push_back([a, out]() {
        a->ensure_grad();
        for (int i = 0; i < a->rows; ++i) {
            for (int j = 0; j < a->cols; ++j) {
                a->grad[static_cast<std::size_t>(i) * a->cols + j] +=
                    out->grad[static_cast<std::size_t>(i) * out->cols + j];
            }
        }
    });
    return out;
}

Tensor* Tape::slice_rows(Tensor* a, int r0, int r1) {
    if (r0 < 0 || r1 > a->rows || r0 >= r1) {
        throw std::invalid_argument("slice_rows: range [" + std::to_string(r0) + "," +
                                    std::to_string(r1) + ") on " + shape_str(a));
    }
    Tensor* out = fresh(r1 - r0, a->cols, a->requires_grad);
    for (int i = r0; i < r1; ++i) {
        for (int j = 0; j < a->cols; ++j) out->at(i - r0, j) = a->at(i, j);
    }
    if (!out->requires_grad) return out;
    ops_.push_back([a, out, r0]() {
        a->ensure_grad();
        for (int i = 0; i < out->rows; ++i) {
            for (int j = 0; j < out->cols; ++j) {
                a->grad[static_cast<std::size_t>(i + r0) * a->cols + j] +=
                    out->grad[static_cast<std::size_t>(i) * out->cols + j];
            }
        }
    });
    return out;
}

void Tape::backward(Tensor* loss) {
    if (loss->rows != 1 || loss->cols != 1) {
        throw std::invalid_argument("backward: loss must be 1x1, got " + shape_str(loss));
    }
    // Tape-internal gradients are transient per call; external parameter
    // gradients accumulate until their owner zeroes them.
    for (auto& node : owned_) {
        if (node->requires_grad) node->zero_grad();
    }
    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

AdamState::AdamState(const std::vector<Tensor*>& params, double lr, double beta1, double beta2,
                     double eps)
    : lr(lr), beta1(beta1), beta2(beta2), eps(eps) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const Tensor* p : params) {
        m.emplace_back(p->size(), 0.0);
        v.emplace_back(p->size(), 0.0);
    }
}

void adam_step(AdamState& state, const std::vector<Tensor*>& params) {
    if (params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: " + std::to_string(params.size()) +
                                    " params vs state for " + std::to_string(state.m.size()));
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor* t = params[p];
        if (state.m[p].size() != t->size()) {
            throw std::invalid_argument("adam_step: parameter " + std::to_string(p) +
                                        " shape changed");
        }
        t->ensure_grad();
        for (std::size_t i = 0; i < t->size(); ++i) {
            const double g = t->grad[i];
            state.m[p][i] = state.beta1 * state.m[p][i] + (1.0 - state.beta1) * g;
            state.v[p][i] = state.beta2 * state.v[p][i] + (1.0 - state.beta2) * g * g;
            const double mhat = state.m[p][i] / bc1;
            const double vhat = state.v[p][i] / bc2;
            t->values[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        t->zero_grad();
    }
}

}  // namespace egi
