#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "stylegest/core/array.hpp"

namespace stylegest::ag {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    Array value;
    Array grad;  // allocated lazily, same shape as value
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward_fn;

    Array& ensure_grad() {
        if (!grad_ready) {
            grad = Array(value.shape());
            grad_ready = true;
        }
        return grad;
    }
};

// Reverse-mode autodiff handle. Copies share the underlying node.
class Var {
public:
    Var() = default;
    explicit Var(Array v, bool requires_grad = false) : n_(std::make_shared<Node>()) {
        n_->value = std::move(v);
        n_->requires_grad = requires_grad;
    }

    bool defined() const { return n_ != nullptr; }
    const Array& value() const { return n_->value; }
    Array& mutable_value() { return n_->value; }
    const Array& grad() const { return n_->ensure_grad(); }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    void set_requires_grad(bool rg) { n_->requires_grad = rg; }
    void zero_grad() {
        if (n_->grad_ready)
            for (idx i = 0; i < n_->grad.size(); ++i) n_->grad[i] = 0.0;
    }
    NodePtr node() const { return n_; }

    static Var constant(Array v) { return Var(std::move(v), false); }

private:
    Var(NodePtr n) : n_(std::move(n)) {}
    NodePtr n_;
    friend Var make_op(Array value, std::vector<Var> parents, std::function<void(Node&)> backward);
};

// Whether new ops record the graph (thread-local).
bool grad_enabled();

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    bool prev;
};

Var make_op(Array value, std::vector<Var> parents, std::function<void(Node&)> backward);

// Runs backprop from a scalar root. Accumulates into .grad of every
// requires_grad node reachable from it.
void backward(const Var& root);

// --- elementwise / scalar ---------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var square(const Var& a);
Var log_op(const Var& a);
Var exp_op(const Var& a);
Var sqrt_op(const Var& a);
Var relu(const Var& a);
Var gelu(const Var& a);
Var tanh_op(const Var& a);

// --- broadcasting -----------------------------------------------------------
// m: (L,C); v: (1,C) or (C)
Var add_rowvec(const Var& m, const Var& v);
Var mul_rowvec(const Var& m, const Var& v);
// s: scalar Var (size 1)
Var mul_scalar_var(const Var& a, const Var& s);
Var div_scalar_var(const Var& a, const Var& s);

// --- linear algebra ----------------------------------------------------------
Var matmul(const Var& a, const Var& b);     // (m,k)x(k,n)
Var matmul_nt(const Var& a, const Var& b);  // (m,k)x(n,k)^T
Var transpose(const Var& a);

// --- reductions ---------------------------------------------------------------
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var dot(const Var& a, const Var& b);       // full contraction -> scalar
Var max_over_rows(const Var& a);           // (L,C) -> (1,C), ties to lowest row
Var mean_over_rows(const Var& a);          // (L,C) -> (1,C)

// --- softmax family -----------------------------------------------------------
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
// -mean_i logp[i, ids[i]]
Var nll_rows(const Var& logp, const std::vector<idx>& ids);

// --- normalization ------------------------------------------------------------
Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
// standardize each column over the rows (per-channel over time)
Var instance_norm_cols(const Var& x, double eps);

// --- structure ----------------------------------------------------------------
Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& a, idx c0, idx c1);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, idx r0, idx r1);
Var embedding_rows(const Var& table, const std::vector<idx>& ids);
Var upsample_rows(const Var& x, idx factor);

// --- conv ---------------------------------------------------------------------
// x: (T, c_in), w: (c_out, kw, c_in), b: (c_out) or undefined
Var conv1d(const Var& x, const Var& w, const Var& b, idx stride, idx pad);

// --- gradient plumbing ----------------------------------------------------------
Var detach(const Var& a);
// forward takes `values`, backward passes gradient to x unchanged
Var st_values(const Var& x, Array values);

// --- composed helpers -----------------------------------------------------------
Var l2_normalize(const Var& v);                 // any shape, global L2 norm
Var cosine_sim(const Var& a, const Var& b);     // scalar

}  // namespace stylegest::ag
