#include "stylegest/core/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "stylegest/core/kernels.hpp"

namespace stylegest::ag {

namespace {
thread_local bool g_grad_enabled = true;

bool any_requires_grad(const std::vector<Var>& vars) {
    for (const auto& v : vars)
        if (v.defined() && v.requires_grad()) return true;
    return false;
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

Var make_op(Array value, std::vector<Var> parents, std::function<void(Node&)> backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (g_grad_enabled && any_requires_grad(parents)) {
        n->requires_grad = true;
        n->parents.reserve(parents.size());
        for (auto& p : parents) n->parents.push_back(p.node());
        n->backward_fn = std::move(backward);
    }
    return Var(std::move(n));
}

void backward(const Var& root) {
    if (root.value().size() != 1)
        throw ShapeError("backward: root must be a scalar, got " + root.value().shape_str());
    // iterative post-order topo sort
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.push_back({root.node().get(), 0});
    visited.insert(root.node().get());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->parents.size()) {
            Node* p = n->parents[i++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    root.node()->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad_ready) n->backward_fn(*n);
    }
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    check_same_shape(a.value(), b.value(), "add");
    Array out = a.value();
    const Array& bv = b.value();
    for (idx i = 0; i < out.size(); ++i) out[i] += bv[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        const Array& g = n.grad;
        for (int k = 0; k < 2; ++k) {
            Node& p = *n.parents[k];
            if (!p.requires_grad) continue;
            Array& pg = p.ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] += g[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a.value(), b.value(), "sub");
    Array out = a.value();
    const Array& bv = b.value();
    for (idx i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] += g[i];
        }
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] -= g[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a.value(), b.value(), "mul");
    Array out = a.value();
    const Array& bv = b.value();
    for (idx i = 0; i < out.size(); ++i) out[i] *= bv[i];
    Array av = a.value(), bv2 = b.value();
    return make_op(std::move(out), {a, b}, [av, bv2](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] += g[i] * bv2[i];
        }
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] += g[i] * av[i];
        }
    });
}

Var div(const Var& a, const Var& b) {
    check_same_shape(a.value(), b.value(), "div");
    Array out = a.value();
    const Array& bv = b.value();
    for (idx i = 0; i < out.size(); ++i) out[i] /= bv[i];
    Array y = out, bv2 = b.value();
    return make_op(std::move(out), {a, b}, [y, bv2](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] += g[i] / bv2[i];
        }
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] -= g[i] * y[i] / bv2[i];
        }
    });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double c) {
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) out[i] *= c;
    return make_op(std::move(out), {a}, [c](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < n.grad.size(); ++i) pg[i] += c * n.grad[i];
    });
}

Var add_scalar(const Var& a, double c) {
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) out[i] += c;
    return make_op(std::move(out), {a}, [](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < n.grad.size(); ++i) pg[i] += n.grad[i];
    });
}

Var square(const Var& a) { return mul(a, a); }

Var log_op(const Var& a) {
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
    Array x = a.value();
    return make_op(std::move(out), {a}, [x](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < n.grad.size(); ++i) pg[i] += n.grad[i] / x[i];
    });
}

Var exp_op(const Var& a) {
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
    Array y = out;
    return make_op(std::move(out), {a}, [y](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < n.grad.size(); ++i) pg[i] += n.grad[i] * y[i];
    });
}

Var sqrt_op(const Var& a) {
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) out[i] = std::sqrt(out[i]);
    Array y = out;
    return make_op(std::move(out), {a}, [y](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < n.grad.size(); ++i) pg[i] += 0.5 * n.grad[i] / y[i];
    });
}

Var relu(const Var& a) {
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    Array x = a.value();
    return make_op(std::move(out), {a}, [x](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < n.grad.size(); ++i)
            if (x[i] > 0.0) pg[i] += n.grad[i];
    });
}

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Var gelu(const Var& a) {
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) {
        const double x = out[i];
        out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    }
    Array x = a.value();
    return make_op(std::move(out), {a}, [x](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < n.grad.size(); ++i) {
            const double xi = x[i];
            const double cdf = 0.5 * (1.0 + std::erf(xi * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
            pg[i] += n.grad[i] * (cdf + xi * pdf);
        }
    });
}

Var tanh_op(const Var& a) {
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    Array y = out;
    return make_op(std::move(out), {a}, [y](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < n.grad.size(); ++i) pg[i] += n.grad[i] * (1.0 - y[i] * y[i]);
    });
}

// ---------------------------------------------------------------------------
// broadcasting
// ---------------------------------------------------------------------------

namespace {
void check_rowvec(const Array& m, const Array& v, const char* op) {
    if (m.rank() != 2 || v.size() != m.dim(1))
        throw ShapeError(std::string(op) + ": need (L,C) and (C), got " + m.shape_str() + " and " + v.shape_str());
}
}  // namespace

Var add_rowvec(const Var& m, const Var& v) {
    check_rowvec(m.value(), v.value(), "add_rowvec");
    Array out = m.value();
    const idx L = out.dim(0), C = out.dim(1);
    const double* vd = v.value().data();
    for (idx i = 0; i < L; ++i)
        for (idx j = 0; j < C; ++j) out[i * C + j] += vd[j];
    return make_op(std::move(out), {m, v}, [L, C](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] += g[i];
        }
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < L; ++i)
                for (idx j = 0; j < C; ++j) pg[j] += g[i * C + j];
        }
    });
}

Var mul_rowvec(const Var& m, const Var& v) {
    check_rowvec(m.value(), v.value(), "mul_rowvec");
    Array out = m.value();
    const idx L = out.dim(0), C = out.dim(1);
    const double* vd = v.value().data();
    for (idx i = 0; i < L; ++i)
        for (idx j = 0; j < C; ++j) out[i * C + j] *= vd[j];
    Array mv = m.value(), vv = v.value();
    return make_op(std::move(out), {m, v}, [L, C, mv, vv](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < L; ++i)
                for (idx j = 0; j < C; ++j) pg[i * C + j] += g[i * C + j] * vv[j];
        }
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < L; ++i)
                for (idx j = 0; j < C; ++j) pg[j] += g[i * C + j] * mv[i * C + j];
        }
    });
}

Var mul_scalar_var(const Var& a, const Var& s) {
    if (s.value().size() != 1) throw ShapeError("mul_scalar_var: scalar expected");
    const double sv = s.value()[0];
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) out[i] *= sv;
    Array av = a.value();
    return make_op(std::move(out), {a, s}, [sv, av](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] += g[i] * sv;
        }
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            double acc = 0.0;
            for (idx i = 0; i < g.size(); ++i) acc += g[i] * av[i];
            pg[0] += acc;
        }
    });
}

Var div_scalar_var(const Var& a, const Var& s) {
    if (s.value().size() != 1) throw ShapeError("div_scalar_var: scalar expected");
    const double sv = s.value()[0];
    Array out = a.value();
    for (idx i = 0; i < out.size(); ++i) out[i] /= sv;
    Array y = out;
    return make_op(std::move(out), {a, s}, [sv, y](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < g.size(); ++i) pg[i] += g[i] / sv;
        }
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            double acc = 0.0;
            for (idx i = 0; i < g.size(); ++i) acc -= g[i] * y[i] / sv;
            pg[0] += acc;
        }
    });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
    const Array& A = a.value();
    const Array& B = b.value();
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0))
        throw ShapeError("matmul: incompatible " + A.shape_str() + " x " + B.shape_str());
    const idx m = A.dim(0), k = A.dim(1), n2 = B.dim(1);
    Array out({m, n2});
    kernels::matmul(A.data(), B.data(), out.data(), m, k, n2);
    Array Av = A, Bv = B;
    return make_op(std::move(out), {a, b}, [m, k, n2, Av, Bv](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array da({m, k});
            kernels::matmul_nt(g.data(), Bv.data(), da.data(), m, n2, k);
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < da.size(); ++i) pg[i] += da[i];
        }
        if (n.parents[1]->requires_grad) {
            Array db({k, n2});
            kernels::matmul_tn(Av.data(), g.data(), db.data(), m, k, n2);
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < db.size(); ++i) pg[i] += db[i];
        }
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    const Array& A = a.value();
    const Array& B = b.value();
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(1))
        throw ShapeError("matmul_nt: incompatible " + A.shape_str() + " x " + B.shape_str() + "^T");
    const idx m = A.dim(0), k = A.dim(1), n2 = B.dim(0);
    Array out({m, n2});
    kernels::matmul_nt(A.data(), B.data(), out.data(), m, k, n2);
    Array Av = A, Bv = B;
    return make_op(std::move(out), {a, b}, [m, k, n2, Av, Bv](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array da({m, k});
            kernels::matmul(g.data(), Bv.data(), da.data(), m, n2, k);
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < da.size(); ++i) pg[i] += da[i];
        }
        if (n.parents[1]->requires_grad) {
            Array db({n2, k});
            kernels::matmul_tn(g.data(), Av.data(), db.data(), m, n2, k);
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < db.size(); ++i) pg[i] += db[i];
        }
    });
}

Var transpose(const Var& a) {
    const Array& A = a.value();
    if (A.rank() != 2) throw ShapeError("transpose: rank-2 expected");
    const idx m = A.dim(0), n2 = A.dim(1);
    Array out({n2, m});
    for (idx i = 0; i < m; ++i)
        for (idx j = 0; j < n2; ++j) out[j * m + i] = A[i * n2 + j];
    return make_op(std::move(out), {a}, [m, n2](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        const Array& g = n.grad;
        for (idx i = 0; i < m; ++i)
            for (idx j = 0; j < n2; ++j) pg[i * n2 + j] += g[j * m + i];
    });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Var sum_all(const Var& a) {
    double s = 0.0;
    for (idx i = 0; i < a.value().size(); ++i) s += a.value()[i];
    return make_op(Array::scalar(s), {a}, [](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        const double g = n.grad[0];
        for (idx i = 0; i < pg.size(); ++i) pg[i] += g;
    });
}

Var mean_all(const Var& a) {
    const idx n0 = a.value().size();
    double s = 0.0;
    for (idx i = 0; i < n0; ++i) s += a.value()[i];
    return make_op(Array::scalar(s / static_cast<double>(n0)), {a}, [n0](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        const double g = n.grad[0] / static_cast<double>(n0);
        for (idx i = 0; i < pg.size(); ++i) pg[i] += g;
    });
}

Var dot(const Var& a, const Var& b) {
    check_same_shape(a.value(), b.value(), "dot");
    double s = 0.0;
    for (idx i = 0; i < a.value().size(); ++i) s += a.value()[i] * b.value()[i];
    Array av = a.value(), bv = b.value();
    return make_op(Array::scalar(s), {a, b}, [av, bv](Node& n) {
        const double g = n.grad[0];
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < pg.size(); ++i) pg[i] += g * bv[i];
        }
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < pg.size(); ++i) pg[i] += g * av[i];
        }
    });
}

Var max_over_rows(const Var& a) {
    const Array& A = a.value();
    if (A.rank() != 2) throw ShapeError("max_over_rows: rank-2 expected");
    const idx L = A.dim(0), C = A.dim(1);
    Array out({1, C});
    std::vector<idx> argmax(static_cast<std::size_t>(C), 0);
    for (idx j = 0; j < C; ++j) {
        double best = A[j];
        idx arg = 0;
        for (idx i = 1; i < L; ++i) {
            if (A[i * C + j] > best) {
                best = A[i * C + j];
                arg = i;
            }
        }
        out[j] = best;
        argmax[static_cast<std::size_t>(j)] = arg;
    }
    return make_op(std::move(out), {a}, [C, argmax](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx j = 0; j < C; ++j) pg[argmax[static_cast<std::size_t>(j)] * C + j] += n.grad[j];
    });
}

Var mean_over_rows(const Var& a) {
    const Array& A = a.value();
    if (A.rank() != 2) throw ShapeError("mean_over_rows: rank-2 expected");
    const idx L = A.dim(0), C = A.dim(1);
    Array out({1, C});
    for (idx i = 0; i < L; ++i)
        for (idx j = 0; j < C; ++j) out[j] += A[i * C + j];
    for (idx j = 0; j < C; ++j) out[j] /= static_cast<double>(L);
    return make_op(std::move(out), {a}, [L, C](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < L; ++i)
            for (idx j = 0; j < C; ++j) pg[i * C + j] += n.grad[j] / static_cast<double>(L);
    });
}

// ---------------------------------------------------------------------------
// softmax family
// ---------------------------------------------------------------------------

Var softmax_rows(const Var& a) {
    const Array& A = a.value();
    if (A.rank() != 2) throw ShapeError("softmax_rows: rank-2 expected");
    const idx L = A.dim(0), C = A.dim(1);
    Array out = A;
    for (idx i = 0; i < L; ++i) {
        double mx = out[i * C];
        for (idx j = 1; j < C; ++j) mx = std::max(mx, out[i * C + j]);
        double z = 0.0;
        for (idx j = 0; j < C; ++j) {
            out[i * C + j] = std::exp(out[i * C + j] - mx);
            z += out[i * C + j];
        }
        for (idx j = 0; j < C; ++j) out[i * C + j] /= z;
    }
    Array y = out;
    return make_op(std::move(out), {a}, [L, C, y](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        const Array& g = n.grad;
        for (idx i = 0; i < L; ++i) {
            double gy = 0.0;
            for (idx j = 0; j < C; ++j) gy += g[i * C + j] * y[i * C + j];
            for (idx j = 0; j < C; ++j) pg[i * C + j] += y[i * C + j] * (g[i * C + j] - gy);
        }
    });
}

Var log_softmax_rows(const Var& a) {
    const Array& A = a.value();
    if (A.rank() != 2) throw ShapeError("log_softmax_rows: rank-2 expected");
    const idx L = A.dim(0), C = A.dim(1);
    Array out = A;
    for (idx i = 0; i < L; ++i) {
        double mx = out[i * C];
        for (idx j = 1; j < C; ++j) mx = std::max(mx, out[i * C + j]);
        double z = 0.0;
        for (idx j = 0; j < C; ++j) z += std::exp(out[i * C + j] - mx);
        const double lse = mx + std::log(z);
        for (idx j = 0; j < C; ++j) out[i * C + j] -= lse;
    }
    Array logp = out;
    return make_op(std::move(out), {a}, [L, C, logp](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        const Array& g = n.grad;
        for (idx i = 0; i < L; ++i) {
            double gs = 0.0;
            for (idx j = 0; j < C; ++j) gs += g[i * C + j];
            for (idx j = 0; j < C; ++j) pg[i * C + j] += g[i * C + j] - std::exp(logp[i * C + j]) * gs;
        }
    });
}

Var nll_rows(const Var& logp, const std::vector<idx>& ids) {
    const Array& A = logp.value();
    if (A.rank() != 2 || static_cast<idx>(ids.size()) != A.dim(0))
        throw ShapeError("nll_rows: ids length must equal row count");
    const idx L = A.dim(0), C = A.dim(1);
    double s = 0.0;
    for (idx i = 0; i < L; ++i) s -= A[i * C + ids[static_cast<std::size_t>(i)]];
    auto ids_copy = ids;
    return make_op(Array::scalar(s / static_cast<double>(L)), {logp}, [L, C, ids_copy](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        const double g = n.grad[0] / static_cast<double>(L);
        for (idx i = 0; i < L; ++i) pg[i * C + ids_copy[static_cast<std::size_t>(i)]] -= g;
    });
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps) {
    const Array& X = x.value();
    if (X.rank() != 2) throw ShapeError("layer_norm_rows: rank-2 expected");
    const idx L = X.dim(0), C = X.dim(1);
    check_rowvec(X, gain.value(), "layer_norm_rows(gain)");
    check_rowvec(X, bias.value(), "layer_norm_rows(bias)");
    Array xh({L, C});
    Array inv_std({L});
    for (idx i = 0; i < L; ++i) {
        double mu = 0.0;
        for (idx j = 0; j < C; ++j) mu += X[i * C + j];
        mu /= static_cast<double>(C);
        double var = 0.0;
        for (idx j = 0; j < C; ++j) {
            const double d = X[i * C + j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(C);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (idx j = 0; j < C; ++j) xh[i * C + j] = (X[i * C + j] - mu) * is;
    }
    Array out({L, C});
    const double* gd = gain.value().data();
    const double* bd = bias.value().data();
    for (idx i = 0; i < L; ++i)
        for (idx j = 0; j < C; ++j) out[i * C + j] = xh[i * C + j] * gd[j] + bd[j];
    Array gv = gain.value();
    return make_op(std::move(out), {x, gain, bias}, [L, C, xh, inv_std, gv](Node& n) {
        const Array& g = n.grad;
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < L; ++i)
                for (idx j = 0; j < C; ++j) pg[j] += g[i * C + j] * xh[i * C + j];
        }
        if (n.parents[2]->requires_grad) {
            Array& pg = n.parents[2]->ensure_grad();
            for (idx i = 0; i < L; ++i)
                for (idx j = 0; j < C; ++j) pg[j] += g[i * C + j];
        }
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < L; ++i) {
                double m1 = 0.0, m2 = 0.0;
                for (idx j = 0; j < C; ++j) {
                    const double gh = g[i * C + j] * gv[j];
                    m1 += gh;
                    m2 += gh * xh[i * C + j];
                }
                m1 /= static_cast<double>(C);
                m2 /= static_cast<double>(C);
                for (idx j = 0; j < C; ++j) {
                    const double gh = g[i * C + j] * gv[j];
                    pg[i * C + j] += inv_std[i] * (gh - m1 - xh[i * C + j] * m2);
                }
            }
        }
    });
}

Var instance_norm_cols(const Var& x, double eps) {
    const Array& X = x.value();
    if (X.rank() != 2) throw ShapeError("instance_norm_cols: rank-2 expected");
    const idx L = X.dim(0), C = X.dim(1);
    Array xh({L, C});
    Array inv_std({C});
    for (idx j = 0; j < C; ++j) {
        double mu = 0.0;
        for (idx i = 0; i < L; ++i) mu += X[i * C + j];
        mu /= static_cast<double>(L);
        double var = 0.0;
        for (idx i = 0; i < L; ++i) {
            const double d = X[i * C + j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(L);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[j] = is;
        for (idx i = 0; i < L; ++i) xh[i * C + j] = (X[i * C + j] - mu) * is;
    }
    Array out = xh;
    return make_op(std::move(out), {x}, [L, C, xh, inv_std](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        const Array& g = n.grad;
        for (idx j = 0; j < C; ++j) {
            double m1 = 0.0, m2 = 0.0;
            for (idx i = 0; i < L; ++i) {
                m1 += g[i * C + j];
                m2 += g[i * C + j] * xh[i * C + j];
            }
            m1 /= static_cast<double>(L);
            m2 /= static_cast<double>(L);
            for (idx i = 0; i < L; ++i)
                pg[i * C + j] += inv_std[j] * (g[i * C + j] - m1 - xh[i * C + j] * m2);
        }
    });
}

// ---------------------------------------------------------------------------
// structure
// ---------------------------------------------------------------------------

Var concat_cols(const Var& a, const Var& b) {
    const Array& A = a.value();
    const Array& B = b.value();
    if (A.rank() != 2 || B.rank() != 2 || A.dim(0) != B.dim(0))
        throw ShapeError("concat_cols: row mismatch " + A.shape_str() + " vs " + B.shape_str());
    const idx L = A.dim(0), Ca = A.dim(1), Cb = B.dim(1);
    Array out({L, Ca + Cb});
    for (idx i = 0; i < L; ++i) {
        for (idx j = 0; j < Ca; ++j) out[i * (Ca + Cb) + j] = A[i * Ca + j];
        for (idx j = 0; j < Cb; ++j) out[i * (Ca + Cb) + Ca + j] = B[i * Cb + j];
    }
    return make_op(std::move(out), {a, b}, [L, Ca, Cb](Node& n) {
        const Array& g = n.grad;
        if (n.parents[0]->requires_grad) {
            Array& pg = n.parents[0]->ensure_grad();
            for (idx i = 0; i < L; ++i)
                for (idx j = 0; j < Ca; ++j) pg[i * Ca + j] += g[i * (Ca + Cb) + j];
        }
        if (n.parents[1]->requires_grad) {
            Array& pg = n.parents[1]->ensure_grad();
            for (idx i = 0; i < L; ++i)
                for (idx j = 0; j < Cb; ++j) pg[i * Cb + j] += g[i * (Ca + Cb) + Ca + j];
        }
    });
}

Var slice_cols(const Var& a, idx c0, idx c1) {
    const Array& A = a.value();
    if (A.rank() != 2 || c0 < 0 || c1 > A.dim(1) || c0 >= c1)
        throw ShapeError("slice_cols: bad range");
    const idx L = A.dim(0), C = A.dim(1), W = c1 - c0;
    Array out({L, W});
    for (idx i = 0; i < L; ++i)
        for (idx j = 0; j < W; ++j) out[i * W + j] = A[i * C + c0 + j];
    return make_op(std::move(out), {a}, [L, C, W, c0](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < L; ++i)
            for (idx j = 0; j < W; ++j) pg[i * C + c0 + j] += n.grad[i * W + j];
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: empty");
    const idx C = parts[0].value().dim(1);
    idx L = 0;
    for (const auto& p : parts) {
        if (p.value().rank() != 2 || p.value().dim(1) != C)
            throw ShapeError("concat_rows: column mismatch");
        L += p.value().dim(0);
    }
    Array out({L, C});
    idx r = 0;
    std::vector<idx> row_counts;
    for (const auto& p : parts) {
        const Array& P = p.value();
        for (idx i = 0; i < P.size(); ++i) out[r * C + i] = P[i];
        row_counts.push_back(P.dim(0));
        r += P.dim(0);
    }
    return make_op(std::move(out), parts, [C, row_counts](Node& n) {
        idx r0 = 0;
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
            const idx rows = row_counts[k];
            if (n.parents[k]->requires_grad) {
                Array& pg = n.parents[k]->ensure_grad();
                for (idx i = 0; i < rows * C; ++i) pg[i] += n.grad[r0 * C + i];
            }
            r0 += rows;
        }
    });
}

Var slice_rows(const Var& a, idx r0, idx r1) {
    const Array& A = a.value();
    if (A.rank() != 2 || r0 < 0 || r1 > A.dim(0) || r0 >= r1)
        throw ShapeError("slice_rows: bad range");
    const idx C = A.dim(1), R = r1 - r0;
    Array out({R, C});
    for (idx i = 0; i < R * C; ++i) out[i] = A[r0 * C + i];
    return make_op(std::move(out), {a}, [C, R, r0](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < R * C; ++i) pg[r0 * C + i] += n.grad[i];
    });
}

Var embedding_rows(const Var& table, const std::vector<idx>& ids) {
    const Array& T = table.value();
    if (T.rank() != 2) throw ShapeError("embedding_rows: table must be rank-2");
    const idx V = T.dim(0), C = T.dim(1);
    const idx L = static_cast<idx>(ids.size());
    Array out({L, C});
    for (idx i = 0; i < L; ++i) {
        const idx id = ids[static_cast<std::size_t>(i)];
        if (id < 0 || id >= V) throw ValidationError("embedding_rows: id out of range");
        for (idx j = 0; j < C; ++j) out[i * C + j] = T[id * C + j];
    }
    auto ids_copy = ids;
    return make_op(std::move(out), {table}, [L, C, ids_copy](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < L; ++i) {
            const idx id = ids_copy[static_cast<std::size_t>(i)];
            for (idx j = 0; j < C; ++j) pg[id * C + j] += n.grad[i * C + j];
        }
    });
}

Var upsample_rows(const Var& x, idx factor) {
    const Array& X = x.value();
    if (X.rank() != 2 || factor < 1) throw ShapeError("upsample_rows: bad input");
    const idx L = X.dim(0), C = X.dim(1);
    Array out({L * factor, C});
    for (idx i = 0; i < L; ++i)
        for (idx r = 0; r < factor; ++r)
            for (idx j = 0; j < C; ++j) out[(i * factor + r) * C + j] = X[i * C + j];
    return make_op(std::move(out), {x}, [L, C, factor](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < L; ++i)
            for (idx r = 0; r < factor; ++r)
                for (idx j = 0; j < C; ++j) pg[i * C + j] += n.grad[(i * factor + r) * C + j];
    });
}

// ---------------------------------------------------------------------------
// conv
// ---------------------------------------------------------------------------

Var conv1d(const Var& x, const Var& w, const Var& b, idx stride, idx pad) {
    const Array& X = x.value();
    const Array& W = w.value();
    if (X.rank() != 2 || W.rank() != 3 || W.dim(2) != X.dim(1))
        throw ShapeError("conv1d: need x(T,Cin), w(Cout,K,Cin); got " + X.shape_str() + ", " + W.shape_str());
    const idx T = X.dim(0), Cin = X.dim(1), Cout = W.dim(0), K = W.dim(1);
    const idx Tout = kernels::conv_out_len(T, K, stride, pad);
    if (Tout < 1) throw ShapeError("conv1d: empty output");
    Array out({Tout, Cout});
    const double* bias = b.defined() ? b.value().data() : nullptr;
    kernels::conv1d(X.data(), W.data(), bias, out.data(), T, Cin, Cout, K, stride, pad);
    Array Xv = X, Wv = W;
    const bool has_bias = b.defined();
    std::vector<Var> parents = has_bias ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    return make_op(std::move(out), parents,
                   [T, Cin, Cout, K, stride, pad, Xv, Wv, has_bias](Node& n) {
                       const Array& g = n.grad;
                       if (n.parents[0]->requires_grad) {
                           Array dx({T, Cin});
                           kernels::conv1d_grad_input(g.data(), Wv.data(), dx.data(), T, Cin, Cout, K, stride, pad);
                           Array& pg = n.parents[0]->ensure_grad();
                           for (idx i = 0; i < dx.size(); ++i) pg[i] += dx[i];
                       }
                       const bool need_w = n.parents[1]->requires_grad;
                       const bool need_b = has_bias && n.parents[2]->requires_grad;
                       if (need_w || need_b) {
                           Array dw({Cout, K, Cin});
                           Array db({Cout});
                           kernels::conv1d_grad_weight(Xv.data(), g.data(), dw.data(), db.data(), T, Cin, Cout, K,
                                                       stride, pad);
                           if (need_w) {
                               Array& pg = n.parents[1]->ensure_grad();
                               for (idx i = 0; i < dw.size(); ++i) pg[i] += dw[i];
                           }
                           if (need_b) {
                               Array& pg = n.parents[2]->ensure_grad();
                               for (idx i = 0; i < db.size(); ++i) pg[i] += db[i];
                           }
                       }
                   });
}

// ---------------------------------------------------------------------------
// gradient plumbing
// ---------------------------------------------------------------------------

Var detach(const Var& a) { return Var(a.value(), false); }

Var st_values(const Var& x, Array values) {
    check_same_shape(x.value(), values, "st_values");
    return make_op(std::move(values), {x}, [](Node& n) {
        Array& pg = n.parents[0]->ensure_grad();
        for (idx i = 0; i < n.grad.size(); ++i) pg[i] += n.grad[i];
    });
}

// ---------------------------------------------------------------------------
// composed helpers
// ---------------------------------------------------------------------------

Var l2_normalize(const Var& v) {
    Var nrm = sqrt_op(add_scalar(dot(v, v), 1e-30));
    return div_scalar_var(v, nrm);
}

Var cosine_sim(const Var& a, const Var& b) {
    Var na = sqrt_op(add_scalar(dot(a, a), 1e-30));
    Var nb = sqrt_op(add_scalar(dot(b, b), 1e-30));
    return div(dot(a, b), mul(na, nb));
}

}  // namespace stylegest::ag
