#include "stylegest/core/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stylegest::kernels {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) {
    g_threads.store(n < 1 ? 1 : n);
#ifdef _OPENMP
    omp_set_num_threads(n < 1 ? 1 : n);
#endif
}

int threads() { return g_threads.load(); }

// ---------------------------------------------------------------------------
// serial
// ---------------------------------------------------------------------------

namespace serial {

void matmul(const double* a, const double* b, double* c, idx m, idx k, idx n) {
    for (idx i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (idx j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = a + i * k;
        for (idx p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (idx j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c, idx m, idx k, idx n) {
    for (idx i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (idx j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double s = 0.0;
            for (idx p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c, idx m, idx k, idx n) {
    for (idx i = 0; i < k; ++i) {
        double* ci = c + i * n;
        for (idx j = 0; j < n; ++j) {
            double s = 0.0;
            for (idx p = 0; p < m; ++p) s += a[p * k + i] * b[p * n + j];
            ci[j] = s;
        }
    }
}

void conv1d(const double* x, const double* w, const double* bias, double* y,
            idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad) {
    const idx t_out = conv_out_len(t, kw, stride, pad);
    for (idx to = 0; to < t_out; ++to) {
        double* yo = y + to * c_out;
        for (idx co = 0; co < c_out; ++co) {
            const double* wc = w + co * kw * c_in;
            double s = bias ? bias[co] : 0.0;
            for (idx q = 0; q < kw; ++q) {
                const idx ti = to * stride - pad + q;
                if (ti < 0 || ti >= t) continue;
                const double* xi = x + ti * c_in;
                const double* wq = wc + q * c_in;
                for (idx ci = 0; ci < c_in; ++ci) s += xi[ci] * wq[ci];
            }
            yo[co] = s;
        }
    }
}

void conv1d_grad_input(const double* dy, const double* w, double* dx,
                       idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad) {
    const idx t_out = conv_out_len(t, kw, stride, pad);
    for (idx ti = 0; ti < t; ++ti) {
        double* dxi = dx + ti * c_in;
        for (idx ci = 0; ci < c_in; ++ci) dxi[ci] = 0.0;
        for (idx q = 0; q < kw; ++q) {
            const idx num = ti + pad - q;
            if (num < 0 || num % stride != 0) continue;
            const idx to = num / stride;
            if (to >= t_out) continue;
            const double* dyo = dy + to * c_out;
            for (idx co = 0; co < c_out; ++co) {
                const double g = dyo[co];
                const double* wq = w + (co * kw + q) * c_in;
                for (idx ci = 0; ci < c_in; ++ci) dxi[ci] += g * wq[ci];
            }
        }
    }
}

void conv1d_grad_weight(const double* x, const double* dy, double* dw, double* db,
                        idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad) {
    const idx t_out = conv_out_len(t, kw, stride, pad);
    for (idx co = 0; co < c_out; ++co) {
        if (db) {
            double s = 0.0;
            for (idx to = 0; to < t_out; ++to) s += dy[to * c_out + co];
            db[co] = s;
        }
        for (idx q = 0; q < kw; ++q) {
            double* dwq = dw + (co * kw + q) * c_in;
            for (idx ci = 0; ci < c_in; ++ci) dwq[ci] = 0.0;
            for (idx to = 0; to < t_out; ++to) {
                const idx ti = to * stride - pad + q;
                if (ti < 0 || ti >= t) continue;
                const double g = dy[to * c_out + co];
                const double* xi = x + ti * c_in;
                for (idx ci = 0; ci < c_in; ++ci) dwq[ci] += g * xi[ci];
            }
        }
    }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP: parallel over disjoint output slices, same inner loops as serial
// ---------------------------------------------------------------------------

namespace par {

void matmul(const double* a, const double* b, double* c, idx m, idx k, idx n) {
#pragma omp parallel for schedule(static)
    for (idx i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (idx j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = a + i * k;
        for (idx p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (idx j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c, idx m, idx k, idx n) {
#pragma omp parallel for schedule(static)
    for (idx i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (idx j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double s = 0.0;
            for (idx p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c, idx m, idx k, idx n) {
#pragma omp parallel for schedule(static)
    for (idx i = 0; i < k; ++i) {
        double* ci = c + i * n;
        for (idx j = 0; j < n; ++j) {
            double s = 0.0;
            for (idx p = 0; p < m; ++p) s += a[p * k + i] * b[p * n + j];
            ci[j] = s;
        }
    }
}

void conv1d(const double* x, const double* w, const double* bias, double* y,
            idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad) {
    const idx t_out = conv_out_len(t, kw, stride, pad);
#pragma omp parallel for schedule(static)
    for (idx to = 0; to < t_out; ++to) {
        double* yo = y + to * c_out;
        for (idx co = 0; co < c_out; ++co) {
            const double* wc = w + co * kw * c_in;
            double s = bias ? bias[co] : 0.0;
            for (idx q = 0; q < kw; ++q) {
                const idx ti = to * stride - pad + q;
                if (ti < 0 || ti >= t) continue;
                const double* xi = x + ti * c_in;
                const double* wq = wc + q * c_in;
                for (idx ci = 0; ci < c_in; ++ci) s += xi[ci] * wq[ci];
            }
            yo[co] = s;
        }
    }
}

void conv1d_grad_input(const double* dy, const double* w, double* dx,
                       idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad) {
    const idx t_out = conv_out_len(t, kw, stride, pad);
#pragma omp parallel for schedule(static)
    for (idx ti = 0; ti < t; ++ti) {
        double* dxi = dx + ti * c_in;
        for (idx ci = 0; ci < c_in; ++ci) dxi[ci] = 0.0;
        for (idx q = 0; q < kw; ++q) {
            const idx num = ti + pad - q;
            if (num < 0 || num % stride != 0) continue;
            const idx to = num / stride;
            if (to >= t_out) continue;
            const double* dyo = dy + to * c_out;
            for (idx co = 0; co < c_out; ++co) {
                const double g = dyo[co];
                const double* wq = w + (co * kw + q) * c_in;
                for (idx ci = 0; ci < c_in; ++ci) dxi[ci] += g * wq[ci];
            }
        }
    }
}

void conv1d_grad_weight(const double* x, const double* dy, double* dw, double* db,
                        idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad) {
    const idx t_out = conv_out_len(t, kw, stride, pad);
#pragma omp parallel for schedule(static)
    for (idx co = 0; co < c_out; ++co) {
        if (db) {
            double s = 0.0;
            for (idx to = 0; to < t_out; ++to) s += dy[to * c_out + co];
            db[co] = s;
        }
        for (idx q = 0; q < kw; ++q) {
            double* dwq = dw + (co * kw + q) * c_in;
            for (idx ci = 0; ci < c_in; ++ci) dwq[ci] = 0.0;
            for (idx to = 0; to < t_out; ++to) {
                const idx ti = to * stride - pad + q;
                if (ti < 0 || ti >= t) continue;
                const double g = dy[to * c_out + co];
                const double* xi = x + ti * c_in;
                for (idx ci = 0; ci < c_in; ++ci) dwq[ci] += g * xi[ci];
            }
        }
    }
}

}  // namespace par

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

void matmul(const double* a, const double* b, double* c, idx m, idx k, idx n) {
    if (threads() > 1) par::matmul(a, b, c, m, k, n);
    else serial::matmul(a, b, c, m, k, n);
}
void matmul_nt(const double* a, const double* b, double* c, idx m, idx k, idx n) {
    if (threads() > 1) par::matmul_nt(a, b, c, m, k, n);
    else serial::matmul_nt(a, b, c, m, k, n);
}
void matmul_tn(const double* a, const double* b, double* c, idx m, idx k, idx n) {
    if (threads() > 1) par::matmul_tn(a, b, c, m, k, n);
    else serial::matmul_tn(a, b, c, m, k, n);
}
void conv1d(const double* x, const double* w, const double* bias, double* y,
            idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad) {
    if (threads() > 1) par::conv1d(x, w, bias, y, t, c_in, c_out, kw, stride, pad);
    else serial::conv1d(x, w, bias, y, t, c_in, c_out, kw, stride, pad);
}
void conv1d_grad_input(const double* dy, const double* w, double* dx,
                       idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad) {
    if (threads() > 1) par::conv1d_grad_input(dy, w, dx, t, c_in, c_out, kw, stride, pad);
    else serial::conv1d_grad_input(dy, w, dx, t, c_in, c_out, kw, stride, pad);
}
void conv1d_grad_weight(const double* x, const double* dy, double* dw, double* db,
                        idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad) {
    if (threads() > 1) par::conv1d_grad_weight(x, dy, dw, db, t, c_in, c_out, kw, stride, pad);
    else serial::conv1d_grad_weight(x, dy, dw, db, t, c_in, c_out, kw, stride, pad);
}

}  // namespace stylegest::kernels
