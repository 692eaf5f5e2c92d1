#pragma once

#include "stylegest/core/array.hpp"

namespace stylegest::kernels {

// Thread count used by the parallel kernels. 1 disables OpenMP dispatch.
void set_threads(int n);
int threads();

// Each kernel computes every output element with the same serial inner-loop
// order in both variants, so serial and parallel results are bit-identical
// and independent of the thread count.

namespace serial {

// c(m,n) = a(m,k) * b(k,n)
void matmul(const double* a, const double* b, double* c, idx m, idx k, idx n);
// c(m,n) = a(m,k) * b(n,k)^T
void matmul_nt(const double* a, const double* b, double* c, idx m, idx k, idx n);
// c(k,n) = a(m,k)^T * b(m,n)
void matmul_tn(const double* a, const double* b, double* c, idx m, idx k, idx n);

// x: (t, c_in) row-major, w: (c_out, kw, c_in), y: (t_out, c_out)
// t_out = (t + 2*pad - kw) / stride + 1
void conv1d(const double* x, const double* w, const double* bias, double* y,
            idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad);
void conv1d_grad_input(const double* dy, const double* w, double* dx,
                       idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad);
void conv1d_grad_weight(const double* x, const double* dy, double* dw, double* db,
                        idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad);

}  // namespace serial

namespace par {

void matmul(const double* a, const double* b, double* c, idx m, idx k, idx n);
void matmul_nt(const double* a, const double* b, double* c, idx m, idx k, idx n);
void matmul_tn(const double* a, const double* b, double* c, idx m, idx k, idx n);

void conv1d(const double* x, const double* w, const double* bias, double* y,
            idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad);
void conv1d_grad_input(const double* dy, const double* w, double* dx,
                       idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad);
void conv1d_grad_weight(const double* x, const double* dy, double* dw, double* db,
                        idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad);

}  // namespace par

// Dispatching entry points: pick the parallel variant when set_threads(>1).
void matmul(const double* a, const double* b, double* c, idx m, idx k, idx n);
void matmul_nt(const double* a, const double* b, double* c, idx m, idx k, idx n);
void matmul_tn(const double* a, const double* b, double* c, idx m, idx k, idx n);
void conv1d(const double* x, const double* w, const double* bias, double* y,
            idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad);
void conv1d_grad_input(const double* dy, const double* w, double* dx,
                       idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad);
void conv1d_grad_weight(const double* x, const double* dy, double* dw, double* db,
                        idx t, idx c_in, idx c_out, idx kw, idx stride, idx pad);

inline idx conv_out_len(idx t, idx kw, idx stride, idx pad) {
    return (t + 2 * pad - kw) / stride + 1;
}

}  // namespace stylegest::kernels
