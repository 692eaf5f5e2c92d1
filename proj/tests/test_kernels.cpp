#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "stylegest/core/kernels.hpp"
#include "stylegest/core/random.hpp"

using namespace stylegest;
namespace k = stylegest::kernels;

namespace {

// plain triple-loop oracle, independent of the kernel code paths
void matmul_oracle(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& c,
                   idx m, idx kk, idx n) {
    for (idx i = 0; i < m; ++i)
        for (idx j = 0; j < n; ++j) {
            double s = 0.0;
            for (idx p = 0; p < kk; ++p) s += a[i * kk + p] * b[p * n + j];
            c[i * n + j] = s;
        }
}

}  // namespace

TEST_CASE("matmul matches oracle") {
    RandomStream rng(7);
    const idx m = 17, kk = 13, n = 11;
    std::vector<double> a(m * kk), b(kk * n), c(m * n), ref(m * n);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    matmul_oracle(a, b, ref, m, kk, n);

    k::serial::matmul(a.data(), b.data(), c.data(), m, kk, n);
    for (idx i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("parallel kernels are bit-identical to serial") {
    RandomStream rng(11);
    const idx m = 33, kk = 29, n = 31;
    std::vector<double> a(m * kk), b(kk * n), bs(n * kk);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    for (auto& v : bs) v = rng.normal();

    std::vector<double> c1(m * n), c2(m * n);
    k::serial::matmul(a.data(), b.data(), c1.data(), m, kk, n);
    k::par::matmul(a.data(), b.data(), c2.data(), m, kk, n);
    CHECK(c1 == c2);

    k::serial::matmul_nt(a.data(), bs.data(), c1.data(), m, kk, n);
    k::par::matmul_nt(a.data(), bs.data(), c2.data(), m, kk, n);
    CHECK(c1 == c2);

    std::vector<double> d1(kk * n), d2(kk * n);
    std::vector<double> g(m * n);
    for (auto& v : g) v = rng.normal();
    k::serial::matmul_tn(a.data(), g.data(), d1.data(), m, kk, n);
    k::par::matmul_tn(a.data(), g.data(), d2.data(), m, kk, n);
    CHECK(d1 == d2);
}

TEST_CASE("matmul transposed variants agree with explicit transposition") {
    RandomStream rng(3);
    const idx m = 9, kk = 7, n = 5;
    std::vector<double> a(m * kk), bt(n * kk), b(kk * n);
    for (auto& v : a) v = rng.normal();
    for (auto& v : bt) v = rng.normal();
    for (idx p = 0; p < kk; ++p)
        for (idx j = 0; j < n; ++j) b[p * n + j] = bt[j * kk + p];

    std::vector<double> c1(m * n), c2(m * n);
    k::serial::matmul(a.data(), b.data(), c1.data(), m, kk, n);
    k::serial::matmul_nt(a.data(), bt.data(), c2.data(), m, kk, n);
    for (idx i = 0; i < m * n; ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));
}

TEST_CASE("conv1d matches direct summation oracle") {
    RandomStream rng(5);
    const idx t = 12, cin = 3, cout = 4, kw = 4, stride = 2, pad = 1;
    std::vector<double> x(t * cin), w(cout * kw * cin), bias(cout);
    for (auto& v : x) v = rng.normal();
    for (auto& v : w) v = rng.normal();
    for (auto& v : bias) v = rng.normal();
    const idx tout = k::conv_out_len(t, kw, stride, pad);
    std::vector<double> y(tout * cout);
    k::serial::conv1d(x.data(), w.data(), bias.data(), y.data(), t, cin, cout, kw, stride, pad);

    for (idx to = 0; to < tout; ++to)
        for (idx co = 0; co < cout; ++co) {
            double s = bias[co];
            for (idx q = 0; q < kw; ++q) {
                const idx ti = to * stride - pad + q;
                if (ti < 0 || ti >= t) continue;
                for (idx ci = 0; ci < cin; ++ci) s += x[ti * cin + ci] * w[(co * kw + q) * cin + ci];
            }
            CHECK(y[to * cout + co] == doctest::Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("conv1d parallel variants are bit-identical to serial") {
    RandomStream rng(13);
    const idx t = 40, cin = 6, cout = 8, kw = 4, stride = 2, pad = 1;
    std::vector<double> x(t * cin), w(cout * kw * cin), bias(cout);
    for (auto& v : x) v = rng.normal();
    for (auto& v : w) v = rng.normal();
    for (auto& v : bias) v = rng.normal();
    const idx tout = k::conv_out_len(t, kw, stride, pad);

    std::vector<double> y1(tout * cout), y2(tout * cout);
    k::serial::conv1d(x.data(), w.data(), bias.data(), y1.data(), t, cin, cout, kw, stride, pad);
    k::par::conv1d(x.data(), w.data(), bias.data(), y2.data(), t, cin, cout, kw, stride, pad);
    CHECK(y1 == y2);

    std::vector<double> dy(tout * cout);
    for (auto& v : dy) v = rng.normal();
    std::vector<double> dx1(t * cin), dx2(t * cin);
    k::serial::conv1d_grad_input(dy.data(), w.data(), dx1.data(), t, cin, cout, kw, stride, pad);
    k::par::conv1d_grad_input(dy.data(), w.data(), dx2.data(), t, cin, cout, kw, stride, pad);
    CHECK(dx1 == dx2);

    std::vector<double> dw1(cout * kw * cin), dw2(cout * kw * cin), db1(cout), db2(cout);
    k::serial::conv1d_grad_weight(x.data(), dy.data(), dw1.data(), db1.data(), t, cin, cout, kw, stride, pad);
    k::par::conv1d_grad_weight(x.data(), dy.data(), dw2.data(), db2.data(), t, cin, cout, kw, stride, pad);
    CHECK(dw1 == dw2);
    CHECK(db1 == db2);
}

TEST_CASE("three stride-2 averaging convs reduce 8 frames to their mean") {
    // Hand-traceable toy downsampling stack: kernel width 2, stride 2, weights 0.5
    // on the diagonal. Composing three stages maps any 8-frame window to its mean,
    // i.e. the pooled input projection.
    const idx c = 3;
    std::vector<double> w(c * 2 * c, 0.0);
    for (idx ci = 0; ci < c; ++ci) {
        w[(ci * 2 + 0) * c + ci] = 0.5;
        w[(ci * 2 + 1) * c + ci] = 0.5;
    }
    RandomStream rng(17);
    const idx t = 8;
    std::vector<double> x(t * c);
    for (auto& v : x) v = rng.normal();

    std::vector<double> h1(4 * c), h2(2 * c), h3(1 * c);
    k::serial::conv1d(x.data(), w.data(), nullptr, h1.data(), 8, c, c, 2, 2, 0);
    k::serial::conv1d(h1.data(), w.data(), nullptr, h2.data(), 4, c, c, 2, 2, 0);
    k::serial::conv1d(h2.data(), w.data(), nullptr, h3.data(), 2, c, c, 2, 2, 0);

    for (idx j = 0; j < c; ++j) {
        double mean = 0.0;
        for (idx i = 0; i < t; ++i) mean += x[i * c + j];
        mean /= static_cast<double>(t);
        CHECK(h3[j] == doctest::Approx(mean).epsilon(1e-12));
    }
}
