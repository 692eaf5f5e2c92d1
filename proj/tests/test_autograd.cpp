#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <vector>

#include "stylegest/core/autograd.hpp"
#include "stylegest/core/optim.hpp"
#include "stylegest/core/random.hpp"
#include "stylegest/nn/modules.hpp"

#include "test_util.hpp"

using namespace stylegest;
using ag::Var;

using testutil::grad_check;

TEST_CASE("elementwise and reduction gradients match finite differences") {
    RandomStream rng(1);
    Var a(rng.normal_array({3, 4}), true);
    Var b(rng.uniform_array({3, 4}, 0.5, 2.0), true);
    std::vector<Var> params{a, b};

    auto build = [&]() {
        Var x = ag::mul(ag::add(a, b), ag::sub(a, b));
        x = ag::div(x, b);
        x = ag::gelu(x);
        x = ag::add(x, ag::tanh_op(a));
        x = ag::add(x, ag::relu(ag::scale(a, 2.0)));
        return ag::mean_all(ag::square(x));
    };
    CHECK(grad_check(params, build) < 1e-6);
}

TEST_CASE("matmul, transpose and broadcast gradients match finite differences") {
    RandomStream rng(2);
    Var a(rng.normal_array({4, 3}), true);
    Var b(rng.normal_array({3, 5}), true);
    Var c(rng.normal_array({6, 3}), true);
    Var v(rng.normal_array({5}), true);
    std::vector<Var> params{a, b, c, v};

    auto build = [&]() {
        Var m = ag::matmul(a, b);               // (4,5)
        m = ag::add_rowvec(m, v);
        m = ag::mul_rowvec(m, v);
        Var nt = ag::matmul_nt(a, c);           // (4,6)
        Var t = ag::transpose(nt);              // (6,4)
        return ag::add(ag::sum_all(ag::square(m)), ag::mean_all(ag::square(t)));
    };
    CHECK(grad_check(params, build) < 1e-6);
}

TEST_CASE("softmax, log-softmax and nll gradients match finite differences") {
    RandomStream rng(3);
    Var logits(rng.normal_array({5, 7}), true);
    std::vector<idx> ids{2, 0, 6, 3, 3};
    std::vector<Var> params{logits};

    auto build = [&]() {
        Var p = ag::softmax_rows(logits);
        Var lp = ag::log_softmax_rows(ag::scale(logits, 0.7));
        return ag::add(ag::nll_rows(lp, ids), ag::mean_all(ag::square(p)));
    };
    CHECK(grad_check(params, build) < 1e-6);
}

TEST_CASE("normalization gradients match finite differences") {
    RandomStream rng(4);
    Var x(rng.normal_array({6, 5}), true);
    Var gain(rng.uniform_array({5}, 0.5, 1.5), true);
    Var bias(rng.normal_array({5}), true);
    std::vector<Var> params{x, gain, bias};

    auto build = [&]() {
        Var ln = ag::layer_norm_rows(x, gain, bias);
        Var in = ag::instance_norm_cols(x, 1e-5);
        return ag::add(ag::mean_all(ag::square(ln)), ag::sum_all(ag::mul(in, ln)));
    };
    CHECK(grad_check(params, build, 1e-5) < 1e-5);
}

TEST_CASE("structural op gradients match finite differences") {
    RandomStream rng(5);
    Var a(rng.normal_array({4, 3}), true);
    Var b(rng.normal_array({4, 2}), true);
    Var table(rng.normal_array({6, 3}), true);
    std::vector<idx> ids{1, 5, 1, 0};
    std::vector<Var> params{a, b, table};

    auto build = [&]() {
        Var cc = ag::concat_cols(a, b);                       // (4,5)
        Var sc = ag::slice_cols(cc, 1, 4);                    // (4,3)
        Var cr = ag::concat_rows({sc, ag::embedding_rows(table, ids)});  // (8,3)
        Var sr = ag::slice_rows(cr, 2, 7);
        Var up = ag::upsample_rows(sr, 2);
        Var mx = ag::max_over_rows(up);
        Var mn = ag::mean_over_rows(up);
        return ag::add(ag::sum_all(ag::square(mx)), ag::sum_all(ag::square(mn)));
    };
    CHECK(grad_check(params, build) < 1e-6);
}

TEST_CASE("conv1d and upsample gradients match finite differences") {
    RandomStream rng(6);
    Var x(rng.normal_array({10, 3}), true);
    Var w(rng.normal_array({4, 4, 3}, 0.4), true);
    Var b(rng.normal_array({4}), true);
    std::vector<Var> params{x, w, b};

    auto build = [&]() {
        Var y = ag::conv1d(x, w, b, 2, 1);
        y = ag::gelu(y);
        Var u = ag::upsample_rows(y, 2);
        return ag::mean_all(ag::square(u));
    };
    CHECK(grad_check(params, build) < 1e-6);
}

TEST_CASE("scalar-var broadcasting and cosine gradients match finite differences") {
    RandomStream rng(7);
    Var a(rng.normal_array({1, 6}), true);
    Var b(rng.normal_array({1, 6}), true);
    std::vector<Var> params{a, b};

    auto build = [&]() {
        Var na = ag::l2_normalize(a);
        Var cs = ag::cosine_sim(a, b);
        Var s = ag::dot(na, na);
        return ag::add(cs, ag::mul_scalar_var(s, ag::dot(a, b)));
    };
    CHECK(grad_check(params, build) < 1e-6);
}

TEST_CASE("transformer block gradient matches finite differences") {
    RandomStream rng(8);
    nn::TransformerBlock block(8, 2, 16, true, rng);
    Var x(rng.normal_array({5, 8}), true);
    nn::ParamMap pm;
    block.collect("blk", pm);
    std::vector<Var> params = nn::values_of(pm);
    params.push_back(x);

    auto build = [&]() { return ag::mean_all(ag::square(block.forward(x))); };
    CHECK(grad_check(params, build, 1e-5) < 1e-4);
}

TEST_CASE("detach blocks gradients and st_values passes them through") {
    RandomStream rng(9);
    Var x(rng.normal_array({2, 3}), true);

    Var d = ag::detach(x);
    CHECK_FALSE(d.requires_grad());

    Array q({2, 3});
    for (idx i = 0; i < q.size(); ++i) q[i] = 10.0 + static_cast<double>(i);
    Var st = ag::st_values(x, q);
    for (idx i = 0; i < q.size(); ++i) CHECK(st.value()[i] == q[i]);

    Var loss = ag::sum_all(ag::square(st));
    x.zero_grad();
    ag::backward(loss);
    // d(sum q^2)/dq = 2q routed straight to x
    for (idx i = 0; i < q.size(); ++i) CHECK(x.grad()[i] == doctest::Approx(2.0 * q[i]));
}

TEST_CASE("gradient accumulates across repeated use of the same variable") {
    Var x(Array::scalar(3.0), true);
    Var y = ag::mul(x, x);  // x^2
    x.zero_grad();
    ag::backward(y);
    CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("NoGradGuard suppresses graph construction") {
    Var x(Array::scalar(2.0), true);
    ag::NoGradGuard ng;
    Var y = ag::mul(x, x);
    CHECK_FALSE(y.requires_grad());
}

TEST_CASE("Adam reduces a convex objective") {
    RandomStream rng(10);
    Var w(rng.normal_array({4, 1}), true);
    Var target(rng.normal_array({4, 1}), false);
    Adam opt({w}, 0.05);

    double first = 0.0, last = 0.0;
    for (int it = 0; it < 200; ++it) {
        Var loss = ag::mean_all(ag::square(ag::sub(w, target)));
        if (it == 0) first = loss.value()[0];
        last = loss.value()[0];
        opt.zero_grad();
        ag::backward(loss);
        opt.step();
    }
    CHECK(last < 1e-4 * first + 1e-10);
}

TEST_CASE("ema_update endpoints freeze and copy") {
    RandomStream rng(11);
    nn::Linear online(3, 2, rng), target(3, 2, rng);
    nn::ParamMap po, pt;
    online.collect("l", po);
    target.collect("l", pt);

    Array before = pt[0].second.value();
    nn::ema_update(pt, po, 1.0);  // m=1 freezes
    for (idx i = 0; i < before.size(); ++i) CHECK(pt[0].second.value()[i] == before[i]);

    nn::ema_update(pt, po, 0.0);  // m=0 copies
    for (idx i = 0; i < before.size(); ++i) CHECK(pt[0].second.value()[i] == po[0].second.value()[i]);
}

TEST_CASE("causal self-attention output is independent of future positions") {
    RandomStream rng(12);
    nn::SelfAttention attn(8, 2, true, rng);
    Array x = rng.normal_array({6, 8});

    ag::NoGradGuard ng;
    Array y0 = attn.forward(Var(x)).value();
    Array x2 = x;
    for (idx j = 0; j < 8; ++j) x2[5 * 8 + j] += 3.0;  // perturb last row only
    Array y1 = attn.forward(Var(x2)).value();

    for (idx i = 0; i < 5; ++i)
        for (idx j = 0; j < 8; ++j) CHECK(y0[i * 8 + j] == y1[i * 8 + j]);
}
