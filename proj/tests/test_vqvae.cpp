#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stylegest/motion/corpus.hpp"
#include "stylegest/motion/rot6d.hpp"
#include "stylegest/vq/vqvae.hpp"
#include "test_util.hpp"

using namespace stylegest;
using namespace stylegest::vq;
using ag::Var;

namespace {

VqVaeConfig tiny_config() {
    VqVaeConfig cfg;
    cfg.joints = 8;
    cfg.latent_dim = 16;
    cfg.codebook_size = 48;
    cfg.width = 32;
    cfg.epochs = 5;
    return cfg;
}

motion::SyntheticCorpus tiny_corpus(idx n = 32) {
    motion::CorpusConfig cfg;
    cfg.num_items = n;
    cfg.vocab_size = 12;
    cfg.k_min = 64;
    cfg.k_max = 96;
    return motion::generate_corpus(2024, cfg);
}

}  // namespace

TEST_CASE("padding policy pads with the last pose and records the pad length") {
    auto corpus = tiny_corpus(1);
    Motion& m = corpus.items[0].motion;
    m.frames = Array({33, m.frames.dim(1)});
    for (idx t = 0; t < 33; ++t)
        for (idx c = 0; c < m.frames.dim(1); ++c) m.frames.at(t, c) = static_cast<double>(t);
    const Motion p = pad_to_multiple(m, 8);
    CHECK(p.length() == 40);
    CHECK(p.pad_length == 7);
    for (idx t = 33; t < 40; ++t) CHECK(p.frames.at(t, 0) == 32.0);
}

TEST_CASE("encode yields L = K/d deterministically") {
    MotionVqVae codec(tiny_config(), 7);
    auto corpus = tiny_corpus(1);
    Motion m = pad_to_multiple(corpus.items[0].motion, 8);
    // force K=32 by truncation
    Motion m32;
    m32.fps = m.fps;
    m32.joints = m.joints;
    m32.frames = Array({32, m.frames.dim(1)});
    for (idx i = 0; i < m32.frames.size(); ++i) m32.frames[i] = m.frames[i];

    const LatentSequence z1 = codec.encode(m32);
    const LatentSequence z2 = codec.encode(m32);
    CHECK(z1.length() == 4);
    CHECK(z1.codes.dim(1) == 16);
    CHECK(z1.codes.storage() == z2.codes.storage());

    Motion wrongJ = m32;
    wrongJ.joints = 4;
    wrongJ.frames = Array({32, motion::pose_dim(4)});
    CHECK_THROWS_AS(codec.encode(wrongJ), ShapeError);
}

TEST_CASE("quantize picks the nearest codebook entry with low-index tie-break") {
    VqVaeConfig cfg = tiny_config();
    cfg.latent_dim = 2;
    cfg.codebook_size = 2;
    MotionVqVae codec(cfg, 1);
    // overwrite the codebook with the hand oracle {(0,0),(1,1)}
    nn::ParamMap pm = codec.named_params();
    for (auto& [name, v] : pm) {
        if (name == "codebook") {
            Array& cb = v.mutable_value();
            cb[0] = 0.0;
            cb[1] = 0.0;
            cb[2] = 1.0;
            cb[3] = 1.0;
        }
    }

    LatentSequence z;
    z.codes = Array::from({3, 2}, {0.1, 0.2,     // 0.05 vs 1.45 -> entry 0
                                   1.0, 1.0,     // exact member -> entry 1
                                   0.5, 0.5});   // equidistant -> tie broken to entry 0
    const LatentSequence q = codec.quantize(z);
    CHECK(q.indices == std::vector<idx>{0, 1, 0});
    CHECK(q.codes.at(1, 0) == 1.0);
    CHECK(q.codes.at(1, 1) == 1.0);

    // idempotence
    const LatentSequence qq = codec.quantize(q);
    CHECK(qq.indices == q.indices);
    CHECK(qq.codes.storage() == q.codes.storage());
}

TEST_CASE("decode emits L*d frames, trims pad, and renormalizes rotations") {
    MotionVqVae codec(tiny_config(), 3);
    LatentSequence z;
    z.codes = Array({1, 16});
    for (idx i = 0; i < 16; ++i) z.codes[i] = 0.3 * std::sin(static_cast<double>(i));
    z.downsample_rate = 8;
    const Motion m = codec.decode(z);
    CHECK(m.length() == 8);

    // rotations on the manifold
    for (idx j = 0; j < m.joints; ++j) {
        motion::Vec6 r6;
        for (idx c = 0; c < 6; ++c) r6[static_cast<std::size_t>(c)] = m.frames.at(3, 3 + 6 * j + c);
        CHECK(motion::is_rotation(motion::matrix_from_rot6d(r6), 1e-9));
    }

    z.pad_length = 3;
    CHECK(codec.decode(z).length() == 5);

    const Motion m2 = codec.decode(z);
    const Motion m3 = codec.decode(z);
    CHECK(m2.frames.storage() == m3.frames.storage());
}

TEST_CASE("loss terms vanish on exact codebook members and compose linearly in beta") {
    VqVaeConfig cfg = tiny_config();
    MotionVqVae codec(cfg, 11);
    auto corpus = tiny_corpus(1);
    const Motion m = pad_to_multiple(corpus.items[0].motion, 8);

    VqLosses l = codec.losses(m);
    CHECK(l.total.value()[0] ==
          doctest::Approx(l.reconstruction.value()[0] + l.codebook.value()[0] +
                          0.25 * l.commitment.value()[0]));

    // force z exactly onto codebook entries: codebook := encoder outputs
    const LatentSequence z = codec.encode(m);
    nn::ParamMap pm = codec.named_params();
    for (auto& [name, v] : pm) {
        if (name == "codebook") {
            Array& cb = v.mutable_value();
            for (idx l2 = 0; l2 < z.length() && l2 < cb.dim(0); ++l2)
                for (idx c = 0; c < z.codes.dim(1); ++c) cb[l2 * cb.dim(1) + c] = z.codes.at(l2, c);
        }
    }
    VqLosses l2 = codec.losses(m);
    CHECK(l2.codebook.value()[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(l2.commitment.value()[0] == doctest::Approx(0.0).epsilon(1e-12));

    VqVaeConfig cfg0 = cfg;
    cfg0.commitment_beta = 0.0;
    MotionVqVae codec0(cfg0, 11);
    VqLosses l0 = codec0.losses(m);
    CHECK(l0.total.value()[0] == doctest::Approx(l0.reconstruction.value()[0] + l0.codebook.value()[0]));
}

TEST_CASE("straight-through gradient equals the gradient at the quantized point") {
    RandomStream rng(5);
    // tiny decoder: one linear map
    Var w(rng.normal_array({4, 4}, 0.5), true);
    Var x(rng.normal_array({3, 4}), true);
    Array q = rng.normal_array({3, 4});

    auto loss_at = [&](const Array& input) {
        ag::NoGradGuard ng;
        return ag::mean_all(ag::square(ag::matmul(Var::constant(input), w))).value()[0];
    };

    Var st = ag::st_values(x, q);
    Var loss = ag::mean_all(ag::square(ag::matmul(st, w)));
    x.zero_grad();
    ag::backward(loss);

    // finite differences of the loss as a function of the *quantized* codes
    double worst = 0.0;
    const double h = 1e-6;
    for (idx i = 0; i < q.size(); ++i) {
        Array qp = q, qm = q;
        qp[i] += h;
        qm[i] -= h;
        const double fd = (loss_at(qp) - loss_at(qm)) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(x.grad()[i]), 1e-6});
        worst = std::max(worst, std::abs(fd - x.grad()[i]) / denom);
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("codebook loss touches only the codebook; commitment only the encoder") {
    MotionVqVae codec(tiny_config(), 13);
    auto corpus = tiny_corpus(1);
    const Motion m = pad_to_multiple(corpus.items[0].motion, 8);

    nn::ParamMap pm = codec.named_params();
    {
        VqLosses l = codec.losses(m);
        for (auto& [n, v] : pm) const_cast<Var&>(v).zero_grad();
        ag::backward(l.codebook);
        for (auto& [name, v] : pm) {
            double g = 0.0;
            if (v.node()->grad_ready)
                for (idx i = 0; i < v.grad().size(); ++i) g += std::abs(v.grad()[i]);
            if (name == "codebook") CHECK(g > 0.0);
            else CHECK(g == 0.0);
        }
    }
    {
        VqLosses l = codec.losses(m);
        for (auto& [n, v] : pm) const_cast<Var&>(v).zero_grad();
        ag::backward(l.commitment);
        for (auto& [name, v] : pm) {
            double g = 0.0;
            if (v.node()->grad_ready)
                for (idx i = 0; i < v.grad().size(); ++i) g += std::abs(v.grad()[i]);
            if (name == "codebook") CHECK(g == 0.0);
            else if (name.rfind("enc.", 0) == 0) continue;  // encoder grads may be any value
            else if (name.rfind("dec.", 0) == 0) CHECK(g == 0.0);
        }
    }
}

TEST_CASE("training reduces held-out reconstruction error deterministically") {
    auto corpus = tiny_corpus(32);
    std::vector<const Motion*> items;
    for (const auto& it : corpus.items) items.push_back(&it.motion);

    MotionVqVae codec(tiny_config(), 21);
    const VqTrainReport r = codec.train(items, 99);
    CHECK(r.final_holdout_mse < r.initial_holdout_mse);
    CHECK(r.dead_code_fraction < 0.2);

    MotionVqVae codec2(tiny_config(), 21);
    const VqTrainReport r2 = codec2.train(items, 99);
    CHECK(std::abs(r2.final_holdout_mse - r.final_holdout_mse) < 1e-6);

    // decode(encode) round-trip keeps K and J
    const Motion& m0 = corpus.items[0].motion;
    const Motion padded = pad_to_multiple(m0, 8);
    const Motion rec = codec.decode(codec.quantize(codec.encode(padded)));
    CHECK(rec.length() == m0.length());
    CHECK(rec.joints == m0.joints);
}
