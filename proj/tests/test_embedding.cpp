#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stylegest/embed/joint_embedding.hpp"
#include "stylegest/motion/corpus.hpp"
#include "test_util.hpp"

using namespace stylegest;
using namespace stylegest::embed;
using ag::Var;

namespace {

EmbedConfig tiny_config() {
    EmbedConfig cfg;
    cfg.vocab_size = 12;
    cfg.width = 32;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.latent_dim = 8;
    cfg.codebook_size = 24;
    cfg.pretrain_epochs = 2;
    cfg.contrastive_epochs = 4;
    cfg.batch = 8;
    return cfg;
}

Var unit_row(idx c, idx dim) {
    Array a({1, dim});
    a[c] = 1.0;
    return Var::constant(a);
}

}  // namespace

TEST_CASE("contrastive loss: single pair is zero, two aligned pairs match the hand value") {
    CHECK(JointEmbedding::contrastive_loss_var({unit_row(0, 4)}, {unit_row(0, 4)}, 1.0, true)
              .value()[0] == doctest::Approx(0.0));

    // B=2, tau=1, paired dot 1, cross dot 0: each direction CE = -ln(e/(e+1))
    std::vector<Var> zg{unit_row(0, 4), unit_row(1, 4)};
    std::vector<Var> zt{unit_row(0, 4), unit_row(1, 4)};
    const double per_dir = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));  // 0.31326...
    const double loss = JointEmbedding::contrastive_loss_var(zg, zt, 1.0, true).value()[0];
    CHECK(loss == doctest::Approx(2.0 * per_dir).epsilon(1e-9));
    CHECK(loss == doctest::Approx(0.6266).epsilon(1e-3));
}

TEST_CASE("contrastive loss is invariant to consistent batch reordering") {
    RandomStream rng(3);
    std::vector<Var> zg, zt;
    for (int i = 0; i < 5; ++i) {
        zg.push_back(Var::constant(rng.normal_array({1, 6})));
        zt.push_back(Var::constant(rng.normal_array({1, 6})));
    }
    const double a = JointEmbedding::contrastive_loss_var(zg, zt, 0.07, true).value()[0];
    std::vector<Var> zg2{zg[3], zg[0], zg[4], zg[1], zg[2]};
    std::vector<Var> zt2{zt[3], zt[0], zt[4], zt[1], zt[2]};
    const double b = JointEmbedding::contrastive_loss_var(zg2, zt2, 0.07, true).value()[0];
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(a >= 0.0);

    CHECK_THROWS_AS(JointEmbedding::contrastive_loss_var(zg, zt, 0.0, true), ValidationError);
    CHECK_THROWS_AS(JointEmbedding::contrastive_loss_var(zg, zt, -1.0, true), ValidationError);
}

TEST_CASE("mod loss reduces to the plain contrastive loss at w=0 and with identical momentum") {
    RandomStream rng(4);
    std::vector<Var> zg, zt;
    std::vector<Array> mg, mt;
    for (int i = 0; i < 6; ++i) {
        zg.push_back(Var::constant(rng.normal_array({1, 8})));
        zt.push_back(Var::constant(rng.normal_array({1, 8})));
        mg.push_back(zg.back().value());
        mt.push_back(zt.back().value());
    }
    const double base = JointEmbedding::contrastive_loss_var(zg, zt, 0.07, true).value()[0];
    const double w0 = JointEmbedding::mod_contrastive_loss_var(zg, zt, mg, mt, 0.07, 0.0, true).value()[0];
    CHECK(std::abs(w0 - base) < 1e-8);

    // momentum == online: KL terms vanish, loss = (1-w) * base
    const double w4 = JointEmbedding::mod_contrastive_loss_var(zg, zt, mg, mt, 0.07, 0.4, true).value()[0];
    CHECK(w4 == doctest::Approx(0.6 * base).epsilon(1e-9));

    // continuity in w: endpoints bracket intermediate values linearly here
    const double w2 = JointEmbedding::mod_contrastive_loss_var(zg, zt, mg, mt, 0.07, 0.2, true).value()[0];
    CHECK(w2 == doctest::Approx(0.8 * base).epsilon(1e-9));

    CHECK_THROWS_AS(JointEmbedding::mod_contrastive_loss_var(zg, zt, mg, mt, 0.07, 1.5, true),
                    ValidationError);
}

TEST_CASE("semantic saliency is a probability vector with the hand-computed two-row case") {
    Array f1({1, 3});
    f1[0] = 2.0;
    Array p1({1, 3});
    p1[0] = 1.0;
    const Array s1 = semantic_saliency(f1, p1);
    CHECK(s1.size() == 1);
    CHECK(s1[0] == doctest::Approx(1.0));

    // rows with logits (2, 0): softmax = (e^2, 1)/(e^2+1)
    Array f2 = Array::from({2, 2}, {2.0, 0.0, 0.0, 0.0});
    Array p2 = Array::from({1, 2}, {1.0, 0.0});
    const Array s2 = semantic_saliency(f2, p2);
    CHECK(s2[0] == doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 1.0)).epsilon(1e-9));
    CHECK(s2[0] == doctest::Approx(0.8808).epsilon(1e-3));
    CHECK(s2[1] == doctest::Approx(0.1192).epsilon(1e-3));

    // adding a constant to all logits leaves saliency unchanged: here the
    // logits are feature.pooled dot products, so shift the feature rows along
    // the pooled direction
    Array f3 = f2;
    f3[0] += 5.0;
    f3[2] += 5.0;
    const Array s3 = semantic_saliency(f3, p2);
    CHECK(s3[0] == doctest::Approx(s2[0]).epsilon(1e-12));

    RandomStream rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        const idx L = rng.uniform_int(1, 12), C = rng.uniform_int(2, 10);
        const Array s = semantic_saliency(rng.normal_array({L, C}), rng.normal_array({1, C}));
        double sum = 0.0;
        for (idx i = 0; i < s.size(); ++i) {
            CHECK(s[i] >= 0.0);
            sum += s[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("retrieval ranks an exact match first and rejects zero-norm queries") {
    Array corpus = Array::from({3, 2}, {1.0, 0.0,
                                        0.0, 1.0,
                                        0.7071067811865476, 0.7071067811865476});
    Array q = Array::from({2}, {1.0, 0.0});
    auto top = retrieve(q, corpus, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].first == 0);
    CHECK(top[0].second == doctest::Approx(1.0));
    CHECK(top[1].first == 2);
    CHECK(top[2].first == 1);
    CHECK(top[2].second == doctest::Approx(0.0));

    Array zero({2});
    CHECK_THROWS_AS(retrieve(zero, corpus, 1), ValidationError);
    CHECK_THROWS_AS(retrieve(q, corpus, 0), ValidationError);
}

TEST_CASE("max pooling dominates and is permutation invariant") {
    RandomStream rng(5);
    Array rows = rng.normal_array({4, 6});
    Var pooled = ag::max_over_rows(Var::constant(rows));

    // z >= every row, each coordinate equals some row's coordinate
    for (idx c = 0; c < 6; ++c) {
        bool hit = false;
        for (idx r = 0; r < 4; ++r) {
            CHECK(pooled.value()[c] >= rows.at(r, c));
            hit = hit || pooled.value()[c] == rows.at(r, c);
        }
        CHECK(hit);
    }

    // permuting rows leaves the pooled vector unchanged
    Array perm({4, 6});
    const idx order[4] = {2, 0, 3, 1};
    for (idx r = 0; r < 4; ++r)
        for (idx c = 0; c < 6; ++c) perm.at(r, c) = rows.at(order[r], c);
    const Array pooled2 = ag::max_over_rows(Var::constant(perm)).value();
    CHECK(pooled2.storage() == pooled.value().storage());

    // appending an elementwise-dominated row changes nothing
    Array bigger({5, 6});
    for (idx i = 0; i < rows.size(); ++i) bigger[i] = rows[i];
    for (idx c = 0; c < 6; ++c) bigger.at(4, c) = pooled.value()[c] - 1.0;
    const Array pooled3 = ag::max_over_rows(Var::constant(bigger)).value();
    CHECK(pooled3.storage() == pooled.value().storage());
}

TEST_CASE("encoders satisfy their shape and determinism contracts") {
    JointEmbedding je(tiny_config(), 42);

    motion::Transcript t;
    t.tokens = {3};
    t.word_spans = {{0, 10}};
    const EncodedSequence et = je.encode_transcript(t);
    CHECK(et.features.dim(0) == 1);
    CHECK(et.features.dim(1) == 32);
    // single token: pooled equals that token's feature row
    for (idx c = 0; c < 32; ++c) CHECK(et.pooled[c] == et.features[c]);

    motion::Transcript bad;
    CHECK_THROWS_AS(je.encode_transcript(bad), ValidationError);
    bad.tokens = {99};
    bad.word_spans = {{0, 5}};
    CHECK_THROWS_AS(je.encode_transcript(bad), ValidationError);

    RandomStream rng(6);
    for (idx L : {1, 2, 7, 33, 128}) {
        vq::LatentSequence z;
        z.codes = rng.normal_array({L, 8});
        const EncodedSequence eg = je.encode_gesture(z);
        CHECK(eg.features.dim(0) == L);
        CHECK(eg.features.dim(1) == 32);
        if (L == 1)
            for (idx c = 0; c < 32; ++c) CHECK(eg.pooled[c] == eg.features[c]);
        const EncodedSequence eg2 = je.encode_gesture(z);
        CHECK(eg2.pooled.storage() == eg.pooled.storage());
    }

    vq::LatentSequence empty;
    empty.codes = Array();
    CHECK_THROWS_AS(je.encode_gesture(empty), ValidationError);
}

TEST_CASE("momentum update endpoints freeze and copy") {
    JointEmbedding je(tiny_config(), 1);
    nn::ParamMap online, mom;
    // nudge online params away from the momentum copies
    for (auto& [name, v] : je.online_params()) {
        Array& a = const_cast<Var&>(v).mutable_value();
        for (idx i = 0; i < a.size(); ++i) a[i] += 0.5;
    }
    je.momentum_transcript().collect("t", mom);

    const Array before = mom[0].second.value();
    je.update_momentum(1.0);
    CHECK(mom[0].second.value().storage() == before.storage());

    je.update_momentum(0.0);
    nn::ParamMap on2;
    je.online_params()[0];
    on2 = je.online_params();
    CHECK(mom[0].second.value().storage() == on2[0].second.value().storage());
}

TEST_CASE("masked pretraining starts at chance and beats it afterwards") {
    motion::CorpusConfig ccfg;
    ccfg.num_items = 24;
    ccfg.vocab_size = 12;
    ccfg.k_min = 64;
    ccfg.k_max = 96;
    auto corpus = motion::generate_corpus(7, ccfg);

    EmbedConfig cfg = tiny_config();
    cfg.pretrain_epochs = 6;
    JointEmbedding je(cfg, 11);

    // synthetic quantized latents with temporal structure: ids come in runs,
    // so a masked position is predictable from its neighbors
    RandomStream rng(13);
    Array codebook = rng.normal_array({cfg.codebook_size, cfg.latent_dim});
    std::vector<vq::LatentSequence> latents;
    for (const auto& item : corpus.items) {
        vq::LatentSequence z;
        const idx L = motion::latent_length(item.motion.length(), 8);
        z.codes = Array({L, cfg.latent_dim});
        idx id = rng.uniform_index(cfg.codebook_size);
        idx run = 0;
        for (idx l = 0; l < L; ++l) {
            if (run == 0) {
                id = rng.uniform_index(cfg.codebook_size);
                run = rng.uniform_int(3, 6);
            }
            --run;
            z.indices.push_back(id);
            for (idx c = 0; c < cfg.latent_dim; ++c) z.codes.at(l, c) = codebook.at(id, c);
        }
        latents.push_back(std::move(z));
    }

    EmbedTrainReport report;
    je.masked_pretrain(latents, 3, report);
    const double chance_loss = std::log(static_cast<double>(cfg.codebook_size));
    CHECK(report.pretrain_initial_loss == doctest::Approx(chance_loss).epsilon(0.10));
    CHECK(report.pretrain_final_loss < report.pretrain_initial_loss);
    CHECK(report.pretrain_masked_top1 > 5.0 / static_cast<double>(cfg.codebook_size));

    EmbedConfig bad = cfg;
    bad.mask_ratio = 1.5;
    JointEmbedding je2(bad, 1);
    EmbedTrainReport r2;
    CHECK_THROWS_AS(je2.masked_pretrain(latents, 1, r2), ValidationError);
}

TEST_CASE("contrastive training aligns gestures with transcripts on held-out pairs") {
    // distinct codes per token make the mapping learnable even at toy scale
    EmbedConfig cfg = tiny_config();
    cfg.contrastive_epochs = 12;
    cfg.batch = 8;
    JointEmbedding je(cfg, 5);

    RandomStream rng(17);
    Array token_codes = rng.normal_array({cfg.vocab_size, cfg.latent_dim});
    std::vector<vq::LatentSequence> latents;
    std::vector<motion::Transcript> transcripts;
    for (int i = 0; i < 72; ++i) {
        motion::Transcript t;
        const idx n_words = rng.uniform_int(2, 4);
        vq::LatentSequence z;
        z.codes = Array({n_words * 3, cfg.latent_dim});
        for (idx w = 0; w < n_words; ++w) {
            const idx tok = rng.uniform_index(cfg.vocab_size);
            t.tokens.push_back(tok);
            t.word_spans.push_back({w * 30, w * 30 + 20});
            for (idx r = 0; r < 3; ++r) {
                z.indices.push_back(tok % cfg.codebook_size);
                for (idx c = 0; c < cfg.latent_dim; ++c)
                    z.codes.at(w * 3 + r, c) = token_codes.at(tok, c) + 0.05 * rng.normal();
            }
        }
        latents.push_back(std::move(z));
        transcripts.push_back(std::move(t));
    }
    std::vector<const motion::Transcript*> tptrs;
    for (const auto& t : transcripts) tptrs.push_back(&t);

    const EmbedTrainReport report = je.train(latents, tptrs, 23);
    CHECK(report.contrastive_final_loss < report.contrastive_initial_loss);
    CHECK(report.holdout_top1_g2t >= 0.5);
    CHECK(report.holdout_top1_t2g >= 0.5);
}
