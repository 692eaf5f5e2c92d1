#include "stylegest/embed/joint_embedding.hpp"

#include <algorithm>
#include <cmath>

#include "stylegest/core/optim.hpp"

namespace stylegest::embed {

Array semantic_saliency(const Array& features, const Array& pooled) {
    if (features.rank() != 2 || pooled.size() != features.dim(1))
        throw ShapeError("semantic_saliency: incompatible shapes");
    const idx L = features.dim(0), C = features.dim(1);
    Array s({L});
    double mx = -1e300;
    for (idx i = 0; i < L; ++i) {
        double d = 0.0;
        for (idx c = 0; c < C; ++c) d += features[i * C + c] * pooled[c];
        s[i] = d;
        mx = std::max(mx, d);
    }
    double z = 0.0;
    for (idx i = 0; i < L; ++i) {
        s[i] = std::exp(s[i] - mx);
        z += s[i];
    }
    for (idx i = 0; i < L; ++i) s[i] /= z;
    return s;
}

std::vector<std::pair<idx, double>> retrieve(const Array& query, const Array& corpus_rows, idx k) {
    if (k < 1) throw ValidationError("retrieve: k >= 1 required");
    if (corpus_rows.rank() != 2 || corpus_rows.dim(0) < 1) throw ValidationError("retrieve: empty corpus");
    if (query.size() != corpus_rows.dim(1)) throw ShapeError("retrieve: width mismatch");
    double qn = 0.0;
    for (idx i = 0; i < query.size(); ++i) qn += query[i] * query[i];
    qn = std::sqrt(qn);
    if (qn < 1e-12) throw ValidationError("retrieve: zero-norm query embedding");

    const idx N = corpus_rows.dim(0), C = corpus_rows.dim(1);
    std::vector<std::pair<idx, double>> scored;
    scored.reserve(static_cast<std::size_t>(N));
    for (idx i = 0; i < N; ++i) {
        double d = 0.0, rn = 0.0;
        for (idx c = 0; c < C; ++c) {
            d += query[c] * corpus_rows[i * C + c];
            rn += corpus_rows[i * C + c] * corpus_rows[i * C + c];
        }
        rn = std::sqrt(rn);
        if (rn < 1e-12) throw ValidationError("retrieve: zero-norm corpus embedding at index " +
                                              std::to_string(i));
        scored.push_back({i, d / (qn * rn)});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    scored.resize(static_cast<std::size_t>(std::min(k, N)));
    return scored;
}

// ---------------------------------------------------------------------------
// encoders
// ---------------------------------------------------------------------------

TranscriptEncoder::TranscriptEncoder(const EmbedConfig& cfg, RandomStream& rng)
    : token_table_(cfg.vocab_size, cfg.width, rng), width_(cfg.width) {
    {
        Array& t = token_table_.table.mutable_value();
        for (idx i = 0; i < t.size(); ++i) t[i] *= 15.0;  // std 0.02 -> 0.3
    }
    if (cfg.final_layer_norm) final_ln_ = nn::LayerNorm(cfg.width);
    for (idx l = 0; l < cfg.layers; ++l)
        blocks_.emplace_back(cfg.width, cfg.heads, cfg.width * 4, false, rng);
}

Var TranscriptEncoder::features_var(const std::vector<idx>& tokens) const {
    if (tokens.empty()) throw ValidationError("TranscriptEncoder: empty transcript");
    Var x = token_table_.forward(tokens);
    std::vector<double> pos(tokens.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<double>(i);
    Array pe = nn::sinusoidal_rows(pos, width_);
    for (idx i = 0; i < pe.size(); ++i) pe[i] *= 0.1;
    x = ag::add(x, Var::constant(pe));
    for (const auto& b : blocks_) x = b.forward(x);
    return final_ln_.gain.defined() ? final_ln_.forward(x) : x;
}

void TranscriptEncoder::collect(const std::string& prefix, nn::ParamMap& pm) const {
    token_table_.collect(prefix + ".tokens", pm);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        blocks_[i].collect(prefix + ".block" + std::to_string(i), pm);
    if (final_ln_.gain.defined()) final_ln_.collect(prefix + ".ln", pm);
}

GestureEncoder::GestureEncoder(const EmbedConfig& cfg, RandomStream& rng)
    : in_proj_(cfg.latent_dim, cfg.width, rng), width_(cfg.width) {
    if (cfg.final_layer_norm) final_ln_ = nn::LayerNorm(cfg.width);
    for (idx l = 0; l < cfg.layers; ++l)
        blocks_.emplace_back(cfg.width, cfg.heads, cfg.width * 4, false, rng);
}

Var GestureEncoder::run_blocks(const Var& x_in) const {
    Var x = x_in;
    std::vector<double> pos(static_cast<std::size_t>(x.value().dim(0)));
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<double>(i);
    Array pe = nn::sinusoidal_rows(pos, width_);
    for (idx i = 0; i < pe.size(); ++i) pe[i] *= 0.1;
    x = ag::add(x, Var::constant(pe));
    for (const auto& b : blocks_) x = b.forward(x);
    return final_ln_.gain.defined() ? final_ln_.forward(x) : x;
}

Var GestureEncoder::features_var(const Var& codes) const {
    if (codes.value().rank() != 2 || codes.value().dim(0) < 1)
        throw ValidationError("GestureEncoder: empty latent sequence");
    return run_blocks(in_proj_.forward(codes));
}

Var GestureEncoder::features_var_masked(const Var& codes, const std::vector<idx>& masked,
                                        const Var& mask_embedding) const {
    if (codes.value().rank() != 2 || codes.value().dim(0) < 1)
        throw ValidationError("GestureEncoder: empty latent sequence");
    const idx L = codes.value().dim(0);
    Array keep({L, 1}, 1.0);
    Array fill({L, 1}, 0.0);
    for (idx l : masked) {
        keep[l] = 0.0;
        fill[l] = 1.0;
    }
    Var x = in_proj_.forward(codes);
    Var kept = ag::mul(x, ag::matmul(Var::constant(keep), Var::constant(Array({1, width_}, 1.0))));
    Var mask_rows = ag::matmul(Var::constant(fill), mask_embedding);  // (L, C_s)
    return run_blocks(ag::add(kept, mask_rows));
}

void GestureEncoder::collect(const std::string& prefix, nn::ParamMap& pm) const {
    in_proj_.collect(prefix + ".in", pm);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        blocks_[i].collect(prefix + ".block" + std::to_string(i), pm);
    if (final_ln_.gain.defined()) final_ln_.collect(prefix + ".ln", pm);
}

// ---------------------------------------------------------------------------
// joint embedding
// ---------------------------------------------------------------------------

JointEmbedding::JointEmbedding(const EmbedConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    RandomStream rng(mix_seed(seed, "joint-embedding-init"));
    text_ = TranscriptEncoder(cfg, rng);
    gesture_ = GestureEncoder(cfg, rng);
    mask_head_ = nn::Linear(cfg.width, cfg.codebook_size, rng);
    // near-zero head logits so the initial masked loss sits at the
    // uniform-prediction baseline ln(N_VQ)
    {
        Array& w = mask_head_.w.mutable_value();
        for (idx i = 0; i < w.size(); ++i) w[i] *= 0.05;
    }
    mask_embedding_ = Var(rng.normal_array({1, cfg.width}, 0.02), true);

    // momentum encoders start as exact copies and never receive gradients
    RandomStream rng2(mix_seed(seed, "joint-embedding-init"));
    mom_text_ = TranscriptEncoder(cfg, rng2);
    mom_gesture_ = GestureEncoder(cfg, rng2);
    nn::ParamMap src, dst;
    text_.collect("t", src);
    gesture_.collect("g", src);
    mom_text_.collect("t", dst);
    mom_gesture_.collect("g", dst);
    nn::copy_params(dst, src);
    nn::set_requires_grad(dst, false);
}

EncodedSequence JointEmbedding::encode_transcript(const Transcript& t) const {
    if (t.tokens.empty()) throw ValidationError("encode_transcript: empty transcript");
    for (idx tok : t.tokens)
        if (tok < 0 || tok >= cfg_.vocab_size)
            throw ValidationError("encode_transcript: token id out of vocabulary");
    ag::NoGradGuard ng;
    Var f = text_.features_var(t.tokens);
    EncodedSequence out;
    out.features = f.value();
    out.pooled = ag::max_over_rows(f).value();
    return out;
}

EncodedSequence JointEmbedding::encode_gesture(const LatentSequence& z) const {
    if (z.length() < 1) throw ValidationError("encode_gesture: empty latent sequence");
    if (z.codes.dim(1) != cfg_.latent_dim) throw ShapeError("encode_gesture: latent width mismatch");
    ag::NoGradGuard ng;
    Var f = gesture_.features_var(Var::constant(z.codes));
    EncodedSequence out;
    out.features = f.value();
    out.pooled = ag::max_over_rows(f).value();
    return out;
}

Var JointEmbedding::transcript_pooled_var(const std::vector<idx>& tokens) const {
    return ag::max_over_rows(text_.features_var(tokens));
}

Var JointEmbedding::gesture_pooled_var(const Var& codes) const {
    return ag::max_over_rows(gesture_.features_var(codes));
}

namespace {

Var stack_rows(const std::vector<Var>& rows, bool normalize) {
    std::vector<Var> prepared;
    prepared.reserve(rows.size());
    for (const auto& r : rows) prepared.push_back(normalize ? ag::l2_normalize(r) : r);
    return ag::concat_rows(prepared);
}

Array stack_value_rows(const std::vector<Array>& rows, bool normalize) {
    const idx B = static_cast<idx>(rows.size());
    const idx C = rows[0].size();
    Array out({B, C});
    for (idx i = 0; i < B; ++i) {
        double n = 0.0;
        for (idx c = 0; c < C; ++c) n += rows[static_cast<std::size_t>(i)][c] * rows[static_cast<std::size_t>(i)][c];
        n = normalize ? std::sqrt(n + 1e-30) : 1.0;
        for (idx c = 0; c < C; ++c) out[i * C + c] = rows[static_cast<std::size_t>(i)][c] / n;
    }
    return out;
}

Array softmax_rows_value(const Array& logits) {
    Array out = logits;
    const idx R = out.dim(0), C = out.dim(1);
    for (idx i = 0; i < R; ++i) {
        double mx = out[i * C];
        for (idx j = 1; j < C; ++j) mx = std::max(mx, out[i * C + j]);
        double z = 0.0;
        for (idx j = 0; j < C; ++j) {
            out[i * C + j] = std::exp(out[i * C + j] - mx);
            z += out[i * C + j];
        }
        for (idx j = 0; j < C; ++j) out[i * C + j] /= z;
    }
    return out;
}

std::vector<idx> iota_ids(idx n) {
    std::vector<idx> ids(static_cast<std::size_t>(n));
    for (idx i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    return ids;
}

}  // namespace

Var JointEmbedding::contrastive_loss_var(const std::vector<Var>& z_g, const std::vector<Var>& z_t,
                                         double tau, bool normalize) {
    if (tau <= 0.0) throw ValidationError("contrastive_loss: tau must be positive");
    if (z_g.empty() || z_g.size() != z_t.size())
        throw ValidationError("contrastive_loss: batch must be non-empty and paired");
    const idx B = static_cast<idx>(z_g.size());
    Var G = stack_rows(z_g, normalize);
    Var T = stack_rows(z_t, normalize);
    Var sim = ag::scale(ag::matmul_nt(G, T), 1.0 / tau);  // (B,B), row i: gesture i vs all texts
    const auto ids = iota_ids(B);
    Var g2t = ag::nll_rows(ag::log_softmax_rows(sim), ids);
    Var t2g = ag::nll_rows(ag::log_softmax_rows(ag::transpose(sim)), ids);
    return ag::add(g2t, t2g);
}

Var JointEmbedding::mod_contrastive_loss_var(const std::vector<Var>& z_g, const std::vector<Var>& z_t,
                                             const std::vector<Array>& mom_z_g,
                                             const std::vector<Array>& mom_z_t, double tau, double w,
                                             bool normalize) {
    if (w < 0.0 || w > 1.0) throw ValidationError("mod_contrastive_loss: w must be in [0,1]");
    Var base = contrastive_loss_var(z_g, z_t, tau, normalize);
    if (w == 0.0) return base;
    if (mom_z_g.size() != z_g.size() || mom_z_t.size() != z_t.size())
        throw ValidationError("mod_contrastive_loss: momentum batch size mismatch");

    const idx B = static_cast<idx>(z_g.size());
    // pseudo-targets from the momentum embeddings
    Array Gm = stack_value_rows(mom_z_g, normalize);
    Array Tm = stack_value_rows(mom_z_t, normalize);
    Array sim_m({B, B});
    const idx C = Gm.dim(1);
    for (idx i = 0; i < B; ++i)
        for (idx j = 0; j < B; ++j) {
            double d = 0.0;
            for (idx c = 0; c < C; ++c) d += Gm[i * C + c] * Tm[j * C + c];
            sim_m[i * B + j] = d / tau;
        }
    const Array p_g2t = softmax_rows_value(sim_m);
    Array sim_m_t({B, B});
    for (idx i = 0; i < B; ++i)
        for (idx j = 0; j < B; ++j) sim_m_t[i * B + j] = sim_m[j * B + i];
    const Array p_t2g = softmax_rows_value(sim_m_t);

    // KL(p~ || p) = sum p~ log p~ - sum p~ log p; first term is constant
    auto kl_term = [&](const Array& target, const Var& logp) {
        double entropy_neg = 0.0;
        for (idx i = 0; i < target.size(); ++i)
            entropy_neg += target[i] * std::log(std::max(target[i], 1e-300));
        Var cross = ag::dot(Var::constant(target), logp);  // sum p~ log p
        return ag::add_scalar(ag::scale(cross, -1.0 / static_cast<double>(B)),
                              entropy_neg / static_cast<double>(B));
    };

    Var G = stack_rows(z_g, normalize);
    Var T = stack_rows(z_t, normalize);
    Var sim = ag::scale(ag::matmul_nt(G, T), 1.0 / tau);
    Var kl_g2t = kl_term(p_g2t, ag::log_softmax_rows(sim));
    Var kl_t2g = kl_term(p_t2g, ag::log_softmax_rows(ag::transpose(sim)));

    return ag::add(ag::scale(base, 1.0 - w), ag::scale(ag::add(kl_g2t, kl_t2g), w));
}

void JointEmbedding::update_momentum(double m) {
    nn::ParamMap src, dst;
    text_.collect("t", src);
    gesture_.collect("g", src);
    mom_text_.collect("t", dst);
    mom_gesture_.collect("g", dst);
    nn::ema_update(dst, src, m);
}

void JointEmbedding::masked_pretrain(const std::vector<LatentSequence>& latents, std::uint64_t seed,
                                     EmbedTrainReport& report) {
    if (cfg_.mask_ratio <= 0.0 || cfg_.mask_ratio >= 1.0)
        throw ValidationError("masked_pretrain: mask ratio must be inside (0,1)");
    if (latents.empty()) throw ValidationError("masked_pretrain: empty corpus");
    for (const auto& z : latents)
        if (!z.quantized() || static_cast<idx>(z.indices.size()) != z.length())
            throw ValidationError("masked_pretrain: quantized latents with indices required");
    RandomStream rng(mix_seed(seed, "masked-pretrain"));

    nn::ParamMap pm;
    gesture_.collect("g", pm);
    mask_head_.collect("head", pm);
    pm.push_back({"mask_emb", mask_embedding_});
    Adam opt(nn::values_of(pm), cfg_.lr);

    auto build_loss = [&](const LatentSequence& z, RandomStream& r, double* top1) {
        const idx L = z.length();
        std::vector<idx> masked;
        for (idx l = 0; l < L; ++l)
            if (r.uniform() < cfg_.mask_ratio) masked.push_back(l);
        if (masked.empty()) return Var(Array::scalar(0.0), false);

        Var feats = gesture_.features_var_masked(Var::constant(z.codes), masked, mask_embedding_);
        Var picked = ag::embedding_rows(feats, masked);
        Var logits = mask_head_.forward(picked);
        std::vector<idx> targets;
        for (idx l : masked) targets.push_back(z.indices[static_cast<std::size_t>(l)]);
        if (top1) {
            const Array& lv = logits.value();
            idx hit = 0;
            for (std::size_t r2 = 0; r2 < masked.size(); ++r2) {
                idx arg = 0;
                for (idx c = 1; c < lv.dim(1); ++c)
                    if (lv.at(static_cast<idx>(r2), c) > lv.at(static_cast<idx>(r2), arg)) arg = c;
                if (arg == targets[r2]) ++hit;
            }
            *top1 = static_cast<double>(hit) / static_cast<double>(masked.size());
        }
        return ag::nll_rows(ag::log_softmax_rows(logits), targets);
    };

    report.pretrain_initial_loss = 0.0;
    {
        RandomStream r0(mix_seed(seed, "pretrain-eval0"));
        idx n = std::min<idx>(16, static_cast<idx>(latents.size()));
        for (idx i = 0; i < n; ++i) {
            ag::NoGradGuard ng;
            report.pretrain_initial_loss += build_loss(latents[static_cast<std::size_t>(i)], r0, nullptr).value()[0];
        }
        report.pretrain_initial_loss /= static_cast<double>(n);
    }

    std::vector<idx> order(latents.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<idx>(i);
    for (idx e = 0; e < cfg_.pretrain_epochs; ++e) {
        rng.shuffle(order);
        for (idx i : order) {
            Var loss = build_loss(latents[static_cast<std::size_t>(i)], rng, nullptr);
            if (!loss.requires_grad()) continue;
            opt.zero_grad();
            ag::backward(loss);
            opt.step();
        }
    }
    if (!opt.params_finite()) throw NumericalError("masked_pretrain: parameters diverged");

    double acc = 0.0, loss_sum = 0.0;
    {
        RandomStream r1(mix_seed(seed, "pretrain-eval1"));
        idx n = std::min<idx>(16, static_cast<idx>(latents.size()));
        for (idx i = 0; i < n; ++i) {
            ag::NoGradGuard ng;
            double t1 = 0.0;
            loss_sum += build_loss(latents[static_cast<std::size_t>(i)], r1, &t1).value()[0];
            acc += t1;
        }
        report.pretrain_final_loss = loss_sum / static_cast<double>(n);
        report.pretrain_masked_top1 = acc / static_cast<double>(n);
    }
}

EmbedTrainReport JointEmbedding::train(const std::vector<LatentSequence>& latents,
                                       const std::vector<const Transcript*>& transcripts,
                                       std::uint64_t seed) {
    if (latents.size() != transcripts.size() || latents.empty())
        throw ValidationError("JointEmbedding::train: paired non-empty corpus required");
    EmbedTrainReport report;
    masked_pretrain(latents, seed, report);

    // momentum encoders restart from the pretrained online weights
    update_momentum(0.0);

    const idx n = static_cast<idx>(latents.size());
    const idx n_hold = std::min<idx>(cfg_.batch, std::max<idx>(1, n / 10));
    const idx n_train = n - n_hold;

    nn::ParamMap pm = online_params();
    Adam opt(nn::values_of(pm), cfg_.lr);
    RandomStream rng(mix_seed(seed, "contrastive"));

    std::vector<idx> order(static_cast<std::size_t>(n_train));
    for (idx i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;

    bool first = true;
    const idx steps_per_epoch = n_train / cfg_.batch;
    const idx total_steps = std::max<idx>(1, steps_per_epoch * cfg_.contrastive_epochs);
    idx step_no = 0;
    for (idx epoch = 0; epoch < cfg_.contrastive_epochs; ++epoch) {
        rng.shuffle(order);
        for (idx b0 = 0; b0 + cfg_.batch <= n_train; b0 += cfg_.batch) {
            std::vector<Var> z_g, z_t;
            std::vector<Array> m_g, m_t;
            for (idx k = 0; k < cfg_.batch; ++k) {
                const idx i = order[static_cast<std::size_t>(b0 + k)];
                Array codes = latents[static_cast<std::size_t>(i)].codes;
                std::vector<idx> toks = transcripts[static_cast<std::size_t>(i)]->tokens;
                if (cfg_.augment) {
                    // contiguous crop of at least 70% of the latent rows
                    const idx L = codes.dim(0), C = codes.dim(1);
                    const idx keep = std::max<idx>(1, L - rng.uniform_index(std::max<idx>(1, (3 * L) / 10)));
                    const idx start = rng.uniform_index(L - keep + 1);
                    Array cropped({keep, C});
                    for (idx r = 0; r < keep * C; ++r) cropped[r] = codes[start * C + r];
                    // zero-row dropout
                    for (idx r = 0; r < keep; ++r)
                        if (rng.uniform() < 0.08)
                            for (idx c = 0; c < C; ++c) cropped[r * C + c] = 0.0;
                    codes = std::move(cropped);
                    // token dropout, always keeping one
                    if (toks.size() > 1) {
                        std::vector<idx> kept;
                        for (idx t2 : toks)
                            if (rng.uniform() >= 0.08) kept.push_back(t2);
                        if (!kept.empty()) toks = std::move(kept);
                    }
                }
                z_g.push_back(gesture_pooled_var(Var::constant(codes)));
                z_t.push_back(transcript_pooled_var(toks));
                ag::NoGradGuard ng;
                m_g.push_back(ag::max_over_rows(mom_gesture_.features_var(Var::constant(codes))).value());
                m_t.push_back(ag::max_over_rows(mom_text_.features_var(toks)).value());
            }
            // the distillation weight ramps in so the early (uninformed)
            // teacher cannot pin the model to its initial predictions
            const double ramp = std::min(1.0, static_cast<double>(step_no) /
                                                  (0.4 * static_cast<double>(total_steps)));
            const double progress = static_cast<double>(step_no) / static_cast<double>(total_steps);
            opt.set_lr(cfg_.lr * (0.1 + 0.45 * (1.0 + std::cos(3.14159265358979 * progress))));
            ++step_no;
            Var loss = mod_contrastive_loss_var(z_g, z_t, m_g, m_t, cfg_.tau,
                                                cfg_.mod_weight * ramp, cfg_.normalize_embeddings);
            if (first) {
                report.contrastive_initial_loss = loss.value()[0];
                first = false;
            }
            report.contrastive_final_loss = loss.value()[0];
            if (!std::isfinite(loss.value()[0]))
                throw NumericalError("JointEmbedding::train: loss diverged");
            opt.zero_grad();
            ag::backward(loss);
            opt.step();
            update_momentum(cfg_.ema_momentum);
        }
    }

    // retrieval accuracy over a batch of pairs starting at `base`
    auto retrieval_eval = [&](idx base, idx B, double* g2t_out, double* t2g_out) {
        ag::NoGradGuard ng;
        Array G({B, cfg_.width}), T({B, cfg_.width});
        for (idx k = 0; k < B; ++k) {
            const idx i = base + k;
            Array g = ag::max_over_rows(gesture_.features_var(Var::constant(latents[static_cast<std::size_t>(i)].codes)))
                          .value();
            Array t = ag::max_over_rows(text_.features_var(transcripts[static_cast<std::size_t>(i)]->tokens)).value();
            for (idx c = 0; c < cfg_.width; ++c) {
                G[k * cfg_.width + c] = g[c];
                T[k * cfg_.width + c] = t[c];
            }
        }
        idx hit_g2t = 0, hit_t2g = 0;
        for (idx k = 0; k < B; ++k) {
            Array q({cfg_.width});
            for (idx c = 0; c < cfg_.width; ++c) q[c] = G[k * cfg_.width + c];
            if (retrieve(q, T, 1)[0].first == k) ++hit_g2t;
            for (idx c = 0; c < cfg_.width; ++c) q[c] = T[k * cfg_.width + c];
            if (retrieve(q, G, 1)[0].first == k) ++hit_t2g;
        }
        *g2t_out = static_cast<double>(hit_g2t) / static_cast<double>(B);
        *t2g_out = static_cast<double>(hit_t2g) / static_cast<double>(B);
    };
    retrieval_eval(n_train, n_hold, &report.holdout_top1_g2t, &report.holdout_top1_t2g);
    retrieval_eval(0, std::min<idx>(n_train, n_hold), &report.train_top1_g2t, &report.train_top1_t2g);
    return report;
}

nn::ParamMap JointEmbedding::online_params() const {
    nn::ParamMap pm;
    text_.collect("text", pm);
    gesture_.collect("gesture", pm);
    return pm;
}

nn::ParamMap JointEmbedding::named_params() const {
    nn::ParamMap pm;
    text_.collect("text", pm);
    gesture_.collect("gesture", pm);
    mom_text_.collect("mom_text", pm);
    mom_gesture_.collect("mom_gesture", pm);
    mask_head_.collect("mask_head", pm);
    pm.push_back({"mask_emb", mask_embedding_});
    return pm;
}

}  // namespace stylegest::embed
