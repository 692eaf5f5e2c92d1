#include "stylegest/vq/vqvae.hpp"

#include <cmath>

#include "stylegest/core/optim.hpp"
#include "stylegest/motion/rot6d.hpp"

namespace stylegest::vq {

using ag::Var;

namespace {

idx log2_exact(idx d) {
    idx b = 0, v = d;
    while (v > 1) {
        if (v % 2 != 0) throw ValidationError("VqVae: downsample must be a power of two");
        v /= 2;
        ++b;
    }
    if (b < 1) throw ValidationError("VqVae: downsample must be >= 2");
    return b;
}

Var conv_on(const Var& x, const Var& w, const Var& b, idx stride, idx pad) {
    return ag::conv1d(x, w, b, stride, pad);
}

}  // namespace

Motion pad_to_multiple(const Motion& m, idx d) {
    m.validate();
    const idx k = m.length();
    const idx pad = (d - k % d) % d;
    if (pad == 0) {
        Motion out = m;
        out.pad_length = 0;
        return out;
    }
    Motion out;
    out.fps = m.fps;
    out.joints = m.joints;
    out.pad_length = pad;
    out.frames = Array({k + pad, m.frames.dim(1)});
    for (idx t = 0; t < k + pad; ++t) {
        const idx src = std::min(t, k - 1);
        for (idx c = 0; c < m.frames.dim(1); ++c) out.frames.at(t, c) = m.frames.at(src, c);
    }
    return out;
}

MotionVqVae::MotionVqVae(const VqVaeConfig& config, std::uint64_t seed) : cfg_(config) {
    if (cfg_.codebook_size < 2) throw ValidationError("VqVae: codebook_size >= 2 required");
    blocks_ = log2_exact(cfg_.downsample);
    RandomStream rng(mix_seed(seed, "vqvae-init"));
    const idx P = motion::pose_dim(cfg_.joints);
    const idx W = cfg_.width;

    auto make_weight = [&](idx cout, idx kw, idx cin) {
        const double std = std::sqrt(2.0 / static_cast<double>(kw * cin + cout));
        return Var(rng.normal_array({cout, kw, cin}, std), true);
    };
    auto make_bias = [&](idx cout) { return Var(Array({cout}), true); };

    in_proj_w_ = make_weight(W, 3, P);
    in_proj_b_ = make_bias(W);
    for (idx b = 0; b < blocks_; ++b) {
        ConvBlock blk;
        blk.w1 = make_weight(W, 4, W);
        blk.b1 = make_bias(W);
        blk.w2 = make_weight(W, 3, W);
        blk.b2 = make_bias(W);
        blk.w3 = make_weight(W, 3, W);
        blk.b3 = make_bias(W);
        down_.push_back(blk);
    }
    to_latent_w_ = make_weight(cfg_.latent_dim, 3, W);
    to_latent_b_ = make_bias(cfg_.latent_dim);

    from_latent_w_ = make_weight(W, 3, cfg_.latent_dim);
    from_latent_b_ = make_bias(W);
    for (idx b = 0; b < blocks_; ++b) {
        ConvBlock blk;
        blk.w1 = make_weight(W, 3, W);
        blk.b1 = make_bias(W);
        blk.w2 = make_weight(W, 3, W);
        blk.b2 = make_bias(W);
        blk.w3 = make_weight(W, 3, W);
        blk.b3 = make_bias(W);
        up_.push_back(blk);
    }
    out_proj_w_ = make_weight(P, 3, W);
    out_proj_b_ = Var(Array({P}), true);
    // bias starts at the neutral pose so early decodes stay in the valid
    // rotation region
    {
        Array& b = out_proj_b_.mutable_value();
        for (idx j = 0; j < cfg_.joints; ++j) {
            const auto id6 = motion::identity_rot6d();
            for (idx c = 0; c < 6; ++c) b[3 + 6 * j + c] = id6[static_cast<std::size_t>(c)];
        }
    }

    codebook_ = Var(rng.normal_array({cfg_.codebook_size, cfg_.latent_dim}, 0.5), true);
    usage_counts_.assign(static_cast<std::size_t>(cfg_.codebook_size), 0);
}

Var MotionVqVae::run_down_block(const ConvBlock& blk, const Var& x) const {
    Var h = ag::gelu(conv_on(x, blk.w1, blk.b1, 2, 1));
    Var r = conv_on(ag::gelu(conv_on(h, blk.w2, blk.b2, 1, 1)), blk.w3, blk.b3, 1, 1);
    return ag::add(h, r);
}

Var MotionVqVae::run_up_block(const ConvBlock& blk, const Var& x) const {
    Var h = ag::gelu(conv_on(ag::upsample_rows(x, 2), blk.w1, blk.b1, 1, 1));
    Var r = conv_on(ag::gelu(conv_on(h, blk.w2, blk.b2, 1, 1)), blk.w3, blk.b3, 1, 1);
    return ag::add(h, r);
}

Var MotionVqVae::encode_var(const Var& pose_rows) const {
    if (pose_rows.value().dim(0) % cfg_.downsample != 0)
        throw ShapeError("VqVae::encode: motion length must be a multiple of d (pad first)");
    Var h = ag::gelu(conv_on(pose_rows, in_proj_w_, in_proj_b_, 1, 1));
    for (const auto& blk : down_) h = run_down_block(blk, h);
    return conv_on(h, to_latent_w_, to_latent_b_, 1, 1);
}

Var MotionVqVae::decode_var(const Var& codes) const {
    Var h = ag::gelu(conv_on(codes, from_latent_w_, from_latent_b_, 1, 1));
    for (const auto& blk : up_) h = run_up_block(blk, h);
    return conv_on(h, out_proj_w_, out_proj_b_, 1, 1);
}

LatentSequence MotionVqVae::encode(const Motion& m) const {
    m.validate();
    if (m.joints != cfg_.joints)
        throw ShapeError("VqVae::encode: motion J=" + std::to_string(m.joints) + " but model J=" +
                         std::to_string(cfg_.joints));
    ag::NoGradGuard ng;
    LatentSequence z;
    z.codes = encode_var(Var::constant(m.frames)).value();
    z.downsample_rate = cfg_.downsample;
    z.pad_length = m.pad_length;
    return z;
}

void MotionVqVae::nearest_codebook(const Array& z, std::vector<idx>& out) const {
    const Array& cb = codebook_.value();
    const idx L = z.dim(0), C = z.dim(1), N = cb.dim(0);
    out.resize(static_cast<std::size_t>(L));
    for (idx l = 0; l < L; ++l) {
        double best = 0.0;
        idx arg = -1;
        for (idx n = 0; n < N; ++n) {
            double d2 = 0.0;
            for (idx c = 0; c < C; ++c) {
                const double d = z[l * C + c] - cb[n * C + c];
                d2 += d * d;
            }
            if (arg < 0 || d2 < best) {  // strict '<' breaks ties toward the lowest index
                best = d2;
                arg = n;
            }
        }
        out[static_cast<std::size_t>(l)] = arg;
    }
}

LatentSequence MotionVqVae::quantize(const LatentSequence& z) const {
    if (codebook_.value().empty()) throw StateError("VqVae::quantize: empty codebook");
    if (z.length() < 1 || z.codes.dim(1) != cfg_.latent_dim)
        throw ShapeError("VqVae::quantize: latent width mismatch");
    LatentSequence out;
    out.downsample_rate = z.downsample_rate;
    out.pad_length = z.pad_length;
    nearest_codebook(z.codes, out.indices);
    const Array& cb = codebook_.value();
    const idx L = z.length(), C = cfg_.latent_dim;
    out.codes = Array({L, C});
    for (idx l = 0; l < L; ++l)
        for (idx c = 0; c < C; ++c) out.codes[l * C + c] = cb[out.indices[static_cast<std::size_t>(l)] * C + c];
    return out;
}

Motion MotionVqVae::decode(const LatentSequence& z) const {
    if (z.length() < 1 || z.codes.dim(1) != cfg_.latent_dim)
        throw ShapeError("VqVae::decode: latent width mismatch");
    ag::NoGradGuard ng;
    Array raw = decode_var(Var::constant(z.codes)).value();

    Motion m;
    m.fps = 60.0;
    m.joints = cfg_.joints;
    const idx k_full = raw.dim(0);
    const idx k = k_full - z.pad_length;
    if (k < 1) throw ShapeError("VqVae::decode: pad trim removes all frames");
    m.frames = Array({k, raw.dim(1)});
    for (idx t = 0; t < k; ++t) {
        for (idx c = 0; c < 3; ++c) m.frames.at(t, c) = raw.at(t, c);
        for (idx j = 0; j < cfg_.joints; ++j) {
            motion::Vec6 r6;
            for (idx c = 0; c < 6; ++c) r6[static_cast<std::size_t>(c)] = raw.at(t, 3 + 6 * j + c);
            // renormalize through the rotation manifold
            const motion::Vec6 fixed = motion::rot6d_from_matrix(motion::matrix_from_rot6d(r6));
            for (idx c = 0; c < 6; ++c) m.frames.at(t, 3 + 6 * j + c) = fixed[static_cast<std::size_t>(c)];
        }
    }
    return m;
}

VqLosses MotionVqVae::losses(const Motion& m) const {
    Var x = Var::constant(m.frames);
    Var z = encode_var(x);

    std::vector<idx> indices;
    nearest_codebook(z.value(), indices);
    Var picked = ag::embedding_rows(codebook_, indices);

    // straight-through: decode sees codebook values, encoder sees the gradient
    Var z_q = ag::st_values(z, picked.value());
    Var recon_rows = decode_var(z_q);
    VqLosses out;
    out.reconstruction = ag::mean_all(ag::square(ag::sub(recon_rows, x)));
    out.codebook = ag::mean_all(ag::square(ag::sub(picked, ag::detach(z))));
    out.commitment = ag::mean_all(ag::square(ag::sub(z, Var::constant(picked.value()))));
    out.total = ag::add(out.reconstruction,
                        ag::add(out.codebook, ag::scale(out.commitment, cfg_.commitment_beta)));
    return out;
}

VqTrainReport MotionVqVae::train(const std::vector<const Motion*>& items, std::uint64_t seed) {
    if (items.empty()) throw ValidationError("VqVae::train: empty corpus");
    RandomStream rng(mix_seed(seed, "vqvae-train"));

    // held-out split from the tail
    const idx n = static_cast<idx>(items.size());
    const idx n_hold = std::max<idx>(1, static_cast<idx>(std::llround(cfg_.holdout_fraction * static_cast<double>(n))));
    const idx n_train = std::max<idx>(1, n - n_hold);

    std::vector<Motion> padded;
    padded.reserve(static_cast<std::size_t>(n));
    for (const Motion* m : items) padded.push_back(pad_to_multiple(*m, cfg_.downsample));

    auto holdout_mse = [&]() {
        ag::NoGradGuard ng;
        double acc = 0.0;
        idx count = 0;
        for (idx i = n_train; i < n; ++i) {
            const Motion& m = padded[static_cast<std::size_t>(i)];
            Var z = encode_var(Var::constant(m.frames));
            LatentSequence ls;
            ls.codes = z.value();
            ls.downsample_rate = cfg_.downsample;
            const LatentSequence q = quantize(ls);
            Array rec = decode_var(Var::constant(q.codes)).value();
            for (idx t = 0; t < rec.size(); ++t) {
                const double d = rec[t] - m.frames[t];
                acc += d * d;
            }
            count += rec.size();
        }
        return acc / static_cast<double>(count);
    };

    VqTrainReport report;
    report.initial_holdout_mse = holdout_mse();

    nn::ParamMap pm = named_params();
    Adam opt(nn::values_of(pm), cfg_.lr);

    const idx C = cfg_.latent_dim;

    // data-dependent codebook init: encoder output rows plus a little dither
    {
        ag::NoGradGuard ng;
        std::vector<double> rows;
        for (idx i = 0; i < std::min<idx>(n_train, 16); ++i) {
            const Array z = encode_var(Var::constant(padded[static_cast<std::size_t>(i)].frames)).value();
            for (idx k = 0; k < z.size(); ++k) rows.push_back(z[k]);
        }
        const idx n_rows = static_cast<idx>(rows.size()) / C;
        Array& cb = codebook_.mutable_value();
        for (idx nidx = 0; nidx < cfg_.codebook_size; ++nidx) {
            const idx r = rng.uniform_index(n_rows);
            for (idx c = 0; c < C; ++c)
                cb[nidx * C + c] = rows[static_cast<std::size_t>(r * C + c)] + 0.02 * rng.normal();
        }
    }

    std::vector<idx> order(static_cast<std::size_t>(n_train));
    for (idx i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;

    for (idx epoch = 0; epoch < cfg_.epochs; ++epoch) {
        rng.shuffle(order);
        std::fill(usage_counts_.begin(), usage_counts_.end(), 0);
        // uniform reservoir of this epoch's encoder outputs for dead-code reseeding
        const idx reservoir_rows = std::max<idx>(cfg_.codebook_size, 256);
        std::vector<double> reservoir(static_cast<std::size_t>(reservoir_rows * C), 0.0);
        idx seen_rows = 0;

        for (idx step = 0; step < n_train; ++step) {
            const Motion& m = padded[static_cast<std::size_t>(order[static_cast<std::size_t>(step)])];
            VqLosses l = losses(m);
            if (!std::isfinite(l.total.value()[0]))
                throw NumericalError("VqVae::train: loss diverged (NaN) at epoch " + std::to_string(epoch) +
                                     " step " + std::to_string(step));
            opt.zero_grad();
            ag::backward(l.total);
            opt.step();

            // track assignments after the step
            {
                ag::NoGradGuard ng;
                Var z = encode_var(Var::constant(m.frames));
                std::vector<idx> ids;
                nearest_codebook(z.value(), ids);
                for (idx id : ids) ++usage_counts_[static_cast<std::size_t>(id)];
                const Array& zv = z.value();
                for (idx row = 0; row < zv.dim(0); ++row) {
                    ++seen_rows;
                    idx slot = -1;
                    if (seen_rows <= reservoir_rows) slot = seen_rows - 1;
                    else if (rng.uniform_index(seen_rows) < reservoir_rows)
                        slot = rng.uniform_index(reservoir_rows);
                    if (slot >= 0)
                        for (idx c = 0; c < C; ++c)
                            reservoir[static_cast<std::size_t>(slot * C + c)] = zv[row * C + c];
                }
            }
        }

        const bool last_epoch = epoch + 1 == cfg_.epochs;
        if (cfg_.reseed_dead_codes && !last_epoch && seen_rows > 0) {
            const idx rows = std::min(seen_rows, reservoir_rows);
            Array& cb = codebook_.mutable_value();
            for (idx nidx = 0; nidx < cfg_.codebook_size; ++nidx) {
                if (usage_counts_[static_cast<std::size_t>(nidx)] != 0) continue;
                const idx r = rng.uniform_index(rows);
                for (idx c = 0; c < C; ++c)
                    cb[nidx * C + c] = reservoir[static_cast<std::size_t>(r * C + c)] + 0.02 * rng.normal();
            }
        }
        report.epochs_run = epoch + 1;
    }

    idx dead = 0;
    for (auto u : usage_counts_)
        if (u == 0) ++dead;
    report.dead_code_fraction = static_cast<double>(dead) / static_cast<double>(cfg_.codebook_size);
    report.usage_counts = usage_counts_;
    report.final_holdout_mse = holdout_mse();
    return report;
}

nn::ParamMap MotionVqVae::named_params() const {
    nn::ParamMap pm;
    auto add = [&](const std::string& name, const Var& v) { pm.push_back({name, v}); };
    add("enc.in.w", in_proj_w_);
    add("enc.in.b", in_proj_b_);
    for (std::size_t b = 0; b < down_.size(); ++b) {
        const std::string p = "enc.block" + std::to_string(b);
        add(p + ".w1", down_[b].w1);
        add(p + ".b1", down_[b].b1);
        add(p + ".w2", down_[b].w2);
        add(p + ".b2", down_[b].b2);
        add(p + ".w3", down_[b].w3);
        add(p + ".b3", down_[b].b3);
    }
    add("enc.out.w", to_latent_w_);
    add("enc.out.b", to_latent_b_);
    add("dec.in.w", from_latent_w_);
    add("dec.in.b", from_latent_b_);
    for (std::size_t b = 0; b < up_.size(); ++b) {
        const std::string p = "dec.block" + std::to_string(b);
        add(p + ".w1", up_[b].w1);
        add(p + ".b1", up_[b].b1);
        add(p + ".w2", up_[b].w2);
        add(p + ".b2", up_[b].b2);
        add(p + ".w3", up_[b].w3);
        add(p + ".b3", up_[b].b3);
    }
    add("dec.out.w", out_proj_w_);
    add("dec.out.b", out_proj_b_);
    add("codebook", codebook_);
    return pm;
}

}  // namespace stylegest::vq
