#include "stylegest/style/style_space.hpp"

#include <algorithm>
#include <cmath>

#include "stylegest/core/optim.hpp"
#include "stylegest/embed/joint_embedding.hpp"
#include "stylegest/motion/rot6d.hpp"

namespace stylegest::style {

namespace {

// fixed chain skeleton: parent index per joint (root handled separately)
idx parent_of(idx j) {
    static const idx table[8] = {-1, 0, 0, 2, 0, 4, 0, 0};
    return j < 8 ? table[j] : j - 1;
}

motion::Vec3 offset_of(idx j) {
    static const motion::Vec3 table[8] = {
        {0.0, 0.35, 0.0},    // spine up from root
        {0.0, 0.30, 0.0},    // head
        {-0.22, 0.25, 0.0},  // left shoulder
        {-0.30, 0.0, 0.0},   // left elbow
        {0.22, 0.25, 0.0},   // right shoulder
        {0.30, 0.0, 0.0},    // right elbow
        {-0.12, -0.45, 0.0}, // left leg
        {0.12, -0.45, 0.0},  // right leg
    };
    return j < 8 ? table[j] : motion::Vec3{0.1, 0.1, 0.0};
}

}  // namespace

FrameFeatureSequence render_synthetic(const Motion& m, const CameraParams& cam, idx feature_width) {
    m.validate();
    if (!(cam.radius > 0.0) || !std::isfinite(cam.azimuth) || !std::isfinite(cam.elevation))
        throw ValidationError("render_synthetic: degenerate camera parameters");
    if (feature_width < 4) throw ValidationError("render_synthetic: feature_width >= 4 required");

    const idx J = m.joints;
    const idx points = J + 1;
    // last three channels carry the recorded camera parameters; the rest is
    // the projected-skeleton mix
    const idx mix_width = feature_width - 3;
    RandomStream proj_rng(0x5741564552454eULL);
    // scaled so the features land near unit variance for typical skeletons
    Array proj = proj_rng.normal_array({2 * points, mix_width}, 5.0 / std::sqrt(2.0 * points));

    // camera frame looking at the origin
    const double cx = cam.radius * std::cos(cam.elevation) * std::sin(cam.azimuth);
    const double cy = cam.radius * std::sin(cam.elevation);
    const double cz = cam.radius * std::cos(cam.elevation) * std::cos(cam.azimuth);
    motion::Vec3 eye{cx, cy, cz};
    auto normalize3 = [](motion::Vec3 v) {
        const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        return motion::Vec3{v[0] / n, v[1] / n, v[2] / n};
    };
    const motion::Vec3 fwd = normalize3({-eye[0], -eye[1], -eye[2]});
    motion::Vec3 right = normalize3({fwd[2], 0.0, -fwd[0]});
    const motion::Vec3 up{fwd[1] * right[2] - fwd[2] * right[1], fwd[2] * right[0] - fwd[0] * right[2],
                          fwd[0] * right[1] - fwd[1] * right[0]};

    FrameFeatureSequence out;
    out.frames = Array({m.length(), feature_width});
    std::vector<motion::Mat3> global(static_cast<std::size_t>(J));
    std::vector<motion::Vec3> pos(static_cast<std::size_t>(J));

    for (idx t = 0; t < m.length(); ++t) {
        const motion::Pose p = m.pose(t);
        for (idx j = 0; j < J; ++j) {
            const motion::Mat3 local = motion::matrix_from_rot6d(p.joint_rotations[static_cast<std::size_t>(j)]);
            const idx par = parent_of(j);
            const motion::Vec3 off = offset_of(j);
            if (par < 0) {
                global[static_cast<std::size_t>(j)] = local;
                pos[static_cast<std::size_t>(j)] = {p.root_displacement[0] + off[0],
                                                    p.root_displacement[1] + off[1],
                                                    p.root_displacement[2] + off[2]};
            } else {
                const auto& gp = global[static_cast<std::size_t>(par)];
                global[static_cast<std::size_t>(j)] = motion::mat3_mul(gp, local);
                const motion::Vec3 world_off = motion::mat3_apply(gp, off);
                pos[static_cast<std::size_t>(j)] = {pos[static_cast<std::size_t>(par)][0] + world_off[0],
                                                    pos[static_cast<std::size_t>(par)][1] + world_off[1],
                                                    pos[static_cast<std::size_t>(par)][2] + world_off[2]};
            }
        }

        std::vector<double> screen;
        screen.reserve(static_cast<std::size_t>(2 * points));
        auto project = [&](const motion::Vec3& w) {
            const motion::Vec3 rel{w[0] - eye[0], w[1] - eye[1], w[2] - eye[2]};
            const double z = rel[0] * fwd[0] + rel[1] * fwd[1] + rel[2] * fwd[2];
            const double x = rel[0] * right[0] + rel[1] * right[1] + rel[2] * right[2];
            const double y = rel[0] * up[0] + rel[1] * up[1] + rel[2] * up[2];
            const double depth = std::max(z, 0.1);
            screen.push_back(x / depth);
            screen.push_back(y / depth);
        };
        project({p.root_displacement[0], p.root_displacement[1], p.root_displacement[2]});
        for (idx j = 0; j < J; ++j) project(pos[static_cast<std::size_t>(j)]);

        for (idx c = 0; c < mix_width; ++c) {
            double v = 0.0;
            for (idx k = 0; k < 2 * points; ++k) v += screen[static_cast<std::size_t>(k)] * proj.at(k, c);
            out.frames.at(t, c) = v;
        }
        out.frames.at(t, mix_width) = std::sin(cam.azimuth);
        out.frames.at(t, mix_width + 1) = std::cos(cam.azimuth);
        out.frames.at(t, mix_width + 2) = cam.elevation;
    }
    return out;
}

StyleSpace::StyleSpace(const StyleConfig& cfg, const std::vector<std::string>& text_vocabulary,
                       std::uint64_t seed)
    : cfg_(cfg), vocab_(text_vocabulary) {
    if (vocab_.empty()) throw ValidationError("StyleSpace: empty text vocabulary");
    RandomStream rng(mix_seed(seed, "style-space-init"));
    const idx P = motion::pose_dim(cfg_.joints);
    const idx W = cfg_.conv_width;

    auto conv_weight = [&](idx cout, idx kw, idx cin) {
        const double std = std::sqrt(2.0 / static_cast<double>(kw * cin + cout));
        return Var(rng.normal_array({cout, kw, cin}, std), true);
    };
    conv1_w_ = conv_weight(W, 4, P);
    conv1_b_ = Var(Array({W}), true);
    conv2_w_ = conv_weight(W, 4, W);
    conv2_b_ = Var(Array({W}), true);
    motion_out_ = nn::Linear(W, cfg_.width, rng);

    word_table_ = nn::Embedding(static_cast<idx>(vocab_.size()), cfg_.width, rng);
    {
        Array& t = word_table_.table.mutable_value();
        for (idx i = 0; i < t.size(); ++i) t[i] *= 15.0;
    }
    text_fc1_ = nn::Linear(cfg_.width, cfg_.width * 2, rng);
    text_fc2_ = nn::Linear(cfg_.width * 2, cfg_.width, rng);

    video_stem1_w_ = conv_weight(cfg_.width, 4, cfg_.frame_feature_width);
    video_stem1_b_ = Var(Array({cfg_.width}), true);
    video_stem2_w_ = conv_weight(cfg_.width, 4, cfg_.width);
    video_stem2_b_ = Var(Array({cfg_.width}), true);
    for (idx l = 0; l < cfg_.video_layers; ++l)
        video_blocks_.emplace_back(cfg_.width, cfg_.video_heads, cfg_.width * 4, false, rng);
    video_pool_ln_ = nn::LayerNorm(3 * cfg_.width);
    video_out_ = nn::Linear(3 * cfg_.width, cfg_.width, rng);
}

idx StyleSpace::word_id(const std::string& w) const {
    for (std::size_t i = 0; i < vocab_.size(); ++i)
        if (vocab_[i] == w) return static_cast<idx>(i);
    throw ValidationError("StyleSpace: word '" + w + "' not in the style vocabulary");
}

Var StyleSpace::motion_tower(const Var& pose_rows) const {
    Var h = ag::gelu(ag::conv1d(pose_rows, conv1_w_, conv1_b_, 2, 1));
    h = ag::gelu(ag::conv1d(h, conv2_w_, conv2_b_, 2, 1));
    Var pooled = ag::mean_over_rows(h);
    return ag::l2_normalize(motion_out_.forward(pooled));
}

Var StyleSpace::text_tower(const std::vector<idx>& ids) const {
    Var rows = word_table_.forward(ids);
    Var pooled = ag::mean_over_rows(rows);
    Var h = ag::gelu(text_fc1_.forward(pooled));
    return ag::l2_normalize(text_fc2_.forward(h));
}

Var StyleSpace::video_tower(const Var& frames) const {
    // conv stem shortens the sequence and extracts local dynamics before the
    // transformer aggregates
    Var x = ag::gelu(ag::conv1d(frames, video_stem1_w_, video_stem1_b_, 2, 1));
    x = ag::gelu(ag::conv1d(x, video_stem2_w_, video_stem2_b_, 2, 1));
    std::vector<double> pos(static_cast<std::size_t>(x.value().dim(0)));
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<double>(i);
    Array pe = nn::sinusoidal_rows(pos, cfg_.width);
    for (idx i = 0; i < pe.size(); ++i) pe[i] *= 0.1;
    x = ag::add(x, Var::constant(pe));
    for (const auto& b : video_blocks_) x = b.forward(x);
    // mean, max, and per-channel temporal std: the second moment carries the
    // amplitude/tempo statistics
    Var mean = ag::mean_over_rows(x);
    Var var = ag::sub(ag::mean_over_rows(ag::square(x)), ag::square(mean));
    Var stdev = ag::sqrt_op(ag::add_scalar(var, 1e-8));
    Var pooled = video_pool_ln_.forward(
        ag::concat_cols(ag::concat_cols(mean, ag::max_over_rows(x)), stdev));
    return ag::l2_normalize(video_out_.forward(pooled));
}

StyleEmbedding StyleSpace::encode_style_motion(const Motion& m) const {
    if (m.length() < 1) throw ValidationError("encode_style_motion: empty motion");
    m.validate();
    ag::NoGradGuard ng;
    return {motion_tower(Var::constant(m.frames)).value()};
}

StyleEmbedding StyleSpace::encode_style_text(const std::vector<std::string>& prompt_words) const {
    if (prompt_words.empty()) throw ValidationError("encode_style_text: empty prompt");
    std::vector<idx> ids;
    for (const auto& w : prompt_words) ids.push_back(word_id(w));
    ag::NoGradGuard ng;
    return {text_tower(ids).value()};
}

StyleEmbedding StyleSpace::encode_style_video(const FrameFeatureSequence& frames) const {
    if (frames.length() < 1) throw ValidationError("encode_style_video: empty feature sequence");
    if (frames.frames.dim(1) != cfg_.frame_feature_width)
        throw ShapeError("encode_style_video: feature width mismatch");
    ag::NoGradGuard ng;
    return {video_tower(Var::constant(frames.frames)).value()};
}

Var StyleSpace::style_motion_var(const Var& pose_rows) const { return motion_tower(pose_rows); }

Var StyleSpace::style_video_var(const Var& frames) const { return video_tower(frames); }

Var StyleSpace::video_encoder_loss_var(const Motion& m, const CameraParams& cam) const {
    // stop-gradient target from the frozen motion tower
    StyleEmbedding target = encode_style_motion(m);
    const FrameFeatureSequence ff = render_synthetic(m, cam, cfg_.frame_feature_width);
    Var pred = video_tower(Var::constant(ff.frames));
    return ag::add_scalar(ag::scale(ag::cosine_sim(pred, Var::constant(target.z)), -1.0), 1.0);
}

StyleTrainReport StyleSpace::train(const std::vector<const motion::CorpusItem*>& items,
                                   std::uint64_t seed) {
    ensure_mutable();
    if (items.empty()) throw ValidationError("StyleSpace::train: empty corpus");
    RandomStream rng(mix_seed(seed, "style-train"));
    StyleTrainReport report;

    // bucket items per tag; one item per tag forms a contrastive batch
    std::vector<std::string> tags;
    for (const auto* it : items)
        if (std::find(tags.begin(), tags.end(), it->style_tag) == tags.end()) tags.push_back(it->style_tag);
    if (tags.size() < 2) throw ValidationError("StyleSpace::train: need at least two style tags");
    std::vector<std::vector<const motion::CorpusItem*>> buckets(tags.size());
    for (const auto* it : items) {
        const auto pos = std::find(tags.begin(), tags.end(), it->style_tag) - tags.begin();
        buckets[static_cast<std::size_t>(pos)].push_back(it);
    }
    // tail of each bucket held out for retrieval eval
    std::vector<std::vector<const motion::CorpusItem*>> hold(tags.size());
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        const std::size_t n_hold = std::max<std::size_t>(1, buckets[b].size() / 10);
        for (std::size_t k = buckets[b].size() - n_hold; k < buckets[b].size(); ++k)
            hold[b].push_back(buckets[b][k]);
        buckets[b].resize(buckets[b].size() - n_hold);
    }

    // two-tower stage; the video tower warms up here as the stand-in for a
    // pretrained image pathway, then its actual objective is the
    // distillation stage below
    {
        nn::ParamMap pm;
        pm.push_back({"m.conv1.w", conv1_w_});
        pm.push_back({"m.conv1.b", conv1_b_});
        pm.push_back({"m.conv2.w", conv2_w_});
        pm.push_back({"m.conv2.b", conv2_b_});
        motion_out_.collect("m.out", pm);
        word_table_.collect("t.words", pm);
        text_fc1_.collect("t.fc1", pm);
        text_fc2_.collect("t.fc2", pm);
        pm.push_back({"v.stem1.w", video_stem1_w_});
        pm.push_back({"v.stem1.b", video_stem1_b_});
        pm.push_back({"v.stem2.w", video_stem2_w_});
        pm.push_back({"v.stem2.b", video_stem2_b_});
        for (std::size_t i = 0; i < video_blocks_.size(); ++i)
            video_blocks_[i].collect("v.block" + std::to_string(i), pm);
        video_pool_ln_.collect("v.pool_ln", pm);
        video_out_.collect("v.out", pm);
        Adam opt(nn::values_of(pm), cfg_.lr, 0.9, 0.999, 1e-8, 1e-3);

        bool first = true;
        for (idx e = 0; e < cfg_.tower_epochs; ++e) {
            const idx steps = 8;
            for (idx s = 0; s < steps; ++s) {
                std::vector<Var> z_m, z_t, z_v;
                for (std::size_t b = 0; b < buckets.size(); ++b) {
                    const auto* it = buckets[b][static_cast<std::size_t>(
                        rng.uniform_index(static_cast<idx>(buckets[b].size())))];
                    // random crop keeps the towers scale-robust
                    const idx K = it->motion.length();
                    const idx keep = std::max<idx>(32, K - rng.uniform_index(K / 3 + 1));
                    const idx start = rng.uniform_index(K - keep + 1);
                    Array crop({keep, it->motion.frames.dim(1)});
                    for (idx i = 0; i < crop.size(); ++i)
                        crop[i] = it->motion.frames[start * it->motion.frames.dim(1) + i] +
                                  0.02 * rng.normal();
                    z_m.push_back(motion_tower(Var::constant(crop)));
                    z_t.push_back(text_tower({word_id(tags[b])}));

                    Motion crop_motion;
                    crop_motion.fps = it->motion.fps;
                    crop_motion.joints = it->motion.joints;
                    crop_motion.frames = crop;
                    CameraParams cam;
                    cam.azimuth = 6.283185307179586 *
                                  static_cast<double>(rng.uniform_index(cfg_.camera_ring)) /
                                  static_cast<double>(cfg_.camera_ring);
                    cam.elevation = cfg_.camera_elevation;
                    const FrameFeatureSequence ff =
                        render_synthetic(crop_motion, cam, cfg_.frame_feature_width);
                    z_v.push_back(video_tower(Var::constant(ff.frames)));
                }
                Var loss = embed::JointEmbedding::contrastive_loss_var(z_m, z_t, cfg_.tau, false);
                loss = ag::add(loss,
                               embed::JointEmbedding::contrastive_loss_var(z_v, z_t, cfg_.tau, false));
                // explicit alignment pulls each embedding onto its tag
                // direction, which the temperature-scaled term stops doing
                // once the margins are large
                for (std::size_t b = 0; b < z_m.size(); ++b) {
                    loss = ag::add(loss, ag::scale(ag::add_scalar(
                                             ag::scale(ag::cosine_sim(z_m[b], z_t[b]), -1.0), 1.0),
                                         0.5));
                    loss = ag::add(loss, ag::scale(ag::add_scalar(
                                             ag::scale(ag::cosine_sim(z_v[b], z_t[b]), -1.0), 1.0),
                                         0.5));
                }
                if (first) {
                    report.tower_initial_loss = loss.value()[0];
                    first = false;
                }
                report.tower_final_loss = loss.value()[0];
                if (!std::isfinite(loss.value()[0]))
                    throw NumericalError("StyleSpace::train: tower loss diverged");
                opt.zero_grad();
                ag::backward(loss);
                opt.step();
            }
        }

        // retrieval eval on held-out motions
        ag::NoGradGuard ng;
        Array text_rows({static_cast<idx>(tags.size()), cfg_.width});
        for (std::size_t b = 0; b < tags.size(); ++b) {
            const Array z = text_tower({word_id(tags[b])}).value();
            for (idx c = 0; c < cfg_.width; ++c) text_rows.at(static_cast<idx>(b), c) = z[c];
        }
        idx hits = 0, total = 0;
        std::vector<Array> motion_embs;
        std::vector<std::size_t> motion_tags;
        for (std::size_t b = 0; b < hold.size(); ++b)
            for (const auto* it : hold[b]) {
                const Array z = motion_tower(Var::constant(it->motion.frames)).value();
                motion_embs.push_back(z);
                motion_tags.push_back(b);
                if (embed::retrieve(z, text_rows, 1)[0].first == static_cast<idx>(b)) ++hits;
                ++total;
            }
        report.motion_to_text_top1 = static_cast<double>(hits) / static_cast<double>(total);

        Array motion_rows({static_cast<idx>(motion_embs.size()), cfg_.width});
        for (std::size_t i = 0; i < motion_embs.size(); ++i)
            for (idx c = 0; c < cfg_.width; ++c) motion_rows.at(static_cast<idx>(i), c) = motion_embs[i][c];
        idx hits_t = 0;
        for (std::size_t b = 0; b < tags.size(); ++b) {
            Array q({cfg_.width});
            for (idx c = 0; c < cfg_.width; ++c) q[c] = text_rows.at(static_cast<idx>(b), c);
            const idx best = embed::retrieve(q, motion_rows, 1)[0].first;
            if (motion_tags[static_cast<std::size_t>(best)] == b) ++hits_t;
        }
        report.text_to_motion_top1 = static_cast<double>(hits_t) / static_cast<double>(tags.size());
    }

    // video distillation stage: motion tower is the frozen teacher
    {
        nn::ParamMap pm;
        pm.push_back({"v.stem1.w", video_stem1_w_});
        pm.push_back({"v.stem1.b", video_stem1_b_});
        pm.push_back({"v.stem2.w", video_stem2_w_});
        pm.push_back({"v.stem2.b", video_stem2_b_});
        for (std::size_t i = 0; i < video_blocks_.size(); ++i)
            video_blocks_[i].collect("v.block" + std::to_string(i), pm);
        video_pool_ln_.collect("v.pool_ln", pm);
        video_out_.collect("v.out", pm);
        Adam opt(nn::values_of(pm), cfg_.lr * 2.0, 0.9, 0.999, 1e-8, 1e-3);

        // fixed azimuth ring at constant elevation
        auto ring_camera = [&](idx k) {
            CameraParams cam;
            cam.azimuth = 6.283185307179586 * static_cast<double>(k % cfg_.camera_ring) /
                          static_cast<double>(cfg_.camera_ring);
            cam.elevation = cfg_.camera_elevation;
            return cam;
        };

        std::vector<const motion::CorpusItem*> train_items;
        for (auto& b : buckets)
            for (auto* it : b) train_items.push_back(it);
        bool first = true;
        for (idx e = 0; e < cfg_.video_epochs; ++e) {
            for (std::size_t i = 0; i < train_items.size(); ++i) {
                // random crop on both sides of the loss
                const Motion& full = train_items[i]->motion;
                const idx K = full.length();
                const idx keep = std::max<idx>(32, K - rng.uniform_index(std::max<idx>(1, (2 * K) / 5)));
                const idx start = rng.uniform_index(K - keep + 1);
                Motion crop;
                crop.fps = full.fps;
                crop.joints = full.joints;
                crop.frames = Array({keep, full.frames.dim(1)});
                for (idx k = 0; k < crop.frames.size(); ++k)
                    crop.frames[k] = full.frames[start * full.frames.dim(1) + k] + 0.02 * rng.normal();

                Var loss = video_encoder_loss_var(crop, ring_camera(static_cast<idx>(i + e)));
                if (first) {
                    report.video_initial_loss = loss.value()[0];
                    first = false;
                }
                report.video_final_loss = loss.value()[0];
                opt.zero_grad();
                ag::backward(loss);
                opt.step();
            }
        }

        ag::NoGradGuard ng;
        double cos_sum = 0.0;
        idx total = 0;
        for (std::size_t b = 0; b < hold.size(); ++b)
            for (const auto* it : hold[b]) {
                const StyleEmbedding zm = encode_style_motion(it->motion);
                const StyleEmbedding zv = encode_style_video(
                    render_synthetic(it->motion, ring_camera(total), cfg_.frame_feature_width));
                double d = 0.0;
                for (idx c = 0; c < cfg_.width; ++c) d += zm.z[c] * zv.z[c];
                cos_sum += d;
                ++total;
            }
        report.video_motion_cos = cos_sum / static_cast<double>(total);
    }
    return report;
}

nn::ParamMap StyleSpace::named_params() const {
    nn::ParamMap pm;
    pm.push_back({"m.conv1.w", conv1_w_});
    pm.push_back({"m.conv1.b", conv1_b_});
    pm.push_back({"m.conv2.w", conv2_w_});
    pm.push_back({"m.conv2.b", conv2_b_});
    motion_out_.collect("m.out", pm);
    word_table_.collect("t.words", pm);
    text_fc1_.collect("t.fc1", pm);
    text_fc2_.collect("t.fc2", pm);
    pm.push_back({"v.stem1.w", video_stem1_w_});
    pm.push_back({"v.stem1.b", video_stem1_b_});
    pm.push_back({"v.stem2.w", video_stem2_w_});
    pm.push_back({"v.stem2.b", video_stem2_b_});
    for (std::size_t i = 0; i < video_blocks_.size(); ++i)
        video_blocks_[i].collect("v.block" + std::to_string(i), pm);
    video_pool_ln_.collect("v.pool_ln", pm);
    video_out_.collect("v.out", pm);
    return pm;
}

}  // namespace stylegest::style
