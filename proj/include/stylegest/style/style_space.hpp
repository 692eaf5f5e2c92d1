#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylegest/core/autograd.hpp"
#include "stylegest/core/random.hpp"
#include "stylegest/motion/types.hpp"
#include "stylegest/nn/modules.hpp"

namespace stylegest::style {

using ag::Var;
using motion::Motion;

// Unit-norm style vector in the shared space.
struct StyleEmbedding {
    Array z;  // (1, width)
};

struct CameraParams {
    double azimuth = 0.0;    // radians
    double elevation = 0.25;
    double radius = 3.0;
};

// Per-frame image-like features from the deterministic synthetic renderer.
struct FrameFeatureSequence {
    Array frames;  // (F, feature_width)
    idx length() const { return frames.empty() ? 0 : frames.dim(0); }
};

struct StyleConfig {
    idx width = 64;  // C_CLIP (768 at reference scale)
    idx joints = 8;
    idx conv_width = 48;
    idx frame_feature_width = 24;
    idx video_layers = 2;  // 6 at reference scale
    idx video_heads = 4;
    idx camera_ring = 1;   // azimuth count; >1 needs longer video training
    double camera_elevation = 0.25;
    double tau = 0.07;

    // training
    idx tower_epochs = 30;
    idx video_epochs = 6;
    double lr = 1e-3;
};

struct StyleTrainReport {
    double tower_initial_loss = 0.0;
    double tower_final_loss = 0.0;
    double motion_to_text_top1 = 0.0;
    double text_to_motion_top1 = 0.0;
    double video_initial_loss = 0.0;
    double video_final_loss = 0.0;
    double video_motion_cos = 0.0;  // held-out mean cosine
};

// Deterministic frame features: forward kinematics on a fixed chain skeleton,
// pinhole projection through the camera, then a fixed random projection.
FrameFeatureSequence render_synthetic(const Motion& m, const CameraParams& cam,
                                      idx feature_width = 24);

class StyleSpace {
public:
    StyleSpace(const StyleConfig& cfg, const std::vector<std::string>& text_vocabulary,
               std::uint64_t seed);

    const StyleConfig& config() const { return cfg_; }
    const std::vector<std::string>& text_vocabulary() const { return vocab_; }

    StyleEmbedding encode_style_motion(const Motion& m) const;
    StyleEmbedding encode_style_text(const std::vector<std::string>& prompt_words) const;
    StyleEmbedding encode_style_video(const FrameFeatureSequence& frames) const;

    // graph paths; parameters stay frozen unless training holds them
    Var style_motion_var(const Var& pose_rows) const;
    Var style_video_var(const Var& frames) const;

    // 1 - cos(sg(E_motion(M)), E_video(render(M; cam))); gradients reach only
    // the video aggregator
    Var video_encoder_loss_var(const Motion& m, const CameraParams& cam) const;

    // two-tower contrastive training over (tag phrase, motion) pairs
    StyleTrainReport train(const std::vector<const motion::CorpusItem*>& items, std::uint64_t seed);

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    nn::ParamMap named_params() const;

private:
    void ensure_mutable() const {
        if (frozen_) throw StateError("StyleSpace: parameter mutation after freeze");
    }
    Var motion_tower(const Var& pose_rows) const;   // (K,P) -> (1,width) normalized
    Var text_tower(const std::vector<idx>& ids) const;
    Var video_tower(const Var& frames) const;
    idx word_id(const std::string& w) const;

    StyleConfig cfg_;
    std::vector<std::string> vocab_;
    bool frozen_ = false;

    // motion tower: two stride-2 convs + mean pool + linear
    Var conv1_w_, conv1_b_, conv2_w_, conv2_b_;
    nn::Linear motion_out_;

    // text tower: embedding + mlp
    nn::Embedding word_table_;
    nn::Linear text_fc1_, text_fc2_;

    // video tower: conv stem + transformer + pooled linear head
    Var video_stem1_w_, video_stem1_b_, video_stem2_w_, video_stem2_b_;
    std::vector<nn::TransformerBlock> video_blocks_;
    nn::LayerNorm video_pool_ln_;
    nn::Linear video_out_;
};

}  // namespace stylegest::style
