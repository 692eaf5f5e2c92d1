#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stylegest/core/autograd.hpp"
#include "stylegest/core/random.hpp"
#include "stylegest/motion/types.hpp"
#include "stylegest/nn/modules.hpp"
#include "stylegest/vq/vqvae.hpp"

namespace stylegest::embed {

using ag::Var;
using motion::Transcript;
using vq::LatentSequence;

struct EmbedConfig {
    idx vocab_size = 48;
    idx width = 64;   // C_s (768 at reference scale)
    idx layers = 2;   // 12 at reference scale
    idx heads = 4;
    idx latent_dim = 32;      // codec latent width consumed by the gesture encoder
    idx codebook_size = 512;  // masked-pretraining prediction head size
    double tau = 0.07;
    double mod_weight = 0.4;  // w_contrast
    double ema_momentum = 0.995;
    double mask_ratio = 0.15;
    bool normalize_embeddings = true;
    bool final_layer_norm = false;  // extra LN on encoder outputs

    // training
    idx pretrain_epochs = 3;
    idx contrastive_epochs = 30;
    idx batch = 32;
    double lr = 1e-3;
    bool augment = true;  // random crops / row dropout / token dropout
};

// Feature sequence plus its max-pooled embedding.
struct EncodedSequence {
    Array features;  // (L, C_s)
    Array pooled;    // (1, C_s)
};

struct EmbedTrainReport {
    double pretrain_initial_loss = 0.0;
    double pretrain_final_loss = 0.0;
    double pretrain_masked_top1 = 0.0;
    double contrastive_initial_loss = 0.0;
    double contrastive_final_loss = 0.0;
    double holdout_top1_g2t = 0.0;
    double holdout_top1_t2g = 0.0;
    double train_top1_g2t = 0.0;
    double train_top1_t2g = 0.0;
};

// s_t = softmax(Z_t . z_t): positive, sums to one.
Array semantic_saliency(const Array& features, const Array& pooled);

// Top-k corpus rows by cosine similarity, descending, ties to the lower index.
std::vector<std::pair<idx, double>> retrieve(const Array& query, const Array& corpus_rows, idx k);

class TranscriptEncoder {
public:
    TranscriptEncoder() = default;
    TranscriptEncoder(const EmbedConfig& cfg, RandomStream& rng);

    Var features_var(const std::vector<idx>& tokens) const;
    void collect(const std::string& prefix, nn::ParamMap& pm) const;

private:
    nn::Embedding token_table_;
    std::vector<nn::TransformerBlock> blocks_;
    nn::LayerNorm final_ln_;
    idx width_ = 0;
};

class GestureEncoder {
public:
    GestureEncoder() = default;
    GestureEncoder(const EmbedConfig& cfg, RandomStream& rng);

    Var features_var(const Var& codes) const;  // codes: (L_g, latent_dim)
    // masked variant: after the input projection, rows listed in `masked`
    // are replaced by the learned mask embedding
    Var features_var_masked(const Var& codes, const std::vector<idx>& masked,
                            const Var& mask_embedding) const;
    void collect(const std::string& prefix, nn::ParamMap& pm) const;

private:
    Var run_blocks(const Var& x) const;
    nn::Linear in_proj_;
    std::vector<nn::TransformerBlock> blocks_;
    nn::LayerNorm final_ln_;
    idx width_ = 0;
};

class JointEmbedding {
public:
    JointEmbedding(const EmbedConfig& cfg, std::uint64_t seed);

    const EmbedConfig& config() const { return cfg_; }

    // Inference (no-grad).
    EncodedSequence encode_transcript(const Transcript& t) const;
    EncodedSequence encode_gesture(const LatentSequence& z) const;

    // Graph-building paths; parameters stay frozen (no grad accumulation)
    // unless training has marked them trainable, but gradients always flow
    // through to the inputs.
    Var transcript_pooled_var(const std::vector<idx>& tokens) const;
    Var gesture_pooled_var(const Var& codes) const;
    Var gesture_features_var(const Var& codes) const { return gesture_.features_var(codes); }

    // CLIP-style symmetric cross entropy over one batch of pooled pairs.
    // rows of z_t / z_g: one embedding per item.
    static Var contrastive_loss_var(const std::vector<Var>& z_g, const std::vector<Var>& z_t,
                                    double tau, bool normalize);
    // (1-w)*contrastive + w*(KL(p~g2t || p g2t) + KL(p~t2g || p t2g));
    // momentum targets come in as plain value rows.
    static Var mod_contrastive_loss_var(const std::vector<Var>& z_g, const std::vector<Var>& z_t,
                                        const std::vector<Array>& mom_z_g,
                                        const std::vector<Array>& mom_z_t, double tau, double w,
                                        bool normalize);

    // BERT-style masked-index pretraining of the gesture encoder.
    // `latents` are the quantized sequences of the training corpus.
    void masked_pretrain(const std::vector<LatentSequence>& latents, std::uint64_t seed,
                         EmbedTrainReport& report);

    // Contrastive fine-tuning with momentum distillation. Pairs are
    // (quantized latents, transcript) per item; the tail of the list is held
    // out for retrieval evaluation.
    EmbedTrainReport train(const std::vector<LatentSequence>& latents,
                           const std::vector<const Transcript*>& transcripts, std::uint64_t seed);

    // EMA update of the momentum encoders toward the online encoders.
    void update_momentum(double m);

    nn::ParamMap named_params() const;           // online + momentum + head
    nn::ParamMap online_params() const;          // trainable set
    const TranscriptEncoder& momentum_transcript() const { return mom_text_; }
    const GestureEncoder& momentum_gesture() const { return mom_gesture_; }

private:
    EncodedSequence run_no_grad(const Var& features) const;

    EmbedConfig cfg_;
    TranscriptEncoder text_;
    GestureEncoder gesture_;
    TranscriptEncoder mom_text_;
    GestureEncoder mom_gesture_;
    nn::Linear mask_head_;  // (C_s -> codebook_size)
    Var mask_embedding_;    // (1, C_s)
};

}  // namespace stylegest::embed
