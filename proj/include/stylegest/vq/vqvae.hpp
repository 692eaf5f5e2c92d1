#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylegest/core/autograd.hpp"
#include "stylegest/core/random.hpp"
#include "stylegest/motion/types.hpp"
#include "stylegest/nn/modules.hpp"

namespace stylegest::vq {

using motion::Motion;

// Downsampled latent codes of a motion clip. `indices` is non-empty iff the
// codes are quantized codebook members.
struct LatentSequence {
    Array codes;  // (L, C)
    std::vector<idx> indices;
    idx downsample_rate = 8;
    idx pad_length = 0;  // carried from the encoded motion for decode-side trimming

    idx length() const { return codes.empty() ? 0 : codes.dim(0); }
    bool quantized() const { return !indices.empty(); }
};

struct VqVaeConfig {
    idx joints = 8;
    idx latent_dim = 32;      // C
    idx codebook_size = 512;  // N_VQ
    idx width = 64;           // conv channel count
    idx downsample = 8;       // d; must be a power of two (stride-2 block count)
    double commitment_beta = 0.25;

    // training
    idx epochs = 18;
    double lr = 1e-3;
    double holdout_fraction = 0.1;
    bool reseed_dead_codes = true;
};

struct VqLosses {
    ag::Var reconstruction;
    ag::Var codebook;
    ag::Var commitment;
    ag::Var total;
};

struct VqTrainReport {
    double initial_holdout_mse = 0.0;
    double final_holdout_mse = 0.0;
    double dead_code_fraction = 1.0;
    std::vector<std::int64_t> usage_counts;  // final epoch
    idx epochs_run = 0;
};

// Right-pad by repeating the last pose up to the next multiple of d; records
// the pad length on the returned motion.
Motion pad_to_multiple(const Motion& m, idx d);

class MotionVqVae {
public:
    MotionVqVae(const VqVaeConfig& config, std::uint64_t seed);

    const VqVaeConfig& config() const { return cfg_; }

    // Inference (no-grad, thread-safe over frozen parameters).
    LatentSequence encode(const Motion& m) const;
    LatentSequence quantize(const LatentSequence& z) const;
    Motion decode(const LatentSequence& z) const;

    // Training-path graph: reconstruction + codebook + commitment losses.
    VqLosses losses(const Motion& m) const;

    VqTrainReport train(const std::vector<const Motion*>& items, std::uint64_t seed);

    const Array& codebook() const { return codebook_.value(); }
    const std::vector<std::int64_t>& usage_counts() const { return usage_counts_; }

    nn::ParamMap named_params() const;

    // graph-building encode/decode used by both the loss path and the
    // latent-diffusion training losses
    ag::Var encode_var(const ag::Var& pose_rows) const;
    ag::Var decode_var(const ag::Var& codes) const;

private:
    struct ConvBlock {
        ag::Var w1, b1;  // strided or plain conv
        ag::Var w2, b2;  // residual conv pair
        ag::Var w3, b3;
    };

    ag::Var run_down_block(const ConvBlock& blk, const ag::Var& x) const;
    ag::Var run_up_block(const ConvBlock& blk, const ag::Var& x) const;
    void nearest_codebook(const Array& z, std::vector<idx>& out) const;

    VqVaeConfig cfg_;
    idx blocks_ = 3;

    ag::Var in_proj_w_, in_proj_b_;
    std::vector<ConvBlock> down_;
    ag::Var to_latent_w_, to_latent_b_;
    ag::Var from_latent_w_, from_latent_b_;
    std::vector<ConvBlock> up_;
    ag::Var out_proj_w_, out_proj_b_;
    ag::Var codebook_;  // (N_VQ, C)

    std::vector<std::int64_t> usage_counts_;
};

}  // namespace stylegest::vq
