#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stylegest/core/autograd.hpp"
#include "stylegest/core/random.hpp"

namespace stylegest::nn {

using ag::Var;

// Named parameter list; the order is the checkpoint order.
using ParamMap = std::vector<std::pair<std::string, Var>>;

inline std::vector<Var> values_of(const ParamMap& pm) {
    std::vector<Var> out;
    out.reserve(pm.size());
    for (const auto& [k, v] : pm) out.push_back(v);
    return out;
}

// theta_tgt <- m * theta_tgt + (1-m) * theta_src, entry by entry.
void ema_update(const ParamMap& target, const ParamMap& source, double momentum);

// Overwrites target values with source values.
void copy_params(const ParamMap& target, const ParamMap& source);

void set_requires_grad(const ParamMap& pm, bool rg);

struct Linear {
    Var w;  // (in, out)
    Var b;  // (out)

    Linear() = default;
    Linear(idx in, idx out, RandomStream& rng);
    Var forward(const Var& x) const { return ag::add_rowvec(ag::matmul(x, w), b); }
    void collect(const std::string& prefix, ParamMap& pm) const;
};

struct LayerNorm {
    Var gain;  // (C), ones
    Var bias;  // (C), zeros

    LayerNorm() = default;
    explicit LayerNorm(idx c);
    Var forward(const Var& x) const { return ag::layer_norm_rows(x, gain, bias); }
    void collect(const std::string& prefix, ParamMap& pm) const;
};

struct Embedding {
    Var table;  // (V, C)

    Embedding() = default;
    Embedding(idx vocab, idx c, RandomStream& rng);
    Var forward(const std::vector<idx>& ids) const { return ag::embedding_rows(table, ids); }
    void collect(const std::string& prefix, ParamMap& pm) const;
};

// Multi-head attention over a single sequence. Causal masking optional.
struct SelfAttention {
    Linear wq, wk, wv, wo;
    idx heads = 1;
    bool causal = false;

    SelfAttention() = default;
    SelfAttention(idx c, idx heads, bool causal, RandomStream& rng);
    Var forward(const Var& x) const;
    void collect(const std::string& prefix, ParamMap& pm) const;
};

// Cross-attention from a query sequence onto a memory sequence, with an
// optional per-memory-row weight vector multiplied into the logits.
struct CrossAttention {
    Linear wq, wk, wv, wo;
    idx heads = 1;

    CrossAttention() = default;
    CrossAttention(idx c, idx c_mem, idx heads, RandomStream& rng);
    // weights: (S) probability vector or undefined
    Var forward(const Var& x, const Var& memory, const Var& weights) const;
    void collect(const std::string& prefix, ParamMap& pm) const;
};

struct FeedForward {
    Linear fc1, fc2;

    FeedForward() = default;
    FeedForward(idx c, idx hidden, RandomStream& rng);
    Var forward(const Var& x) const { return fc2.forward(ag::gelu(fc1.forward(x))); }
    void collect(const std::string& prefix, ParamMap& pm) const;
};

// Pre-norm transformer block: x += attn(ln1(x)); x += ffn(ln2(x)).
struct TransformerBlock {
    LayerNorm ln1, ln2;
    SelfAttention attn;
    FeedForward ffn;

    TransformerBlock() = default;
    TransformerBlock(idx c, idx heads, idx ffn_hidden, bool causal, RandomStream& rng);
    Var forward(const Var& x) const;
    void collect(const std::string& prefix, ParamMap& pm) const;
};

// Sinusoidal features, one row per position value.
Array sinusoidal_rows(const std::vector<double>& positions, idx c);

}  // namespace stylegest::nn
