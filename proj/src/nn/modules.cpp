#include "stylegest/nn/modules.hpp"

#include <cmath>

namespace stylegest::nn {

void ema_update(const ParamMap& target, const ParamMap& source, double momentum) {
    if (target.size() != source.size())
        throw ShapeError("ema_update: parameter count mismatch");
    for (std::size_t i = 0; i < target.size(); ++i) {
        Array& t = const_cast<Var&>(target[i].second).mutable_value();
        const Array& s = source[i].second.value();
        check_same_shape(t, s, "ema_update");
        for (idx k = 0; k < t.size(); ++k) t[k] = momentum * t[k] + (1.0 - momentum) * s[k];
    }
}

void copy_params(const ParamMap& target, const ParamMap& source) { ema_update(target, source, 0.0); }

void set_requires_grad(const ParamMap& pm, bool rg) {
    for (const auto& [k, v] : pm) const_cast<Var&>(v).set_requires_grad(rg);
}

Linear::Linear(idx in, idx out, RandomStream& rng) {
    const double std = std::sqrt(2.0 / static_cast<double>(in + out));
    w = Var(rng.normal_array({in, out}, std), true);
    b = Var(Array({out}), true);
}

void Linear::collect(const std::string& prefix, ParamMap& pm) const {
    pm.push_back({prefix + ".w", w});
    pm.push_back({prefix + ".b", b});
}

LayerNorm::LayerNorm(idx c) {
    gain = Var(Array({c}, 1.0), true);
    bias = Var(Array({c}), true);
}

void LayerNorm::collect(const std::string& prefix, ParamMap& pm) const {
    pm.push_back({prefix + ".gain", gain});
    pm.push_back({prefix + ".bias", bias});
}

Embedding::Embedding(idx vocab, idx c, RandomStream& rng) {
    table = Var(rng.normal_array({vocab, c}, 0.02), true);
}

void Embedding::collect(const std::string& prefix, ParamMap& pm) const {
    pm.push_back({prefix + ".table", table});
}

namespace {

Array causal_mask(idx n) {
    Array m({n, n});
    for (idx i = 0; i < n; ++i)
        for (idx j = i + 1; j < n; ++j) m[i * n + j] = -1e30;
    return m;
}

// shared multi-head attention body
Var attention_heads(const Var& q, const Var& k, const Var& v, idx heads, const Var& mask,
                    const Var& col_weights) {
    const idx c = q.value().dim(1);
    const idx dk = c / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
    std::vector<Var> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (idx h = 0; h < heads; ++h) {
        Var qh = ag::slice_cols(q, h * dk, (h + 1) * dk);
        Var kh = ag::slice_cols(k, h * dk, (h + 1) * dk);
        Var vh = ag::slice_cols(v, h * dk, (h + 1) * dk);
        Var scores = ag::scale(ag::matmul_nt(qh, kh), inv_sqrt);
        if (col_weights.defined()) scores = ag::mul_rowvec(scores, col_weights);
        if (mask.defined()) scores = ag::add(scores, mask);
        Var attn = ag::softmax_rows(scores);
        outs.push_back(ag::matmul(attn, vh));
    }
    Var merged = outs[0];
    for (std::size_t i = 1; i < outs.size(); ++i) merged = ag::concat_cols(merged, outs[i]);
    return merged;
}

}  // namespace

SelfAttention::SelfAttention(idx c, idx h, bool causal_, RandomStream& rng)
    : wq(c, c, rng), wk(c, c, rng), wv(c, c, rng), wo(c, c, rng), heads(h), causal(causal_) {
    if (c % h != 0) throw ShapeError("SelfAttention: width not divisible by heads");
}

Var SelfAttention::forward(const Var& x) const {
    const idx n = x.value().dim(0);
    Var mask = causal ? Var::constant(causal_mask(n)) : Var();
    Var merged = attention_heads(wq.forward(x), wk.forward(x), wv.forward(x), heads, mask, Var());
    return wo.forward(merged);
}

void SelfAttention::collect(const std::string& prefix, ParamMap& pm) const {
    wq.collect(prefix + ".wq", pm);
    wk.collect(prefix + ".wk", pm);
    wv.collect(prefix + ".wv", pm);
    wo.collect(prefix + ".wo", pm);
}

CrossAttention::CrossAttention(idx c, idx c_mem, idx h, RandomStream& rng)
    : wq(c, c, rng), wk(c_mem, c, rng), wv(c_mem, c, rng), wo(c, c, rng), heads(h) {
    if (c % h != 0) throw ShapeError("CrossAttention: width not divisible by heads");
}

Var CrossAttention::forward(const Var& x, const Var& memory, const Var& weights) const {
    Var merged =
        attention_heads(wq.forward(x), wk.forward(memory), wv.forward(memory), heads, Var(), weights);
    return wo.forward(merged);
}

void CrossAttention::collect(const std::string& prefix, ParamMap& pm) const {
    wq.collect(prefix + ".wq", pm);
    wk.collect(prefix + ".wk", pm);
    wv.collect(prefix + ".wv", pm);
    wo.collect(prefix + ".wo", pm);
}

FeedForward::FeedForward(idx c, idx hidden, RandomStream& rng) : fc1(c, hidden, rng), fc2(hidden, c, rng) {}

void FeedForward::collect(const std::string& prefix, ParamMap& pm) const {
    fc1.collect(prefix + ".fc1", pm);
    fc2.collect(prefix + ".fc2", pm);
}

TransformerBlock::TransformerBlock(idx c, idx heads, idx ffn_hidden, bool causal, RandomStream& rng)
    : ln1(c), ln2(c), attn(c, heads, causal, rng), ffn(c, ffn_hidden, rng) {}

Var TransformerBlock::forward(const Var& x) const {
    Var h = ag::add(x, attn.forward(ln1.forward(x)));
    return ag::add(h, ffn.forward(ln2.forward(h)));
}

void TransformerBlock::collect(const std::string& prefix, ParamMap& pm) const {
    ln1.collect(prefix + ".ln1", pm);
    ln2.collect(prefix + ".ln2", pm);
    attn.collect(prefix + ".attn", pm);
    ffn.collect(prefix + ".ffn", pm);
}

Array sinusoidal_rows(const std::vector<double>& positions, idx c) {
    const idx n = static_cast<idx>(positions.size());
    Array out({n, c});
    const idx half = c / 2;
    for (idx i = 0; i < n; ++i) {
        const double p = positions[static_cast<std::size_t>(i)];
        for (idx j = 0; j < half; ++j) {
            const double freq = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(half));
            out[i * c + 2 * j] = std::sin(p * freq);
            out[i * c + 2 * j + 1] = std::cos(p * freq);
        }
        if (c % 2 == 1) out[i * c + c - 1] = 0.0;
    }
    return out;
}

}  // namespace stylegest::nn
