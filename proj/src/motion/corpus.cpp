#include "stylegest/motion/corpus.hpp"

#include <cmath>

#include "stylegest/core/kernels.hpp"
#include "stylegest/core/random.hpp"
#include "stylegest/motion/rot6d.hpp"

namespace stylegest::motion {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMotifAmp = 0.45;    // base motif amplitude, radians
constexpr double kSwayAmp = 0.02;     // idle sway amplitude, radians
constexpr double kPostureAmp = 0.08;  // shared neutral posture magnitude
constexpr double kStylePosture = 0.18;

// Per-token motif: two normalized direction patterns over (J,3) angle space,
// an oscillation cycle count, and a phase. Shared across all items of a corpus.
struct TokenMotif {
    std::vector<double> swing;   // (J*3), oscillating component
    std::vector<double> offset;  // (J*3), bump-shaped component
    double cycles = 1.0;
    double phase = 0.0;
    double strength = 1.0;
};

std::vector<double> normalized_pattern(RandomStream& rng, idx n) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double mx = 0.0;
    for (auto& v : p) {
        v = rng.normal();
        mx = std::max(mx, std::abs(v));
    }
    for (auto& v : p) v /= (mx > 0 ? mx : 1.0);
    return p;
}

TokenMotif make_token_motif(std::uint64_t corpus_seed, idx token, idx joints) {
    RandomStream rng(mix_seed(mix_seed(corpus_seed, "token-motif"), static_cast<std::uint64_t>(token)));
    TokenMotif m;
    m.swing = normalized_pattern(rng, joints * 3);
    m.offset = normalized_pattern(rng, joints * 3);
    // cap the combined per-channel amplitude so the euler-safe range holds
    double cap = 0.0;
    for (std::size_t i = 0; i < m.swing.size(); ++i)
        cap = std::max(cap, std::abs(m.swing[i]) * 0.6 + std::abs(m.offset[i]));
    for (std::size_t i = 0; i < m.swing.size(); ++i) {
        m.swing[i] /= cap;
        m.offset[i] /= cap;
    }
    m.cycles = static_cast<double>(rng.uniform_int(1, 3));
    m.phase = rng.uniform(0.0, kTwoPi);
    m.strength = rng.uniform(0.75, 1.0);
    return m;
}

std::vector<double> posture_direction(std::uint64_t seed, const std::string& tag, idx joints,
                                      double magnitude) {
    RandomStream rng(mix_seed(seed, "posture:" + tag));
    std::vector<double> p = normalized_pattern(rng, joints * 3);
    for (auto& v : p) v *= magnitude;
    return p;
}

// left-arm-ish joints get the asymmetry boost, right-side joints its inverse
double side_factor(idx joint, double asym) {
    if (joint < 2) return 1.0;
    return (joint % 2 == 0) ? asym : 1.0 / asym;
}

CorpusItem generate_item(std::uint64_t item_seed, const CorpusConfig& cfg,
                         const std::vector<TokenMotif>& motifs,
                         const std::vector<std::vector<double>>& tag_postures,
                         const std::vector<double>& base_posture) {
    RandomStream rng(item_seed);
    const idx J = cfg.joints;
    const idx A = J * 3;  // angle channels

    const idx tag_index = rng.uniform_index(static_cast<idx>(cfg.style_tags.size()));
    const StyleTag& tag = cfg.style_tags[static_cast<std::size_t>(tag_index)];

    const idx K = rng.uniform_int(cfg.k_min, cfg.k_max);
    const idx n_words = rng.uniform_int(cfg.words_min, cfg.words_max);

    CorpusItem item;
    item.style_tag = tag.name;

    // word spans over [8, K-8), evenly slotted
    const idx usable = K - 16;
    const idx slot = usable / n_words;
    for (idx w = 0; w < n_words; ++w) {
        WordSpan s;
        s.start_frame = 8 + w * slot;
        s.end_frame = s.start_frame + slot - 4;
        item.transcript.word_spans.push_back(s);
        item.transcript.tokens.push_back(rng.uniform_index(cfg.vocab_size));
    }

    // per-word onset jitter and loudness
    std::vector<double> loudness;
    for (idx w = 0; w < n_words; ++w) {
        const idx jit = rng.uniform_int(-cfg.jitter, cfg.jitter);
        const auto& s = item.transcript.word_spans[static_cast<std::size_t>(w)];
        const idx len = s.end_frame - s.start_frame;
        idx onset = s.start_frame + jit;
        onset = std::max<idx>(0, std::min<idx>(K - len, onset));
        item.motif_starts.push_back(onset);
        loudness.push_back(rng.uniform(0.6, 1.0));
    }

    // idle sway phases per angle channel
    std::vector<double> sway_phase(static_cast<std::size_t>(A));
    for (auto& p : sway_phase) p = rng.uniform(0.0, kTwoPi);
    const double root_phase = rng.uniform(0.0, kTwoPi);

    // angle tracks: posture + sway + style-transformed motifs
    std::vector<double> angles(static_cast<std::size_t>(K * A), 0.0);
    const auto& posture = tag_postures[static_cast<std::size_t>(tag_index)];
    for (idx t = 0; t < K; ++t) {
        const double tsec = static_cast<double>(t) / cfg.fps;
        for (idx a = 0; a < A; ++a)
            angles[static_cast<std::size_t>(t * A + a)] =
                base_posture[static_cast<std::size_t>(a)] + posture[static_cast<std::size_t>(a)] +
                kSwayAmp * std::sin(kTwoPi * 0.25 * tsec + sway_phase[static_cast<std::size_t>(a)]);
    }
    for (idx w = 0; w < n_words; ++w) {
        const auto& motif = motifs[static_cast<std::size_t>(item.transcript.tokens[static_cast<std::size_t>(w)])];
        const idx onset = item.motif_starts[static_cast<std::size_t>(w)];
        const idx len = item.transcript.word_spans[static_cast<std::size_t>(w)].end_frame -
                        item.transcript.word_spans[static_cast<std::size_t>(w)].start_frame;
        for (idx t = onset; t < std::min<idx>(K, onset + len); ++t) {
            const double tau = static_cast<double>(t - onset) / static_cast<double>(len);
            const double bump = std::sin(3.14159265358979323846 * tau);
            const double env = bump * bump;
            const double osc = std::sin(kTwoPi * motif.cycles * tag.tempo_scale * tau + motif.phase);
            const double amp = kMotifAmp * tag.amp_scale * motif.strength;
            for (idx j = 0; j < J; ++j) {
                const double side = side_factor(j, tag.asymmetry);
                for (idx ax = 0; ax < 3; ++ax) {
                    const idx a = j * 3 + ax;
                    angles[static_cast<std::size_t>(t * A + a)] +=
                        amp * side *
                        (0.6 * motif.swing[static_cast<std::size_t>(a)] * osc * env +
                         motif.offset[static_cast<std::size_t>(a)] * env);
                }
            }
        }
    }

    // poses: root displacement + 6d rotations from the angle tracks
    item.motion.fps = cfg.fps;
    item.motion.joints = J;
    item.motion.frames = Array({K, pose_dim(J)});
    for (idx t = 0; t < K; ++t) {
        const double tsec = static_cast<double>(t) / cfg.fps;
        item.motion.frames.at(t, 0) = 0.02 * tag.amp_scale * std::sin(kTwoPi * 0.3 * tsec + root_phase);
        item.motion.frames.at(t, 1) = 0.9 + 0.01 * std::sin(kTwoPi * 0.22 * tsec + root_phase * 0.5);
        item.motion.frames.at(t, 2) = 0.015 * tag.amp_scale * std::sin(kTwoPi * 0.17 * tsec + root_phase * 2.0);
        for (idx j = 0; j < J; ++j) {
            const Mat3 r = matrix_from_euler_zyx(angles[static_cast<std::size_t>(t * A + j * 3 + 0)],
                                                 angles[static_cast<std::size_t>(t * A + j * 3 + 1)],
                                                 angles[static_cast<std::size_t>(t * A + j * 3 + 2)]);
            const Vec6 r6 = rot6d_from_matrix(r);
            for (idx c = 0; c < 6; ++c) item.motion.frames.at(t, 3 + 6 * j + c) = r6[static_cast<std::size_t>(c)];
        }
    }

    // envelope at motion rate from the word bumps, pooled to the latent rate
    std::vector<double> env(static_cast<std::size_t>(K), 0.05);
    for (idx w = 0; w < n_words; ++w) {
        const auto& s = item.transcript.word_spans[static_cast<std::size_t>(w)];
        for (idx t = s.start_frame; t < std::min<idx>(K, s.end_frame); ++t) {
            const double tau = static_cast<double>(t - s.start_frame) /
                               static_cast<double>(s.end_frame - s.start_frame);
            const double bump = std::sin(3.14159265358979323846 * tau);
            env[static_cast<std::size_t>(t)] += loudness[static_cast<std::size_t>(w)] * bump * bump;
        }
    }
    const idx L = latent_length(K, cfg.downsample);
    item.audio.frames = Array({L, 2});
    double prev = 0.0;
    for (idx l = 0; l < L; ++l) {
        const idx t0 = l * cfg.downsample;
        const idx t1 = std::min<idx>(K, t0 + cfg.downsample);
        double e = 0.0;
        for (idx t = t0; t < t1; ++t) e += env[static_cast<std::size_t>(t)];
        e /= static_cast<double>(std::max<idx>(1, t1 - t0));
        item.audio.frames.at(l, 1) = e;
        item.audio.frames.at(l, 0) = std::max(0.0, e - prev);
        prev = e;
    }
    return item;
}

}  // namespace

const std::vector<std::string>& corpus_word_list() {
    static const std::vector<std::string> words = {
        "hello",  "world",  "big",     "tiny",   "wave",   "point",  "open",   "close",
        "up",     "down",   "left",    "right",  "circle", "push",   "pull",   "stop",
        "go",     "come",   "here",    "there",  "yes",    "no",     "maybe",  "always",
        "never",  "first",  "last",    "heavy",  "light",  "warm",   "cold",   "quick",
        "calm",   "storm",  "river",   "stone",  "bridge", "tower",  "friend", "story",
        "music",  "dance",  "morning", "night",  "sun",    "moon",   "cloud",  "wind",
        "fire",   "water",  "earth",   "spark",  "echo",   "shadow", "dream",  "plan",
    };
    return words;
}

SyntheticCorpus generate_corpus(std::uint64_t seed, const CorpusConfig& cfg) {
    if (cfg.style_tags.empty()) throw ValidationError("generate_corpus: style_tags must be non-empty");
    if (cfg.vocab_size < 8) throw ValidationError("generate_corpus: vocab_size >= 8 required");
    if (cfg.vocab_size > static_cast<idx>(corpus_word_list().size()))
        throw ValidationError("generate_corpus: vocab_size exceeds the word list");
    if (cfg.k_min < 32 || cfg.k_max < cfg.k_min) throw ValidationError("generate_corpus: bad K range");
    if (cfg.num_items < 1) throw ValidationError("generate_corpus: num_items >= 1 required");
    if (cfg.words_min < 1 || cfg.words_max < cfg.words_min)
        throw ValidationError("generate_corpus: bad words range");
    for (const auto& t : cfg.style_tags)
        if (t.amp_scale <= 0 || t.tempo_scale <= 0 || t.asymmetry <= 0)
            throw ValidationError("generate_corpus: style transform values must be positive");

    SyntheticCorpus corpus;
    corpus.seed = seed;
    corpus.fps = cfg.fps;
    corpus.joints = cfg.joints;
    corpus.downsample = cfg.downsample;
    corpus.vocabulary.assign(corpus_word_list().begin(), corpus_word_list().begin() + cfg.vocab_size);
    for (const auto& t : cfg.style_tags) corpus.style_tags.push_back(t.name);

    std::vector<TokenMotif> motifs;
    motifs.reserve(static_cast<std::size_t>(cfg.vocab_size));
    for (idx tok = 0; tok < cfg.vocab_size; ++tok) motifs.push_back(make_token_motif(seed, tok, cfg.joints));

    std::vector<std::vector<double>> tag_postures;
    for (const auto& t : cfg.style_tags)
        tag_postures.push_back(posture_direction(seed, t.name, cfg.joints, kStylePosture));
    const std::vector<double> base_posture = posture_direction(seed, "(base)", cfg.joints, kPostureAmp);

    corpus.items.resize(static_cast<std::size_t>(cfg.num_items));
#pragma omp parallel for schedule(static) if (kernels::threads() > 1)
    for (idx i = 0; i < cfg.num_items; ++i)
        corpus.items[static_cast<std::size_t>(i)] =
            generate_item(mix_seed(seed, static_cast<std::uint64_t>(i)), cfg, motifs, tag_postures,
                          base_posture);

    for (const auto& item : corpus.items) {
        item.motion.validate();
        item.audio.validate();
        item.transcript.validate(cfg.vocab_size);
    }
    return corpus;
}

}  // namespace stylegest::motion
