#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylegest/motion/types.hpp"

namespace stylegest::motion {

// Procedural transform a style tag applies to an item's gesture motifs.
struct StyleTag {
    std::string name;
    double amp_scale = 1.0;    // joint-angle amplitude multiplier
    double tempo_scale = 1.0;  // oscillation-cycle multiplier within each motif
    double asymmetry = 1.0;    // left-side amplitude multiplier (right side gets 1/asymmetry)
};

struct CorpusConfig {
    idx num_items = 512;
    idx joints = 8;
    idx k_min = 120;  // sentence length range in frames
    idx k_max = 200;
    idx vocab_size = 32;
    idx words_min = 3;
    idx words_max = 6;
    idx downsample = 8;   // latent rate divisor d used to size the audio features
    idx jitter = 10;      // max |frames| of word/gesture misalignment
    double fps = 60.0;
    std::vector<StyleTag> style_tags = {
        {"large", 1.8, 1.0, 1.0},
        {"small", 0.55, 1.0, 1.0},
        {"fast", 1.0, 1.8, 1.15},
        {"slow", 1.0, 0.45, 0.85},
    };
};

// Deterministic function of (seed, config). Item i is generated from the
// substream mix_seed(seed, i), so items are independent and the loop can be
// parallelized.
SyntheticCorpus generate_corpus(std::uint64_t seed, const CorpusConfig& config);

// Fixed word list backing the token ids (first vocab_size entries).
const std::vector<std::string>& corpus_word_list();

// latent length under the right-pad-to-multiple-of-d policy
inline idx latent_length(idx k, idx d) { return (k + d - 1) / d; }

}  // namespace stylegest::motion
