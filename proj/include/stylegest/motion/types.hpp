#pragma once

#include <array>
#include <string>
#include <vector>

#include "stylegest/core/array.hpp"

namespace stylegest::motion {

// Pose layout: [root displacement (3) | joint 0 rot6d (6) | ... | joint J-1 rot6d (6)]
inline idx pose_dim(idx joints) { return 3 + 6 * joints; }

struct Pose {
    std::array<double, 3> root_displacement{};
    std::vector<std::array<double, 6>> joint_rotations;
};

// A motion clip: K poses at a fixed frame rate, stored row-major (K, 3+6J).
struct Motion {
    Array frames;  // (K, 3+6J)
    double fps = 60.0;
    idx joints = 0;
    idx pad_length = 0;  // trailing repeated-pose frames appended by the codec padding policy

    idx length() const { return frames.empty() ? 0 : frames.dim(0); }

    Pose pose(idx k) const {
        Pose p;
        p.root_displacement = {frames.at(k, 0), frames.at(k, 1), frames.at(k, 2)};
        p.joint_rotations.resize(static_cast<std::size_t>(joints));
        for (idx j = 0; j < joints; ++j)
            for (idx c = 0; c < 6; ++c)
                p.joint_rotations[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] =
                    frames.at(k, 3 + 6 * j + c);
        return p;
    }

    void validate() const {
        if (length() < 1) throw ValidationError("Motion: K >= 1 required");
        if (frames.dim(1) != pose_dim(joints))
            throw ShapeError("Motion: pose width " + std::to_string(frames.dim(1)) + " != 3+6J for J=" +
                             std::to_string(joints));
    }
};

// Acoustic features at the latent frame rate. Channel 0: onset strength,
// channel 1: amplitude envelope. Both unitless and >= 0.
struct AudioFeatures {
    Array frames;  // (L, 2)

    idx length() const { return frames.empty() ? 0 : frames.dim(0); }

    void validate() const {
        if (length() < 1 || frames.dim(1) != 2) throw ShapeError("AudioFeatures: (L,2) expected");
        if (!frames.all_finite()) throw ValidationError("AudioFeatures: non-finite value");
    }
};

struct WordSpan {
    idx start_frame = 0;  // inclusive, motion frame rate
    idx end_frame = 0;    // exclusive
};

struct Transcript {
    std::vector<idx> tokens;
    std::vector<WordSpan> word_spans;

    idx length() const { return static_cast<idx>(tokens.size()); }

    void validate(idx vocab_size) const {
        if (tokens.size() != word_spans.size())
            throw ValidationError("Transcript: tokens/word_spans length mismatch");
        idx prev_end = -1;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i] < 0 || tokens[i] >= vocab_size)
                throw ValidationError("Transcript: token id out of vocabulary");
            const auto& s = word_spans[i];
            if (s.start_frame < 0 || s.end_frame <= s.start_frame || s.start_frame < prev_end)
                throw ValidationError("Transcript: spans must be monotone and non-overlapping");
            prev_end = s.end_frame;
        }
    }
};

struct CorpusItem {
    Motion motion;
    AudioFeatures audio;
    Transcript transcript;
    std::string style_tag;
    // actual per-word motif onsets after jitter (generation metadata)
    std::vector<idx> motif_starts;
};

struct SyntheticCorpus {
    std::vector<CorpusItem> items;
    std::vector<std::string> vocabulary;
    std::vector<std::string> style_tags;
    std::uint64_t seed = 0;
    double fps = 60.0;
    idx joints = 0;
    idx downsample = 8;
};

}  // namespace stylegest::motion
