#pragma once

#include <string>
#include <vector>

#include "stylegest/motion/types.hpp"

namespace stylegest::motion {

struct Waveform {
    std::vector<double> samples;
    double sample_rate = 16000.0;
};

// Onset strength (half-wave-rectified frame-energy difference) and amplitude
// envelope (windowed RMS), linearly resampled to `target_length` frames.
// Silence maps to all-zero features.
AudioFeatures extract_audio_features(const Waveform& wf, idx target_length, idx window = 512,
                                     idx hop = 256);

// Minimal PCM WAV reader (16-bit or 32-bit float, first channel).
Waveform load_waveform_wav(const std::string& path);

}  // namespace stylegest::motion
