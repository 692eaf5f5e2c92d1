#include "stylegest/motion/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace stylegest::motion {

AudioFeatures extract_audio_features(const Waveform& wf, idx target_length, idx window, idx hop) {
    if (wf.samples.empty()) throw ValidationError("extract_audio_features: empty waveform");
    if (target_length < 1) throw ValidationError("extract_audio_features: target_length >= 1 required");
    if (window < 1 || hop < 1) throw ValidationError("extract_audio_features: bad window/hop");
    for (double s : wf.samples)
        if (!std::isfinite(s)) throw ValidationError("extract_audio_features: non-finite sample");

    const idx n = static_cast<idx>(wf.samples.size());
    const idx frames = std::max<idx>(1, (n + hop - 1) / hop);

    // frame energy and RMS envelope
    std::vector<double> energy(static_cast<std::size_t>(frames), 0.0);
    std::vector<double> envelope(static_cast<std::size_t>(frames), 0.0);
    for (idx f = 0; f < frames; ++f) {
        const idx s0 = f * hop;
        const idx s1 = std::min<idx>(n, s0 + window);
        double e = 0.0;
        for (idx s = s0; s < s1; ++s) e += wf.samples[static_cast<std::size_t>(s)] * wf.samples[static_cast<std::size_t>(s)];
        const idx cnt = std::max<idx>(1, s1 - s0);
        energy[static_cast<std::size_t>(f)] = e / static_cast<double>(cnt);
        envelope[static_cast<std::size_t>(f)] = std::sqrt(e / static_cast<double>(cnt));
    }

    // half-wave-rectified energy difference
    std::vector<double> onset(static_cast<std::size_t>(frames), 0.0);
    for (idx f = 1; f < frames; ++f) {
        const double d = energy[static_cast<std::size_t>(f)] - energy[static_cast<std::size_t>(f - 1)];
        onset[static_cast<std::size_t>(f)] = d > 0.0 ? d : 0.0;
    }
    onset[0] = energy[0] > 0.0 ? energy[0] : 0.0;

    // linear resample both channels to target_length
    AudioFeatures out;
    out.frames = Array({target_length, 2});
    for (idx l = 0; l < target_length; ++l) {
        double pos = frames == 1 ? 0.0
                                 : static_cast<double>(l) * static_cast<double>(frames - 1) /
                                       static_cast<double>(std::max<idx>(1, target_length - 1));
        if (target_length == 1) pos = 0.0;
        const idx f0 = static_cast<idx>(std::floor(pos));
        const idx f1 = std::min<idx>(frames - 1, f0 + 1);
        const double t = pos - static_cast<double>(f0);
        out.frames.at(l, 0) = (1.0 - t) * onset[static_cast<std::size_t>(f0)] + t * onset[static_cast<std::size_t>(f1)];
        out.frames.at(l, 1) =
            (1.0 - t) * envelope[static_cast<std::size_t>(f0)] + t * envelope[static_cast<std::size_t>(f1)];
    }
    return out;
}

namespace {

std::uint32_t read_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Waveform load_waveform_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("load_waveform_wav: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw ParseError("load_waveform_wav: not a RIFF/WAVE file", 0);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::size_t data_off = 0, data_len = 0;
    std::size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const std::uint32_t chunk_len = read_u32le(bytes.data() + off + 4);
        if (std::memcmp(bytes.data() + off, "fmt ", 4) == 0) {
            if (off + 8 + 16 > bytes.size()) throw ParseError("load_waveform_wav: truncated fmt chunk", off);
            format = read_u16le(bytes.data() + off + 8);
            channels = read_u16le(bytes.data() + off + 10);
            rate = read_u32le(bytes.data() + off + 12);
            bits = read_u16le(bytes.data() + off + 22);
        } else if (std::memcmp(bytes.data() + off, "data", 4) == 0) {
            data_off = off + 8;
            data_len = chunk_len;
        }
        off += 8 + chunk_len + (chunk_len % 2);
    }
    if (data_off == 0 || channels == 0) throw ParseError("load_waveform_wav: missing data or fmt chunk", off);
    if (data_off + data_len > bytes.size())
        throw ParseError("load_waveform_wav: data chunk exceeds file size", data_off);

    Waveform wf;
    wf.sample_rate = static_cast<double>(rate);
    const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
    const std::size_t n = frame_bytes == 0 ? 0 : data_len / frame_bytes;
    wf.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* p = bytes.data() + data_off + i * frame_bytes;
        if (format == 1 && bits == 16) {
            std::int16_t v;
            std::memcpy(&v, p, 2);
            wf.samples.push_back(static_cast<double>(v) / 32768.0);
        } else if (format == 3 && bits == 32) {
            float v;
            std::memcpy(&v, p, 4);
            wf.samples.push_back(static_cast<double>(v));
        } else {
            throw ParseError("load_waveform_wav: unsupported format (PCM16 or float32 expected)",
                             data_off + i * frame_bytes);
        }
    }
    if (wf.samples.empty()) throw ValidationError("load_waveform_wav: no samples");
    return wf;
}

}  // namespace stylegest::motion
