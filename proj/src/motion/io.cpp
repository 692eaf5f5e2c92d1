#include "stylegest/motion/io.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace stylegest::motion {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'M', 'O'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<unsigned char>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    const std::vector<unsigned char>& bytes;
    std::size_t off = 0;

    void need(std::size_t n, const char* what) const {
        if (off + n > bytes.size())
            throw ParseError(std::string("load_motion: truncated file while reading ") + what, off);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[off + i]) << (8 * i);
        off += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[off + i]) << (8 * i);
        off += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace

void save_motion(const Motion& m, const std::string& path) {
    m.validate();
    std::vector<unsigned char> out;
    out.reserve(static_cast<std::size_t>(24 + m.frames.size() * 8));
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_f64(out, m.fps);
    put_u32(out, static_cast<std::uint32_t>(m.joints));
    put_u32(out, static_cast<std::uint32_t>(m.length()));
    put_u32(out, static_cast<std::uint32_t>(m.pad_length));
    for (idx i = 0; i < m.frames.size(); ++i) put_f64(out, m.frames[i]);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("save_motion: cannot open " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

Motion load_motion(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("load_motion: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{bytes};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("load_motion: bad magic", 0);
    r.off = 4;
    const std::uint32_t version = r.u32("version");
    if (version != kVersion)
        throw UnsupportedVersionError("load_motion: unsupported version " + std::to_string(version) +
                                      " (expected " + std::to_string(kVersion) + ")");
    Motion m;
    m.fps = r.f64("fps");
    m.joints = static_cast<idx>(r.u32("J"));
    const idx k = static_cast<idx>(r.u32("K"));
    m.pad_length = static_cast<idx>(r.u32("pad"));
    if (k < 1 || m.joints < 1) throw ParseError("load_motion: invalid header counts", r.off);
    m.frames = Array({k, pose_dim(m.joints)});
    for (idx i = 0; i < m.frames.size(); ++i) m.frames[i] = r.f64("pose data");
    if (r.off != bytes.size()) throw ParseError("load_motion: trailing bytes", r.off);
    m.validate();
    return m;
}

void export_motion_csv(const Motion& m, const std::string& path) {
    m.validate();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ValidationError("export_motion_csv: cannot open " + path);
    f << "# fps=" << m.fps << " J=" << m.joints << " K=" << m.length() << "\n";
    f << "frame,root_x,root_y,root_z";
    for (idx j = 0; j < m.joints; ++j)
        for (idx c = 0; c < 6; ++c) f << ",j" << j << "_r" << c;
    f << "\n";
    f.precision(17);
    for (idx t = 0; t < m.length(); ++t) {
        f << t;
        for (idx c = 0; c < m.frames.dim(1); ++c) f << "," << m.frames.at(t, c);
        f << "\n";
    }
}

void export_motion_json(const Motion& m, const std::string& path) {
    m.validate();
    nlohmann::json j;
    j["fps"] = m.fps;
    j["joints"] = m.joints;
    j["length"] = m.length();
    j["pad_length"] = m.pad_length;
    auto& frames = j["frames"] = nlohmann::json::array();
    for (idx t = 0; t < m.length(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (idx c = 0; c < m.frames.dim(1); ++c) row.push_back(m.frames.at(t, c));
        frames.push_back(std::move(row));
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ValidationError("export_motion_json: cannot open " + path);
    f << j.dump(1) << "\n";
}

void save_corpus(const SyntheticCorpus& corpus, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json j;
    j["version"] = 1;
    j["seed"] = corpus.seed;
    j["fps"] = corpus.fps;
    j["joints"] = corpus.joints;
    j["downsample"] = corpus.downsample;
    j["vocabulary"] = corpus.vocabulary;
    j["style_tags"] = corpus.style_tags;
    auto& items = j["items"] = nlohmann::json::array();
    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
        const auto& item = corpus.items[i];
        const std::string motion_file = "item_" + std::to_string(i) + ".sgm";
        save_motion(item.motion, dir + "/" + motion_file);
        nlohmann::json ji;
        ji["motion_file"] = motion_file;
        ji["style_tag"] = item.style_tag;
        ji["tokens"] = item.transcript.tokens;
        auto& spans = ji["spans"] = nlohmann::json::array();
        for (const auto& s : item.transcript.word_spans)
            spans.push_back({s.start_frame, s.end_frame});
        ji["motif_starts"] = item.motif_starts;
        auto& audio = ji["audio"] = nlohmann::json::array();
        for (idx l = 0; l < item.audio.length(); ++l)
            audio.push_back({item.audio.frames.at(l, 0), item.audio.frames.at(l, 1)});
        items.push_back(std::move(ji));
    }
    std::ofstream f(dir + "/corpus.json", std::ios::trunc);
    if (!f) throw ValidationError("save_corpus: cannot open " + dir + "/corpus.json");
    f << j.dump(1) << "\n";
}

SyntheticCorpus load_corpus(const std::string& dir) {
    std::ifstream f(dir + "/corpus.json");
    if (!f) throw ValidationError("load_corpus: cannot open " + dir + "/corpus.json");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("load_corpus: bad json: ") + e.what(), 0);
    }
    if (j.value("version", 0) != 1)
        throw UnsupportedVersionError("load_corpus: unsupported corpus.json version");

    SyntheticCorpus corpus;
    corpus.seed = j.at("seed").get<std::uint64_t>();
    corpus.fps = j.at("fps").get<double>();
    corpus.joints = j.at("joints").get<idx>();
    corpus.downsample = j.at("downsample").get<idx>();
    corpus.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    corpus.style_tags = j.at("style_tags").get<std::vector<std::string>>();
    for (const auto& ji : j.at("items")) {
        CorpusItem item;
        item.motion = load_motion(dir + "/" + ji.at("motion_file").get<std::string>());
        item.style_tag = ji.at("style_tag").get<std::string>();
        item.transcript.tokens = ji.at("tokens").get<std::vector<idx>>();
        for (const auto& s : ji.at("spans"))
            item.transcript.word_spans.push_back({s.at(0).get<idx>(), s.at(1).get<idx>()});
        item.motif_starts = ji.at("motif_starts").get<std::vector<idx>>();
        const auto& audio = ji.at("audio");
        item.audio.frames = Array({static_cast<idx>(audio.size()), 2});
        for (idx l = 0; l < static_cast<idx>(audio.size()); ++l) {
            item.audio.frames.at(l, 0) = audio[static_cast<std::size_t>(l)].at(0).get<double>();
            item.audio.frames.at(l, 1) = audio[static_cast<std::size_t>(l)].at(1).get<double>();
        }
        item.transcript.validate(static_cast<idx>(corpus.vocabulary.size()));
        corpus.items.push_back(std::move(item));
    }
    return corpus;
}

}  // namespace stylegest::motion
