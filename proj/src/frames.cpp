#include "procau/frames.hpp"

#include <cstring>
#include <fstream>

namespace procau {

namespace {
constexpr std::uint32_t kFramesMagic = 0x50434652; // "PCFR"
constexpr std::uint32_t kFramesVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw InputError(std::string("frames blob: truncated while reading ") + what);
    return v;
}
} // namespace

std::size_t FrameSequence::frame_size() const {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

void FrameSequence::validate() const {
    if (frames.empty()) throw InputError("FrameSequence: no frames");
    if (shape.empty() || shape.size() > 2)
        throw InputError("FrameSequence: shape must be {d} or {H, W}");
    if (!(lo < hi)) throw InputError("FrameSequence: empty value range");
    const std::size_t n = frame_size();
    if (n == 0) throw InputError("FrameSequence: zero-sized frames");
    for (const auto& f : frames) {
        if (f.size() != n) throw InputError("FrameSequence: ragged frame sizes");
        for (double v : f) {
            if (v < lo || v > hi) throw InputError("FrameSequence: value out of range");
        }
    }
}

FrameSequence make_blank_video(const FrameSequence& tmpl) {
    if (tmpl.frames.empty()) throw InputError("make_blank_video: empty template");
    FrameSequence out;
    out.shape = tmpl.shape;
    out.lo = tmpl.lo;
    out.hi = tmpl.hi;
    out.frames.assign(tmpl.frame_count(),
                      std::vector<double>(tmpl.frame_size(), tmpl.white()));
    return out;
}

void write_frames_bin(const std::filesystem::path& path,
                      const std::vector<FrameSequence>& videos) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InternalError("cannot write '" + path.string() + "'");
    put(out, kFramesMagic);
    put(out, kFramesVersion);
    put(out, static_cast<std::uint64_t>(videos.size()));
    for (const auto& v : videos) {
        put(out, static_cast<std::uint32_t>(v.frames.size()));
        put(out, static_cast<std::uint32_t>(v.shape.size()));
        for (std::size_t s : v.shape) put(out, static_cast<std::uint32_t>(s));
        put(out, v.lo);
        put(out, v.hi);
        for (const auto& f : v.frames)
            out.write(reinterpret_cast<const char*>(f.data()),
                      static_cast<std::streamsize>(f.size() * sizeof(double)));
    }
    if (!out) throw InternalError("write failed for '" + path.string() + "'");
}

std::vector<FrameSequence> read_frames_bin(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    if (get<std::uint32_t>(in, "magic") != kFramesMagic)
        throw InputError("'" + path.string() + "' is not a frames blob");
    const auto version = get<std::uint32_t>(in, "version");
    if (version != kFramesVersion)
        throw InputError("frames blob version " + std::to_string(version) + " unsupported");
    const auto count = get<std::uint64_t>(in, "video count");
    std::vector<FrameSequence> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        FrameSequence v;
        const auto nframes = get<std::uint32_t>(in, "frame count");
        const auto ndims = get<std::uint32_t>(in, "rank");
        for (std::uint32_t d = 0; d < ndims; ++d)
            v.shape.push_back(get<std::uint32_t>(in, "shape"));
        v.lo = get<double>(in, "lo");
        v.hi = get<double>(in, "hi");
        const std::size_t n = v.frame_size();
        v.frames.assign(nframes, std::vector<double>(n));
        for (auto& f : v.frames) {
            in.read(reinterpret_cast<char*>(f.data()),
                    static_cast<std::streamsize>(n * sizeof(double)));
            if (!in) throw InputError("frames blob: truncated frame data");
        }
        v.validate();
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace procau
