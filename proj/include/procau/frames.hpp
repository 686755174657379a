#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "procau/errors.hpp"

namespace procau {

// A video as an ordered list of numeric frames. Frames are either 2-D
// (shape = {H, W}, stored row-major) or flat feature vectors (shape = {d}).
struct FrameSequence {
    std::vector<std::vector<double>> frames;
    std::vector<std::size_t> shape; // {H, W} or {d}
    double lo = 0.0;
    double hi = 1.0;

    std::size_t frame_count() const { return frames.size(); }
    std::size_t frame_size() const;
    bool is_2d() const { return shape.size() == 2; }
    double white() const { return hi; }

    void validate() const;

    bool operator==(const FrameSequence& o) const = default;
};

// All-white copy with the template's frame count, shape and range.
FrameSequence make_blank_video(const FrameSequence& tmpl);

// Binary sidecar holding a list of frame sequences (the visual halves of a
// dataset). Versioned little blob: doubles are stored raw.
void write_frames_bin(const std::filesystem::path& path,
                      const std::vector<FrameSequence>& videos);
std::vector<FrameSequence> read_frames_bin(const std::filesystem::path& path);

} // namespace procau
