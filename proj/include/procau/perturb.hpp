#pragma once

#include <cstdint>
#include <string>

#include "procau/frames.hpp"
#include "procau/rng.hpp"

namespace procau::perturb {

enum class Kind { Shuffle, Crop, Replace };

const char* to_string(Kind k);
Kind kind_from_string(const std::string& s);

enum class CropFill { White, Low, Zero };

// One perturbation operator, fixed for a whole training run. The ratio is
// the corrupted fraction: of frames for shuffle/replace, of pixels per
// frame for crop.
struct Spec {
    Kind kind = Kind::Shuffle;
    double ratio = 0.2;
    std::uint64_t seed = 0;
    CropFill crop_fill = CropFill::White;

    void validate() const;
};

// Side facts about one application, mostly for tests and logs.
struct Note {
    bool identity = false;   // nothing to perturb (k < 2, zero-area mask)
    std::size_t touched = 0; // frames (shuffle/replace) or pixels per frame (crop)
};

// Permutes k = ceil(ratio * F) randomly chosen frame positions with a
// uniformly random non-identity permutation; every other frame stays put
// and the frame multiset is preserved exactly. k < 2 degenerates to the
// identity (flagged in `note`).
FrameSequence shuffle_frames(const FrameSequence& v, const Spec& spec,
                             std::uint64_t step = 0, Note* note = nullptr);

// Masks one axis-aligned rectangle per frame whose pixel count is the
// closest realizable to ratio * H * W; position is uniform per frame.
// Requires 2-D frames. A mask that rounds to zero area degenerates to the
// identity (flagged).
FrameSequence crop_mask(const FrameSequence& v, const Spec& spec,
                        std::uint64_t step = 0, Note* note = nullptr);

// Replaces k = ceil(ratio * F) randomly chosen frames with all-white
// frames; the rest are untouched.
FrameSequence replace_frames(const FrameSequence& v, const Spec& spec,
                             std::uint64_t step = 0, Note* note = nullptr);

// Dispatch on spec.kind. Deterministic function of (v, spec.seed, step).
FrameSequence apply(const FrameSequence& v, const Spec& spec,
                    std::uint64_t step, Note* note = nullptr);

// Owns the step counter so that every optimization step draws fresh
// randomness from the same seed stream.
class Perturber {
public:
    explicit Perturber(Spec spec) : spec_(spec) { spec_.validate(); }

    FrameSequence next(const FrameSequence& v, Note* note = nullptr) {
        return apply(v, spec_, step_++, note);
    }

    const Spec& spec() const { return spec_; }
    std::uint64_t step() const { return step_; }

private:
    Spec spec_;
    std::uint64_t step_ = 0;
};

} // namespace procau::perturb
