#include "procau/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace procau::perturb {

const char* to_string(Kind k) {
    switch (k) {
        case Kind::Shuffle: return "shuffle";
        case Kind::Crop: return "crop";
        case Kind::Replace: return "replace";
    }
    throw InternalError("to_string: bad perturb kind");
}

Kind kind_from_string(const std::string& s) {
    if (s == "shuffle") return Kind::Shuffle;
    if (s == "crop") return Kind::Crop;
    if (s == "replace") return Kind::Replace;
    throw InputError("unknown perturbation kind: '" + s + "'");
}

void Spec::validate() const {
    if (!(ratio > 0.0 && ratio <= 1.0))
        throw InputError("perturb ratio must be in (0, 1]");
}

namespace {

Rng rng_for(const Spec& spec, std::uint64_t step) {
    return Rng(Rng::mix(spec.seed, step));
}

std::size_t count_from_ratio(double ratio, std::size_t n) {
    return static_cast<std::size_t>(
        std::ceil(ratio * static_cast<double>(n)) + 0.0);
}

double fill_value(const FrameSequence& v, CropFill fill) {
    switch (fill) {
        case CropFill::White: return v.hi;
        case CropFill::Low: return v.lo;
        case CropFill::Zero:
            if (v.lo > 0.0 || v.hi < 0.0)
                throw InputError("crop fill 0 lies outside the value range");
            return 0.0;
    }
    throw InternalError("bad crop fill");
}

} // namespace

FrameSequence shuffle_frames(const FrameSequence& v, const Spec& spec,
                             std::uint64_t step, Note* note) {
    spec.validate();
    if (spec.kind != Kind::Shuffle) throw InputError("shuffle_frames: spec.kind mismatch");
    v.validate();

    const std::size_t F = v.frame_count();
    const std::size_t k = count_from_ratio(spec.ratio, F);
    if (k < 2) {
        if (note) *note = Note{.identity = true, .touched = 0};
        return v;
    }

    Rng rng = rng_for(spec, step);
    std::vector<std::size_t> positions = rng.sample_indices(F, k);
    std::sort(positions.begin(), positions.end());

    // Uniform non-identity permutation of the selected slots; an identity
    // draw carries no signal for the regularizer, so it is resampled.
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do {
        rng.shuffle(perm);
    } while (std::is_sorted(perm.begin(), perm.end()));

    FrameSequence out = v;
    for (std::size_t i = 0; i < k; ++i) out.frames[positions[i]] = v.frames[positions[perm[i]]];
    if (note) *note = Note{.identity = false, .touched = k};
    return out;
}

FrameSequence crop_mask(const FrameSequence& v, const Spec& spec,
                        std::uint64_t step, Note* note) {
    spec.validate();
    if (spec.kind != Kind::Crop) throw InputError("crop_mask: spec.kind mismatch");
    v.validate();
    if (!v.is_2d()) throw InputError("crop_mask: frames must be 2-D");

    const std::size_t H = v.shape[0];
    const std::size_t W = v.shape[1];
    const double target = spec.ratio * static_cast<double>(H * W);
    if (std::llround(target) == 0) {
        if (note) *note = Note{.identity = true, .touched = 0};
        return v;
    }

    // Rectangle with pixel count closest to the target; ties prefer the
    // squarest, then the shortest.
    std::size_t best_h = 1, best_w = 1;
    double best_err = std::abs(1.0 - target);
    auto better = [&](std::size_t a, std::size_t b) {
        const double err = std::abs(static_cast<double>(a * b) - target);
        if (err < best_err) return true;
        if (err > best_err) return false;
        const auto squareness = [](std::size_t x, std::size_t y) {
            return x > y ? x - y : y - x;
        };
        const auto cur = squareness(best_h, best_w);
        const auto cand = squareness(a, b);
        if (cand != cur) return cand < cur;
        return a < best_h;
    };
    for (std::size_t a = 1; a <= H; ++a) {
        for (std::size_t b = 1; b <= W; ++b) {
            if (better(a, b)) {
                best_h = a;
                best_w = b;
                best_err = std::abs(static_cast<double>(a * b) - target);
            }
        }
    }

    const double fill = fill_value(v, spec.crop_fill);
    Rng rng = rng_for(spec, step);
    FrameSequence out = v;
    for (auto& frame : out.frames) {
        const std::size_t top = static_cast<std::size_t>(rng.below(H - best_h + 1));
        const std::size_t left = static_cast<std::size_t>(rng.below(W - best_w + 1));
        for (std::size_t r = top; r < top + best_h; ++r)
            for (std::size_t c = left; c < left + best_w; ++c) frame[r * W + c] = fill;
    }
    if (note) *note = Note{.identity = false, .touched = best_h * best_w};
    return out;
}

FrameSequence replace_frames(const FrameSequence& v, const Spec& spec,
                             std::uint64_t step, Note* note) {
    spec.validate();
    if (spec.kind != Kind::Replace) throw InputError("replace_frames: spec.kind mismatch");
    v.validate();

    const std::size_t F = v.frame_count();
    const std::size_t k = count_from_ratio(spec.ratio, F);
    Rng rng = rng_for(spec, step);
    const std::vector<std::size_t> positions = rng.sample_indices(F, k);

    FrameSequence out = v;
    const std::vector<double> white(v.frame_size(), v.white());
    for (std::size_t p : positions) out.frames[p] = white;
    if (note) *note = Note{.identity = k == 0, .touched = k};
    return out;
}

FrameSequence apply(const FrameSequence& v, const Spec& spec,
                    std::uint64_t step, Note* note) {
    switch (spec.kind) {
        case Kind::Shuffle: return shuffle_frames(v, spec, step, note);
        case Kind::Crop: return crop_mask(v, spec, step, note);
        case Kind::Replace: return replace_frames(v, spec, step, note);
    }
    throw InputError("apply: unknown perturbation kind");
}

} // namespace procau::perturb
