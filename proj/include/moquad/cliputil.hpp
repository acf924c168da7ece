#pragma once

#include <cstdint>
#include <vector>

#include "moquad/rng.hpp"
#include "moquad/synthdata.hpp"

namespace moquad {

// A clip sampling window: frames start, start+dilation, ..., L of them.
// Dilation is the playback-speed control.
struct ClipSpec {
    std::uint32_t start = 0;
    std::uint32_t length = 8;
    std::uint32_t dilation = 1;

    // Index of the last source frame touched.
    std::uint64_t last_frame() const {
        return static_cast<std::uint64_t>(start) +
               static_cast<std::uint64_t>(length - 1) * dilation;
    }
};

// Fixed-length real-valued frame stack in [0, 1], layout (L, H, W, C).
struct Clip {
    std::vector<double> pixels;
    std::uint32_t L = 0, H = 0, W = 0, C = 0;
    std::int64_t source_id = 0;
    ClipSpec spec;

    std::size_t frame_size() const {
        return static_cast<std::size_t>(H) * W * C;
    }
    double* frame(std::uint32_t t) { return pixels.data() + t * frame_size(); }
    const double* frame(std::uint32_t t) const {
        return pixels.data() + t * frame_size();
    }
};

// pixels[i] = video.frames[start + i*dilation] / 255.
Clip extract_clip(const VideoRecord& video, const ClipSpec& spec);

// Uniform start over the feasible window [0, T-1-(L-1)*dilation].
ClipSpec sample_clip_spec(Rng& rng, std::uint32_t video_T, std::uint32_t length,
                          std::uint32_t dilation);

// Exact box-filter resampling of an (H, W, C) image to (out_h, out_w, C);
// each output pixel averages the source area it covers, with fractional
// edge weights when the ratio is not integral.
void area_resample(const double* src, std::uint32_t H, std::uint32_t W,
                   std::uint32_t C, double* dst, std::uint32_t out_h,
                   std::uint32_t out_w);

// Video frame t as doubles in [0, 1].
std::vector<double> frame_as_double(const VideoRecord& video, std::uint32_t t);

}  // namespace moquad
