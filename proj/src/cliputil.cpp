#include "moquad/cliputil.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace moquad {

namespace {

void validate_spec(const ClipSpec& spec, std::uint32_t T) {
    if (spec.length < 2) throw RangeError("clip spec: length must be >= 2");
    if (spec.dilation < 1) throw RangeError("clip spec: dilation must be >= 1");
    if (spec.last_frame() >= T)
        throw RangeError("clip spec: frame index " + std::to_string(spec.last_frame()) +
                         " out of range for a " + std::to_string(T) + "-frame video");
}

}  // namespace

Clip extract_clip(const VideoRecord& video, const ClipSpec& spec) {
    validate_spec(spec, video.T);

    Clip clip;
    clip.L = spec.length;
    clip.H = video.H;
    clip.W = video.W;
    clip.C = video.C;
    clip.source_id = video.id;
    clip.spec = spec;

    const std::size_t fsz = clip.frame_size();
    clip.pixels.resize(static_cast<std::size_t>(spec.length) * fsz);
    for (std::uint32_t i = 0; i < spec.length; ++i) {
        const std::size_t src = static_cast<std::size_t>(spec.start + i * spec.dilation) * fsz;
        double* dst = clip.frame(i);
        for (std::size_t p = 0; p < fsz; ++p) dst[p] = video.frames[src + p] / 255.0;
    }
    return clip;
}

ClipSpec sample_clip_spec(Rng& rng, std::uint32_t video_T, std::uint32_t length,
                          std::uint32_t dilation) {
    if (length < 2) throw RangeError("sample_clip_spec: length must be >= 2");
    if (dilation < 1) throw RangeError("sample_clip_spec: dilation must be >= 1");
    const std::uint64_t span = static_cast<std::uint64_t>(length - 1) * dilation;
    if (span + 1 > video_T)
        throw RangeError("sample_clip_spec: no feasible window (need " +
                         std::to_string(span + 1) + " frames, video has " +
                         std::to_string(video_T) + ")");
    const std::uint32_t max_start = static_cast<std::uint32_t>(video_T - 1 - span);
    ClipSpec spec;
    spec.start = static_cast<std::uint32_t>(rng.uniform_below(max_start + 1ULL));
    spec.length = length;
    spec.dilation = dilation;
    return spec;
}

void area_resample(const double* src, std::uint32_t H, std::uint32_t W,
                   std::uint32_t C, double* dst, std::uint32_t out_h,
                   std::uint32_t out_w) {
    if (H == 0 || W == 0 || out_h == 0 || out_w == 0)
        throw ShapeError("area_resample: zero dimension");

    const double sy = static_cast<double>(H) / out_h;
    const double sx = static_cast<double>(W) / out_w;

    for (std::uint32_t oy = 0; oy < out_h; ++oy) {
        const double y0 = oy * sy;
        const double y1 = (oy + 1) * sy;
        const std::uint32_t iy0 = static_cast<std::uint32_t>(y0);
        const std::uint32_t iy1 = std::min(H, static_cast<std::uint32_t>(std::ceil(y1)));
        for (std::uint32_t ox = 0; ox < out_w; ++ox) {
            const double x0 = ox * sx;
            const double x1 = (ox + 1) * sx;
            const std::uint32_t ix0 = static_cast<std::uint32_t>(x0);
            const std::uint32_t ix1 = std::min(W, static_cast<std::uint32_t>(std::ceil(x1)));
            for (std::uint32_t c = 0; c < C; ++c) {
                double acc = 0.0;
                for (std::uint32_t y = iy0; y < iy1; ++y) {
                    const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
                    for (std::uint32_t x = ix0; x < ix1; ++x) {
                        const double wx =
                            std::min<double>(x + 1, x1) - std::max<double>(x, x0);
                        acc += wy * wx * src[(static_cast<std::size_t>(y) * W + x) * C + c];
                    }
                }
                dst[(static_cast<std::size_t>(oy) * out_w + ox) * C + c] =
                    acc / ((y1 - y0) * (x1 - x0));
            }
        }
    }
}

std::vector<double> frame_as_double(const VideoRecord& video, std::uint32_t t) {
    if (t >= video.T) throw RangeError("frame_as_double: frame index out of range");
    const std::size_t fsz = static_cast<std::size_t>(video.H) * video.W * video.C;
    std::vector<double> out(fsz);
    const std::uint8_t* src = video.frames.data() + static_cast<std::size_t>(t) * fsz;
    for (std::size_t p = 0; p < fsz; ++p) out[p] = src[p] / 255.0;
    return out;
}

}  // namespace moquad
