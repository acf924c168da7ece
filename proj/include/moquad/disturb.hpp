#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "moquad/cliputil.hpp"
#include "moquad/rng.hpp"
#include "moquad/synthdata.hpp"

namespace moquad {

enum class DonorMode { inter, intra, be_baseline };

const char* donor_mode_name(DonorMode m);
DonorMode donor_mode_from_name(const std::string& name);

struct RadConfig {
    std::uint32_t k = 5;            // window grid size per side
    double lambda_min = 0.1;        // blend weight range
    double lambda_max = 0.5;
    DonorMode donor_mode = DonorMode::inter;
};

// The static noise image blended into every frame of a clip. donor_ids
// records (video id, frame index) per window, row-major window order.
struct NoiseImage {
    std::vector<double> pixels;  // (H, W, C) in [0, 1]
    std::uint32_t H = 0, W = 0, C = 0;
    std::vector<std::pair<std::int64_t, std::uint32_t>> donor_ids;
};

enum class MotionDisturbKind { speed, reverse, shuffle };

const char* motion_kind_name(MotionDisturbKind k);
MotionDisturbKind motion_kind_from_name(const std::string& name);

using DonorPool = std::vector<const VideoRecord*>;

// Window extent along one axis: k equal slots of size dim/k, with the last
// window absorbing the remainder.
std::pair<std::uint32_t, std::uint32_t> rad_window_span(std::uint32_t dim,
                                                        std::uint32_t k,
                                                        std::uint32_t index);

// inter: pick one donor video (never the target), fill each of the k*k
// windows with a randomly chosen donor frame area-averaged to window size.
// intra: same tiling, frames drawn from the target video itself.
// be_baseline: no tiling; one whole frame of the target video.
NoiseImage build_noise_image(const VideoRecord& target, const DonorPool& donors,
                             const RadConfig& cfg, Rng& rng);

// out_frame[t] = (1 - lambda) * clip_frame[t] + lambda * noise.
Clip apply_appearance_disturb(const Clip& clip, const NoiseImage& noise,
                              double lambda);

// speed: fresh window at a dilation != anchor's, drawn from the candidates.
// reverse: fresh anchor-dilation window, frame order reversed.
// shuffle: fresh anchor-dilation window, frames permuted by a seeded
// Fisher-Yates shuffle; the identity permutation is rejected and resampled.
Clip make_motion_disturbed_clip(const VideoRecord& video, const ClipSpec& anchor_spec,
                                MotionDisturbKind kind,
                                const std::vector<std::uint32_t>& dilation_candidates,
                                Rng& rng);

}  // namespace moquad
