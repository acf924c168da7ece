#include "moquad/disturb.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "moquad/kernels.hpp"

namespace moquad {

const char* donor_mode_name(DonorMode m) {
    switch (m) {
        case DonorMode::inter: return "rad_inter";
        case DonorMode::intra: return "rad_intra";
        default: return "be";
    }
}

DonorMode donor_mode_from_name(const std::string& name) {
    if (name == "rad_inter") return DonorMode::inter;
    if (name == "rad_intra") return DonorMode::intra;
    if (name == "be") return DonorMode::be_baseline;
    throw ConfigError("unknown appearance disturb mode: " + name);
}

const char* motion_kind_name(MotionDisturbKind k) {
    switch (k) {
        case MotionDisturbKind::speed: return "speed";
        case MotionDisturbKind::reverse: return "reverse";
        default: return "shuffle";
    }
}

MotionDisturbKind motion_kind_from_name(const std::string& name) {
    if (name == "speed") return MotionDisturbKind::speed;
    if (name == "reverse") return MotionDisturbKind::reverse;
    if (name == "shuffle") return MotionDisturbKind::shuffle;
    throw ConfigError("unknown motion disturb kind: " + name);
}

std::pair<std::uint32_t, std::uint32_t> rad_window_span(std::uint32_t dim,
                                                        std::uint32_t k,
                                                        std::uint32_t index) {
    const std::uint32_t base = dim / k;
    const std::uint32_t begin = index * base;
    const std::uint32_t end = (index + 1 == k) ? dim : begin + base;
    return {begin, end};
}

NoiseImage build_noise_image(const VideoRecord& target, const DonorPool& donors,
                             const RadConfig& cfg, Rng& rng) {
    if (cfg.k < 1) throw ConfigError("rad: k must be >= 1");
    if (cfg.k > target.H || cfg.k > target.W)
        throw ConfigError("rad: k exceeds the frame size (windows would be empty)");

    NoiseImage noise;
    noise.H = target.H;
    noise.W = target.W;
    noise.C = target.C;
    noise.pixels.resize(static_cast<std::size_t>(target.H) * target.W * target.C);

    if (cfg.donor_mode == DonorMode::be_baseline) {
        const std::uint32_t t = static_cast<std::uint32_t>(rng.uniform_below(target.T));
        noise.pixels = frame_as_double(target, t);
        noise.donor_ids.emplace_back(target.id, t);
        return noise;
    }

    const VideoRecord* donor = nullptr;
    if (cfg.donor_mode == DonorMode::intra) {
        donor = &target;
    } else {
        DonorPool candidates;
        for (const VideoRecord* v : donors) {
            if (v->id != target.id) candidates.push_back(v);
        }
        if (candidates.empty())
            throw ConfigError("rad: empty donor pool (inter mode needs a video other "
                              "than the target)");
        donor = candidates[rng.uniform_below(candidates.size())];
    }
    if (donor->C != target.C)
        throw ShapeError("rad: donor channel count differs from target");

    for (std::uint32_t wy = 0; wy < cfg.k; ++wy) {
        const auto [y0, y1] = rad_window_span(target.H, cfg.k, wy);
        for (std::uint32_t wx = 0; wx < cfg.k; ++wx) {
            const auto [x0, x1] = rad_window_span(target.W, cfg.k, wx);
            const std::uint32_t t = static_cast<std::uint32_t>(rng.uniform_below(donor->T));
            noise.donor_ids.emplace_back(donor->id, t);

            const std::vector<double> frame = frame_as_double(*donor, t);
            const std::uint32_t wh = y1 - y0;
            const std::uint32_t ww = x1 - x0;
            std::vector<double> window(static_cast<std::size_t>(wh) * ww * target.C);
            area_resample(frame.data(), donor->H, donor->W, donor->C, window.data(),
                          wh, ww);
            for (std::uint32_t y = 0; y < wh; ++y) {
                for (std::uint32_t x = 0; x < ww; ++x) {
                    for (std::uint32_t c = 0; c < target.C; ++c) {
                        noise.pixels[((static_cast<std::size_t>(y0 + y) * target.W) +
                                      (x0 + x)) * target.C + c] =
                            window[(static_cast<std::size_t>(y) * ww + x) * target.C + c];
                    }
                }
            }
        }
    }
    return noise;
}

Clip apply_appearance_disturb(const Clip& clip, const NoiseImage& noise,
                              double lambda) {
    if (clip.H != noise.H || clip.W != noise.W || clip.C != noise.C)
        throw ShapeError("appearance disturb: clip and noise dims differ");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw InputError("appearance disturb: lambda must lie in [0, 1]");

    Clip out = clip;
    const std::size_t fsz = clip.frame_size();
    for (std::uint32_t t = 0; t < clip.L; ++t) {
        kernels::mix(1.0 - lambda, clip.frame(t), lambda, noise.pixels.data(),
                     out.frame(t), fsz);
    }
    return out;
}

Clip make_motion_disturbed_clip(const VideoRecord& video, const ClipSpec& anchor_spec,
                                MotionDisturbKind kind,
                                const std::vector<std::uint32_t>& dilation_candidates,
                                Rng& rng) {
    const std::uint32_t L = anchor_spec.length;

    if (kind == MotionDisturbKind::speed) {
        std::vector<std::uint32_t> feasible;
        for (std::uint32_t m : dilation_candidates) {
            if (m == anchor_spec.dilation) continue;
            if (static_cast<std::uint64_t>(L - 1) * m + 1 <= video.T)
                feasible.push_back(m);
        }
        if (feasible.empty())
            throw ConfigError("speed disturb: no feasible alternative dilation");
        const std::uint32_t m = feasible[rng.uniform_below(feasible.size())];
        const ClipSpec spec = sample_clip_spec(rng, video.T, L, m);
        return extract_clip(video, spec);
    }

    const ClipSpec spec = sample_clip_spec(rng, video.T, L, anchor_spec.dilation);
    Clip clip = extract_clip(video, spec);
    const std::size_t fsz = clip.frame_size();

    if (kind == MotionDisturbKind::reverse) {
        Clip out = clip;
        for (std::uint32_t t = 0; t < L; ++t) {
            std::copy_n(clip.frame(L - 1 - t), fsz, out.frame(t));
        }
        return out;
    }

    // shuffle
    std::vector<std::uint32_t> perm(L);
    bool identity = true;
    do {
        std::iota(perm.begin(), perm.end(), 0u);
        rng.shuffle(perm);
        identity = true;
        for (std::uint32_t t = 0; t < L; ++t) {
            if (perm[t] != t) {
                identity = false;
                break;
            }
        }
    } while (identity);

    Clip out = clip;
    for (std::uint32_t t = 0; t < L; ++t) {
        std::copy_n(clip.frame(perm[t]), fsz, out.frame(t));
    }
    return out;
}

}  // namespace moquad
