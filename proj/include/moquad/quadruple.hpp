#pragma once

#include <optional>
#include <span>
#include <vector>

#include "moquad/cliputil.hpp"
#include "moquad/disturb.hpp"

namespace moquad {

struct QuadConfig {
    std::uint32_t clip_length = 8;
    std::vector<std::uint32_t> dilation_candidates = {1, 2, 4};
    RadConfig rad;
    MotionDisturbKind motion_op = MotionDisturbKind::speed;
    // Component ablations (the quadruple degrades to a triple or a pair).
    bool enable_ad_pos = true;
    bool enable_intra_neg = true;
    bool enable_ad_intra_neg = true;
};

struct QuadrupleMeta {
    std::uint32_t anchor_dilation = 1;
    std::uint32_t pos_dilation = 1;
    std::optional<std::uint32_t> intra_dilation;
    std::optional<std::uint32_t> ad_intra_dilation;
    double pos_lambda = 0.0;       // 0 when AD-Pos is disabled
    double ad_intra_lambda = 0.0;
    std::vector<std::pair<std::int64_t, std::uint32_t>> pos_donors;
    std::vector<std::pair<std::int64_t, std::uint32_t>> ad_intra_donors;
    MotionDisturbKind motion_op = MotionDisturbKind::speed;
};

// The per-video sample set: anchor + positive always; the two intra-video
// negatives only when enabled.
struct Quadruple {
    Clip anchor;
    Clip pos;  // appearance-disturbed when enable_ad_pos, plain otherwise
    std::optional<Clip> intra_neg;
    std::optional<Clip> ad_intra_neg;
    QuadrupleMeta meta;

    // Clips per video (2, 3 or 4).
    std::size_t member_count() const {
        return 2 + (intra_neg ? 1 : 0) + (ad_intra_neg ? 1 : 0);
    }
};

struct QuadBatch {
    std::vector<Quadruple> quads;

    std::size_t size() const { return quads.size(); }
    std::size_t member_count() const {
        return quads.empty() ? 0 : quads.front().member_count();
    }
    // Clips flattened video-major in member order
    // [anchor, pos, intra_neg?, ad_intra_neg?].
    std::vector<const Clip*> flatten() const;
};

// Draw order (documented so seeded runs are reproducible): anchor dilation,
// anchor window, positive window, [AD-Pos noise + lambda], [Intra-Neg
// draws], [AD-Intra-Neg draws + noise + lambda].
Quadruple build_quadruple(const VideoRecord& video, const DonorPool& donors,
                          const QuadConfig& cfg, Rng& rng);

// One quadruple per video, each from an rng derived from (rng draw, id), so
// per-video construction is order-independent.
QuadBatch build_batch(std::span<const VideoRecord* const> videos,
                      const DonorPool& donors, const QuadConfig& cfg, Rng& rng);

}  // namespace moquad
