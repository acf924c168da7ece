#include "moquad/quadruple.hpp"

#include <unordered_set>

namespace moquad {

std::vector<const Clip*> QuadBatch::flatten() const {
    std::vector<const Clip*> clips;
    clips.reserve(quads.size() * member_count());
    for (const auto& q : quads) {
        clips.push_back(&q.anchor);
        clips.push_back(&q.pos);
        if (q.intra_neg) clips.push_back(&*q.intra_neg);
        if (q.ad_intra_neg) clips.push_back(&*q.ad_intra_neg);
    }
    return clips;
}

Quadruple build_quadruple(const VideoRecord& video, const DonorPool& donors,
                          const QuadConfig& cfg, Rng& rng) {
    if (cfg.dilation_candidates.empty())
        throw ConfigError("quadruple: dilation candidate set is empty");
    if (cfg.enable_ad_intra_neg && !cfg.enable_intra_neg)
        throw ConfigError("quadruple: AD-Intra-Neg requires Intra-Neg enabled");

    Quadruple quad;
    quad.meta.motion_op = cfg.motion_op;

    // Anchor: plain clip at a dilation drawn from the candidates.
    const std::uint32_t n =
        cfg.dilation_candidates[rng.uniform_below(cfg.dilation_candidates.size())];
    const ClipSpec anchor_spec = sample_clip_spec(rng, video.T, cfg.clip_length, n);
    quad.anchor = extract_clip(video, anchor_spec);
    quad.meta.anchor_dilation = n;

    // Positive: independent window at the anchor's dilation, appearance
    // disturbed when AD-Pos is on.
    const ClipSpec pos_spec = sample_clip_spec(rng, video.T, cfg.clip_length, n);
    quad.pos = extract_clip(video, pos_spec);
    quad.meta.pos_dilation = n;
    if (cfg.enable_ad_pos) {
        const NoiseImage noise = build_noise_image(video, donors, cfg.rad, rng);
        const double lambda = rng.uniform(cfg.rad.lambda_min, cfg.rad.lambda_max);
        quad.pos = apply_appearance_disturb(quad.pos, noise, lambda);
        quad.meta.pos_lambda = lambda;
        quad.meta.pos_donors = noise.donor_ids;
    }

    if (cfg.enable_intra_neg) {
        Clip neg = make_motion_disturbed_clip(video, anchor_spec, cfg.motion_op,
                                              cfg.dilation_candidates, rng);
        quad.meta.intra_dilation = neg.spec.dilation;
        quad.intra_neg = std::move(neg);
    }

    if (cfg.enable_ad_intra_neg) {
        Clip neg = make_motion_disturbed_clip(video, anchor_spec, cfg.motion_op,
                                              cfg.dilation_candidates, rng);
        quad.meta.ad_intra_dilation = neg.spec.dilation;
        const NoiseImage noise = build_noise_image(video, donors, cfg.rad, rng);
        const double lambda = rng.uniform(cfg.rad.lambda_min, cfg.rad.lambda_max);
        quad.ad_intra_neg = apply_appearance_disturb(neg, noise, lambda);
        quad.meta.ad_intra_lambda = lambda;
        quad.meta.ad_intra_donors = noise.donor_ids;
    }

    return quad;
}

QuadBatch build_batch(std::span<const VideoRecord* const> videos,
                      const DonorPool& donors, const QuadConfig& cfg, Rng& rng) {
    if (videos.empty()) throw InputError("build_batch: empty video list");

    std::unordered_set<std::int64_t> ids;
    for (const VideoRecord* v : videos) {
        if (!ids.insert(v->id).second)
            throw InputError("build_batch: duplicate video id " + std::to_string(v->id));
    }

    const std::uint64_t base = rng.next_u64();
    QuadBatch batch;
    batch.quads.reserve(videos.size());
    for (const VideoRecord* v : videos) {
        Rng vid_rng(mix_seed(base, static_cast<std::uint64_t>(v->id)));
        batch.quads.push_back(build_quadruple(*v, donors, cfg, vid_rng));
    }
    return batch;
}

}  // namespace moquad
