#include "moquad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace moquad {

namespace {

constexpr std::uint64_t kStreamOrder = 0x05DE5ULL;
constexpr std::uint64_t kStreamBatch = 0xBA7C4ULL;
constexpr std::uint64_t kStreamDiag = 0xD1A6ULL;

// Two distinct dilations for the warm-up's clip pair.
std::pair<std::uint32_t, std::uint32_t> draw_dilation_pair(
    const std::vector<std::uint32_t>& candidates, Rng& rng) {
    const std::size_t a = rng.uniform_below(candidates.size());
    std::size_t b = rng.uniform_below(candidates.size() - 1);
    if (b >= a) ++b;
    return {candidates[a], candidates[b]};
}

}  // namespace

std::uint32_t warmup_epochs(const ScheduleConfig& cfg) {
    return static_cast<std::uint32_t>(
        std::floor(cfg.warmup_ratio * static_cast<double>(cfg.epochs)));
}

RankDiagnostics compute_rank_diagnostics(const LossReport& report, std::size_t batch,
                                         std::size_t members) {
    if (report.similarities.size() != batch)
        throw UsageError("rank diagnostics: report does not match the batch size");

    const std::size_t intra_count = members - 2;
    RankDiagnostics diag;
    double pos_rank_sum = 0.0;
    double intra_rank_sum = 0.0;

    for (std::size_t i = 0; i < batch; ++i) {
        const AnchorSimilarities& sims = report.similarities[i];
        if (sims.intra.size() != intra_count ||
            sims.inter.size() != (batch - 1) * members)
            throw UsageError("rank diagnostics: similarity lists do not match the shape");

        // Candidate order: positive, intra negs, inter negs. stable_sort
        // keeps that order among ties.
        std::vector<double> values;
        values.reserve(1 + intra_count + sims.inter.size());
        values.push_back(sims.positive);
        values.insert(values.end(), sims.intra.begin(), sims.intra.end());
        values.insert(values.end(), sims.inter.begin(), sims.inter.end());

        std::vector<std::size_t> order(values.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&values](std::size_t a, std::size_t b) {
                             return values[a] > values[b];
                         });

        std::vector<std::size_t> rank(values.size());
        for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;

        pos_rank_sum += static_cast<double>(rank[0]);
        for (std::size_t m = 0; m < intra_count; ++m)
            intra_rank_sum += static_cast<double>(rank[1 + m]);
    }

    diag.mean_rank_ad_pos = pos_rank_sum / static_cast<double>(batch);
    if (intra_count > 0)
        diag.mean_rank_intra_negs =
            intra_rank_sum / static_cast<double>(batch * intra_count);
    return diag;
}

TrainResult run_pretraining(const std::vector<VideoRecord>& train_videos,
                            const EncoderConfig& encoder_cfg,
                            const TrainerOptions& optim,
                            const ScheduleConfig& schedule, std::uint64_t seed,
                            const std::vector<VideoRecord>* holdout) {
    if (train_videos.empty()) throw InputError("pretraining: empty training set");
    if (schedule.batch_size == 0) throw ConfigError("pretraining: batch_size must be positive");
    if (schedule.batch_size > train_videos.size())
        throw ConfigError("pretraining: batch_size exceeds the training set");
    if (schedule.epochs == 0) throw ConfigError("pretraining: epochs must be positive");
    if (!(schedule.warmup_ratio >= 0.0 && schedule.warmup_ratio < 1.0))
        throw ConfigError("pretraining: warmup_ratio must lie in [0, 1)");
    if (schedule.diag_on_holdout && (holdout == nullptr || holdout->empty()))
        throw ConfigError("pretraining: diag_on_holdout needs a non-empty holdout set");

    const std::uint32_t warm = warmup_epochs(schedule);
    if (warm > 0 && schedule.quad.dilation_candidates.size() < 2)
        throw ConfigError("pretraining: the warm-up task needs two distinct dilations");

    const std::uint32_t spe =
        schedule.steps_per_epoch > 0
            ? schedule.steps_per_epoch
            : static_cast<std::uint32_t>(train_videos.size() / schedule.batch_size);
    if (spe == 0) throw ConfigError("pretraining: zero steps per epoch");
    if (static_cast<std::size_t>(spe) * schedule.batch_size > train_videos.size())
        throw ConfigError("pretraining: steps_per_epoch * batch_size exceeds the training set");

    TrainResult result;
    result.params = init_params(encoder_cfg);

    OptimConfig opt;
    opt.base_lr = optim.base_lr;
    opt.momentum = optim.momentum;
    opt.total_steps = static_cast<std::uint64_t>(schedule.epochs) * spe;

    DonorPool donors;
    donors.reserve(train_videos.size());
    for (const auto& v : train_videos) donors.push_back(&v);

    std::vector<std::size_t> indices(train_videos.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});

    const std::uint32_t L = schedule.quad.clip_length;
    std::uint64_t global_step = 0;

    for (std::uint32_t e = 0; e < schedule.epochs; ++e) {
        const bool appearance_stage = e < warm;

        Rng order_rng = Rng::derive(seed, {kStreamOrder, e});
        order_rng.shuffle(indices);

        double loss_sum = 0.0;
        double pos_rank_sum = 0.0, intra_rank_sum = 0.0;
        std::size_t rank_samples = 0;
        const double epoch_lr = cosine_lr(opt, global_step);

        for (std::uint32_t s = 0; s < spe; ++s, ++global_step) {
            std::vector<const VideoRecord*> batch_videos(schedule.batch_size);
            for (std::uint32_t bi = 0; bi < schedule.batch_size; ++bi)
                batch_videos[bi] = &train_videos[indices[s * schedule.batch_size + bi]];

            Rng step_rng = Rng::derive(seed, {kStreamBatch, e, s});

            ForwardCache cache;
            LossReport report;
            std::size_t members = 0;

            if (appearance_stage) {
                // Two clips per video at distinct dilations n != m.
                members = 2;
                std::vector<Clip> clips;
                clips.reserve(2 * batch_videos.size());
                const std::uint64_t base = step_rng.next_u64();
                for (const VideoRecord* v : batch_videos) {
                    Rng vid_rng(mix_seed(base, static_cast<std::uint64_t>(v->id)));
                    const auto [n, m] =
                        draw_dilation_pair(schedule.quad.dilation_candidates, vid_rng);
                    clips.push_back(
                        extract_clip(*v, sample_clip_spec(vid_rng, v->T, L, n)));
                    clips.push_back(
                        extract_clip(*v, sample_clip_spec(vid_rng, v->T, L, m)));
                }
                std::vector<const Clip*> ptrs;
                ptrs.reserve(clips.size());
                for (const auto& c : clips) ptrs.push_back(&c);
                const EmbeddingBatch emb =
                    embed(result.params, ptrs, members, &cache);
                report = appearance_loss(emb, schedule.loss.tau);
            } else {
                const QuadBatch batch =
                    build_batch(batch_videos, donors, schedule.quad, step_rng);
                members = batch.member_count();
                const auto ptrs = batch.flatten();
                const EmbeddingBatch emb = embed(result.params, ptrs, members, &cache);
                report = schedule.loss.mining_enabled
                             ? moquad_loss_mined(emb, schedule.loss)
                             : moquad_loss(emb, schedule.loss);

                if (!schedule.diag_on_holdout) {
                    const RankDiagnostics d =
                        compute_rank_diagnostics(report, batch_videos.size(), members);
                    if (d.mean_rank_ad_pos) {
                        pos_rank_sum += *d.mean_rank_ad_pos;
                        if (d.mean_rank_intra_negs)
                            intra_rank_sum += *d.mean_rank_intra_negs;
                        ++rank_samples;
                    }
                }
            }

            if (!std::isfinite(report.loss))
                throw NumericError("pretraining: non-finite loss at epoch " +
                                   std::to_string(e) + " step " + std::to_string(s) +
                                   " (stage " + (appearance_stage ? "appearance" : "moquad") +
                                   ", lr " + std::to_string(cosine_lr(opt, global_step)) + ")");

            loss_sum += report.loss / static_cast<double>(batch_videos.size());

            const Gradients grads = backward(result.params, cache, report.grads);
            step(result.params, grads, opt, global_step);
        }

        EpochMetrics metrics;
        metrics.epoch = e;
        metrics.stage = appearance_stage ? "appearance" : "moquad";
        metrics.mean_loss = loss_sum / spe;
        metrics.lr = epoch_lr;

        if (!appearance_stage) {
            if (schedule.diag_on_holdout) {
                // One diagnostic batch drawn from the holdout pool.
                std::vector<const VideoRecord*> pool;
                pool.reserve(holdout->size());
                for (const auto& v : *holdout) pool.push_back(&v);
                const std::size_t n =
                    std::min<std::size_t>(pool.size(), schedule.batch_size);
                Rng diag_rng = Rng::derive(seed, {kStreamDiag, e});
                diag_rng.shuffle(pool);
                pool.resize(n);
                const QuadBatch batch = build_batch(pool, donors, schedule.quad, diag_rng);
                const auto ptrs = batch.flatten();
                const EmbeddingBatch emb =
                    embed(result.params, ptrs, batch.member_count());
                const LossReport report = schedule.loss.mining_enabled
                                              ? moquad_loss_mined(emb, schedule.loss)
                                              : moquad_loss(emb, schedule.loss);
                metrics.ranks =
                    compute_rank_diagnostics(report, n, batch.member_count());
            } else if (rank_samples > 0) {
                metrics.ranks.mean_rank_ad_pos = pos_rank_sum / rank_samples;
                if (schedule.quad.enable_intra_neg)
                    metrics.ranks.mean_rank_intra_negs = intra_rank_sum / rank_samples;
            }
        }
        result.log.push_back(std::move(metrics));
    }
    return result;
}

}  // namespace moquad
