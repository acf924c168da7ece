#pragma once

#include <optional>
#include <string>
#include <vector>

#include "moquad/encoder.hpp"
#include "moquad/quadruple.hpp"

namespace moquad {

struct ScheduleConfig {
    std::uint32_t epochs = 60;       // E
    double warmup_ratio = 0.2;       // p; warm-up epochs = floor(p * E)
    std::uint32_t batch_size = 16;   // B
    std::uint32_t steps_per_epoch = 0;  // 0 = floor(train size / B)
    LossConfig loss;
    QuadConfig quad;
    // Compute rank diagnostics on a held-out batch instead of the training
    // batches (off by default; the held-out pool must then be non-empty).
    bool diag_on_holdout = false;
};

// Number of warm-up (appearance-task) epochs: floor(p * E); Alg.-1 boundary
// "e < p * E".
std::uint32_t warmup_epochs(const ScheduleConfig& cfg);

struct RankDiagnostics {
    // Means over anchors of 1-based descending-similarity ranks among the
    // (members - 1) + members * (B - 1) candidates; ties broken by candidate
    // order (positive, intra negatives, inter negatives by flat index).
    std::optional<double> mean_rank_ad_pos;
    std::optional<double> mean_rank_intra_negs;  // absent when no intra negs
};

RankDiagnostics compute_rank_diagnostics(const LossReport& report, std::size_t batch,
                                         std::size_t members);

struct EpochMetrics {
    std::uint32_t epoch = 0;
    std::string stage;      // "appearance" or "moquad"
    double mean_loss = 0.0; // per-anchor mean, averaged over the epoch's steps
    RankDiagnostics ranks;
    double lr = 0.0;        // learning rate at the epoch's first step
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochMetrics> log;
};

struct TrainerOptions {
    double base_lr = 0.5;
    double momentum = 0.9;
};

// Alg.-1 two-stage pre-training: appearance warm-up for the first
// floor(p*E) epochs, MoQuad quadruple training afterwards (mined variant
// when loss.mining_enabled). Deterministic function of (inputs, seed).
TrainResult run_pretraining(const std::vector<VideoRecord>& train_videos,
                            const EncoderConfig& encoder_cfg,
                            const TrainerOptions& optim,
                            const ScheduleConfig& schedule, std::uint64_t seed,
                            const std::vector<VideoRecord>* holdout = nullptr);

}  // namespace moquad
