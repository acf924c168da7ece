#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "moquad/config.hpp"

namespace moquad {

// Orchestration used by both the CLI and the integration tests; every
// command echoes the fully-resolved config into its output directory.

// Writes vids/ + manifest.jsonl + config_resolved.json under cfg.data_dir.
void run_gen(const RunConfig& cfg);

// Metrics log serialization: one JSON object per epoch with keys
// {epoch, stage, mean_loss, mean_rank_ad_pos, mean_rank_intra_negs, lr};
// rank fields are null during the warm-up stage.
void write_metrics_log(const std::vector<EpochMetrics>& log,
                       const std::filesystem::path& path);
std::vector<EpochMetrics> read_metrics_log(const std::filesystem::path& path);

struct PretrainArtifacts {
    std::filesystem::path checkpoint;
    std::filesystem::path metrics;
};

// Loads the dataset, trains per the schedule, writes checkpoint.moqd +
// metrics.jsonl + config_resolved.json under cfg.out_dir.
PretrainArtifacts run_pretrain(const RunConfig& cfg);

struct EvalArtifacts {
    nlohmann::json results;
    std::filesystem::path results_path;
};

// Pools features for both splits, runs retrieval + linear probe +
// per-category report; writes features.jsonl and results.json.
EvalArtifacts run_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint);

// Retrieval only; writes results.json with the top-k accuracies.
EvalArtifacts run_retrieve(const RunConfig& cfg, const std::filesystem::path& checkpoint);

// Exports (epoch, mean_rank_ad_pos, mean_rank_intra_negs) CSV rows for the
// MoQuad-stage epochs of a metrics log.
void run_diag(const std::filesystem::path& metrics_path,
              const std::filesystem::path& csv_path);

// Named ablation grids mirroring the paper's studies.
std::vector<std::string> sweep_grid_names();
nlohmann::json run_sweep(const RunConfig& base, const std::string& grid);

// Applies cfg.deterministic (pins the scalar kernel backend).
void apply_determinism(const RunConfig& cfg);

}  // namespace moquad
