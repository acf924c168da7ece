#pragma once

#include <map>
#include <set>
#include <vector>

#include "moquad/encoder.hpp"

namespace moquad {

// One pooled feature vector per video.
struct VideoFeature {
    std::int64_t video_id = 0;
    std::vector<double> vector;
    int motion_class = 0;
    int appearance_class = 0;
};

struct EvalConfig {
    std::uint32_t num_clips = 10;
    std::uint32_t clip_length = 8;
    std::uint32_t dilation = 1;
    // false: pool the feature extractor's output (the usual linear-eval
    // convention); true: pool the normalized projection embedding instead.
    bool use_projection = false;
};

// Clips at uniform temporal offsets (offsets may repeat on short videos),
// embedded and averaged.
VideoFeature pool_video_features(const ModelParams& params, const VideoRecord& video,
                                 const EvalConfig& cfg);

std::vector<VideoFeature> pool_all_features(const ModelParams& params,
                                            const std::vector<VideoRecord>& videos,
                                            const EvalConfig& cfg);

struct RetrievalResult {
    std::map<int, double> top_k_accuracy;  // k in {1, 5, 10}
};

// Cosine-similarity nearest neighbours; a query is correct at k when any of
// its top-k gallery videos shares its motion class. Gallery ties broken by
// lower video index.
RetrievalResult retrieve(const std::vector<VideoFeature>& queries,
                         const std::vector<VideoFeature>& gallery);

struct ProbeConfig {
    std::uint32_t iterations = 500;
    double lr = 0.5;
    double momentum = 0.9;
};

struct ProbeResult {
    std::vector<double> weights;  // num_classes x dim
    std::vector<double> bias;
    std::size_t num_classes = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<int> test_labels;
    std::vector<int> test_predictions;
};

// Multinomial logistic regression on frozen features (full-batch GD with
// momentum on z-scored inputs; zero init, so the fit is deterministic).
ProbeResult linear_probe(const std::vector<VideoFeature>& train,
                         const std::vector<VideoFeature>& test,
                         const ProbeConfig& cfg);

struct CategoryRow {
    int motion_class = 0;
    std::size_t count = 0;
    double accuracy = 0.0;
    bool appearance_cue = false;  // class carries a static sprite cue
};

struct CategoryReport {
    std::vector<CategoryRow> rows;
    double overall_accuracy = 0.0;
    double cue_group_accuracy = 0.0;     // example-weighted within group
    double motion_group_accuracy = 0.0;
};

// Per-motion-class accuracy over the probe's test predictions, grouped into
// appearance-cue classes vs. motion-only classes.
CategoryReport per_category_report(const ProbeResult& probe,
                                   const std::set<int>& cue_classes);

}  // namespace moquad
