#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "moquad/cliputil.hpp"
#include "moquad/losses.hpp"

namespace moquad {

// Feed-forward feature extractor F plus projection head H over clips whose
// frames are area-downsampled to pool_h x pool_w and flattened.
struct EncoderConfig {
    std::uint32_t clip_length = 8;
    std::uint32_t in_h = 32, in_w = 32, channels = 1;
    std::uint32_t pool_h = 16, pool_w = 16;
    std::vector<std::uint32_t> hidden_dims = {256};  // F hidden widths
    std::uint32_t feature_dim = 128;                 // F output (eval features)
    std::vector<std::uint32_t> proj_dims = {};       // H hidden widths
    std::uint32_t proj_out_dim = 64;                 // embedding dim d
    std::uint64_t seed = 0;

    std::uint32_t input_dim() const {
        return clip_length * pool_h * pool_w * channels;
    }
    bool operator==(const EncoderConfig&) const = default;
};

struct Layer {
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out
    std::uint32_t in = 0, out = 0;
    bool relu_after = false;
};

struct ModelParams {
    EncoderConfig config;
    std::vector<Layer> layers;       // F layers then H layers
    std::size_t feature_layers = 0;  // how many belong to F
    // Momentum buffers, same shapes as the layers.
    std::vector<std::vector<double>> vel_w;
    std::vector<std::vector<double>> vel_b;
    // Bumped by step(); used to detect stale forward caches.
    std::uint64_t revision = 0;
};

ModelParams init_params(const EncoderConfig& cfg);

struct ForwardCache {
    std::uint64_t revision = 0;
    std::size_t count = 0;           // clips
    std::vector<double> inputs;      // count x input_dim
    // Post-activation outputs per layer, count x layer.out each.
    std::vector<std::vector<double>> activations;
    std::vector<double> prenorm;     // count x d, H output before normalize
    std::vector<double> norms;       // count
};

// Forward pass: pool, F, H, L2-normalize (epsilon 1e-12 inside the square
// root; an exactly zero-norm pre-normalization vector raises NumericError).
// Clips are laid out video-major; `members` fixes the (B, M, d) shape.
EmbeddingBatch embed(const ModelParams& params, std::span<const Clip* const> clips,
                     std::size_t members, ForwardCache* cache = nullptr);

// F output only (the evaluation feature), no normalization.
std::vector<double> embed_feature(const ModelParams& params, const Clip& clip);

struct Gradients {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;
};

// Exact parameter gradients of the scalar loss whose per-embedding partials
// are `loss_grads` (layout must match the cache's batch).
Gradients backward(const ModelParams& params, const ForwardCache& cache,
                   const std::vector<double>& loss_grads);

struct OptimConfig {
    double base_lr = 0.5;
    double momentum = 0.9;
    std::uint64_t total_steps = 1;
};

// base_lr * 0.5 * (1 + cos(pi * t / total_steps)).
double cosine_lr(const OptimConfig& cfg, std::uint64_t step_index);

void step(ModelParams& params, const Gradients& grads, const OptimConfig& cfg,
          std::uint64_t step_index);

// Checkpoint: "MOQD" | u32 version=1 | config echo | per-layer W then b as
// little-endian f64 in declaration order (F layers then H layers).
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace moquad
