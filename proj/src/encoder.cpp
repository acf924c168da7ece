#include "moquad/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "moquad/kernels.hpp"
#include "moquad/rng.hpp"

namespace moquad {

namespace {

constexpr double kNormEpsilon = 1e-12;  // added under the square root

void validate_config(const EncoderConfig& cfg) {
    if (cfg.clip_length < 2) throw ConfigError("encoder: clip_length must be >= 2");
    if (cfg.in_h == 0 || cfg.in_w == 0 || cfg.channels == 0)
        throw ConfigError("encoder: input dims must be positive");
    if (cfg.pool_h == 0 || cfg.pool_w == 0 || cfg.pool_h > cfg.in_h ||
        cfg.pool_w > cfg.in_w)
        throw ConfigError("encoder: pool dims must be positive and not exceed input");
    if (cfg.feature_dim == 0) throw ConfigError("encoder: feature_dim must be positive");
    if (cfg.proj_out_dim < 2) throw ConfigError("encoder: proj_out_dim must be >= 2");
    for (const auto dim : cfg.hidden_dims)
        if (dim == 0) throw ConfigError("encoder: hidden dim must be positive");
    for (const auto dim : cfg.proj_dims)
        if (dim == 0) throw ConfigError("encoder: proj dim must be positive");
}

// Layer widths for F then H; relu after every layer except the last of each.
std::vector<Layer> make_layers(const EncoderConfig& cfg, std::size_t* feature_layers) {
    std::vector<Layer> layers;
    auto chain = [&layers](std::uint32_t in, const std::vector<std::uint32_t>& hidden,
                           std::uint32_t out) {
        std::uint32_t prev = in;
        for (const auto h : hidden) {
            layers.push_back({{}, {}, prev, h, true});
            prev = h;
        }
        layers.push_back({{}, {}, prev, out, false});
    };
    chain(cfg.input_dim(), cfg.hidden_dims, cfg.feature_dim);
    *feature_layers = layers.size();
    chain(cfg.feature_dim, cfg.proj_dims, cfg.proj_out_dim);
    return layers;
}

void pool_clip(const EncoderConfig& cfg, const Clip& clip, double* out) {
    if (clip.L != cfg.clip_length || clip.H != cfg.in_h || clip.W != cfg.in_w ||
        clip.C != cfg.channels)
        throw ShapeError("encoder: clip dims do not match the configured input");
    const std::size_t frame_out =
        static_cast<std::size_t>(cfg.pool_h) * cfg.pool_w * cfg.channels;
    for (std::uint32_t t = 0; t < clip.L; ++t) {
        area_resample(clip.frame(t), clip.H, clip.W, clip.C, out + t * frame_out,
                      cfg.pool_h, cfg.pool_w);
    }
}

}  // namespace

ModelParams init_params(const EncoderConfig& cfg) {
    validate_config(cfg);

    ModelParams params;
    params.config = cfg;
    params.layers = make_layers(cfg, &params.feature_layers);

    std::size_t index = 0;
    for (auto& layer : params.layers) {
        layer.w.resize(static_cast<std::size_t>(layer.out) * layer.in);
        layer.b.assign(layer.out, 0.0);
        // Xavier-uniform
        Rng rng = Rng::derive(cfg.seed, {0x1A17ULL, index++});
        const double limit = std::sqrt(6.0 / (layer.in + layer.out));
        for (auto& w : layer.w) w = rng.uniform(-limit, limit);
    }

    params.vel_w.resize(params.layers.size());
    params.vel_b.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        params.vel_w[l].assign(params.layers[l].w.size(), 0.0);
        params.vel_b[l].assign(params.layers[l].b.size(), 0.0);
    }
    return params;
}

EmbeddingBatch embed(const ModelParams& params, std::span<const Clip* const> clips,
                     std::size_t members, ForwardCache* cache) {
    const EncoderConfig& cfg = params.config;
    if (members == 0 || clips.size() % members != 0)
        throw ShapeError("embed: clip count is not a multiple of members");

    const std::size_t count = clips.size();
    const std::size_t in_dim = cfg.input_dim();
    const std::size_t d = cfg.proj_out_dim;
    const std::size_t n_layers = params.layers.size();

    ForwardCache local;
    ForwardCache& fc = cache ? *cache : local;
    fc.revision = params.revision;
    fc.count = count;
    fc.inputs.resize(count * in_dim);
    fc.activations.assign(n_layers, {});
    for (std::size_t l = 0; l < n_layers; ++l)
        fc.activations[l].resize(count * params.layers[l].out);
    fc.prenorm.resize(count * d);
    fc.norms.resize(count);

    EmbeddingBatch out;
    out.batch = count / members;
    out.members = members;
    out.dim = d;
    out.vectors.resize(count * d);

    for (std::size_t c = 0; c < count; ++c) {
        double* x = fc.inputs.data() + c * in_dim;
        pool_clip(cfg, *clips[c], x);

        const double* cur = x;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const Layer& layer = params.layers[l];
            double* act = fc.activations[l].data() + c * layer.out;
            kernels::matvec(layer.w.data(), cur, act, layer.out, layer.in);
            for (std::uint32_t r = 0; r < layer.out; ++r) act[r] += layer.b[r];
            if (layer.relu_after) kernels::relu(act, act, layer.out);
            cur = act;
        }

        double* u = fc.prenorm.data() + c * d;
        std::memcpy(u, cur, d * sizeof(double));
        const double sq = kernels::dot(u, u, d);
        if (sq == 0.0)
            throw NumericError("embed: zero-norm pre-normalization vector for clip " +
                               std::to_string(c));
        const double nrm = std::sqrt(sq + kNormEpsilon);
        fc.norms[c] = nrm;
        double* z = out.vectors.data() + c * d;
        for (std::size_t r = 0; r < d; ++r) z[r] = u[r] / nrm;
    }
    return out;
}

std::vector<double> embed_feature(const ModelParams& params, const Clip& clip) {
    const EncoderConfig& cfg = params.config;
    std::vector<double> x(cfg.input_dim());
    pool_clip(cfg, clip, x.data());

    std::vector<double> cur = std::move(x);
    std::vector<double> next;
    for (std::size_t l = 0; l < params.feature_layers; ++l) {
        const Layer& layer = params.layers[l];
        next.resize(layer.out);
        kernels::matvec(layer.w.data(), cur.data(), next.data(), layer.out, layer.in);
        for (std::uint32_t r = 0; r < layer.out; ++r) next[r] += layer.b[r];
        if (layer.relu_after) kernels::relu(next.data(), next.data(), layer.out);
        cur.swap(next);
    }
    return cur;
}

Gradients backward(const ModelParams& params, const ForwardCache& cache,
                   const std::vector<double>& loss_grads) {
    if (cache.revision != params.revision)
        throw UsageError("backward: forward cache is stale (params changed)");
    const std::size_t d = params.config.proj_out_dim;
    if (loss_grads.size() != cache.count * d)
        throw UsageError("backward: loss gradient size does not match the cache");

    const std::size_t n_layers = params.layers.size();
    Gradients grads;
    grads.w.resize(n_layers);
    grads.b.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        grads.w[l].assign(params.layers[l].w.size(), 0.0);
        grads.b[l].assign(params.layers[l].b.size(), 0.0);
    }

    std::vector<double> g_cur, g_prev;
    for (std::size_t c = 0; c < cache.count; ++c) {
        // Through z = u / sqrt(u.u + eps):  g_u = g/n - u (u.g) / n^3.
        const double* u = cache.prenorm.data() + c * d;
        const double* gz = loss_grads.data() + c * d;
        const double nrm = cache.norms[c];
        const double ug = kernels::dot(u, gz, d);
        g_cur.assign(d, 0.0);
        kernels::axpy(1.0 / nrm, gz, g_cur.data(), d);
        kernels::axpy(-ug / (nrm * nrm * nrm), u, g_cur.data(), d);

        for (std::size_t l = n_layers; l-- > 0;) {
            const Layer& layer = params.layers[l];
            const double* act = cache.activations[l].data() + c * layer.out;
            if (layer.relu_after) {
                // Post-activation values are cached; act > 0 iff pre-act > 0.
                for (std::uint32_t r = 0; r < layer.out; ++r)
                    if (act[r] <= 0.0) g_cur[r] = 0.0;
            }
            const double* input =
                l == 0 ? cache.inputs.data() + c * params.config.input_dim()
                       : cache.activations[l - 1].data() + c * layer.in;

            kernels::ger_accum(g_cur.data(), input, grads.w[l].data(), layer.out,
                               layer.in);
            for (std::uint32_t r = 0; r < layer.out; ++r) grads.b[l][r] += g_cur[r];

            if (l > 0) {
                g_prev.assign(layer.in, 0.0);
                kernels::matvec_t_accum(layer.w.data(), g_cur.data(), g_prev.data(),
                                        layer.out, layer.in);
                g_cur.swap(g_prev);
            }
        }
    }
    return grads;
}

double cosine_lr(const OptimConfig& cfg, std::uint64_t step_index) {
    if (cfg.total_steps == 0) throw ConfigError("optim: total_steps must be positive");
    if (step_index > cfg.total_steps)
        throw RangeError("optim: step index " + std::to_string(step_index) +
                         " past total_steps " + std::to_string(cfg.total_steps));
    const double t = static_cast<double>(step_index) / static_cast<double>(cfg.total_steps);
    return cfg.base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t));
}

void step(ModelParams& params, const Gradients& grads, const OptimConfig& cfg,
          std::uint64_t step_index) {
    if (!(cfg.base_lr > 0.0)) throw ConfigError("optim: base_lr must be positive");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw ConfigError("optim: momentum must lie in [0, 1)");
    if (grads.w.size() != params.layers.size())
        throw ShapeError("step: gradient layer count mismatch");

    const double lr = cosine_lr(cfg, step_index);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Layer& layer = params.layers[l];
        if (grads.w[l].size() != layer.w.size() || grads.b[l].size() != layer.b.size())
            throw ShapeError("step: gradient shape mismatch at layer " + std::to_string(l));

        kernels::scale(cfg.momentum, params.vel_w[l].data(), params.vel_w[l].size());
        kernels::axpy(1.0, grads.w[l].data(), params.vel_w[l].data(), grads.w[l].size());
        kernels::axpy(-lr, params.vel_w[l].data(), layer.w.data(), layer.w.size());

        kernels::scale(cfg.momentum, params.vel_b[l].data(), params.vel_b[l].size());
        kernels::axpy(1.0, grads.b[l].data(), params.vel_b[l].data(), grads.b[l].size());
        kernels::axpy(-lr, params.vel_b[l].data(), layer.b.data(), layer.b.size());
    }
    ++params.revision;
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

void put_f64s(std::ofstream& out, const std::vector<double>& v) {
    for (const double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i)
            buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(buf), 8);
    }
}

std::uint32_t take_u32(std::ifstream& in, const std::string& path) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (in.gcount() != 4) throw FormatError("checkpoint: truncated file " + path);
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) |
           (static_cast<std::uint32_t>(buf[3]) << 24);
}

std::uint64_t take_u64(std::ifstream& in, const std::string& path) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (in.gcount() != 8) throw FormatError("checkpoint: truncated file " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void take_f64s(std::ifstream& in, std::vector<double>& v, const std::string& path) {
    for (double& x : v) {
        const std::uint64_t bits = take_u64(in, path);
        std::memcpy(&x, &bits, 8);
    }
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw MissingInputError("checkpoint: cannot open " + path.string());

    const EncoderConfig& cfg = params.config;
    out.write("MOQD", 4);
    put_u32(out, 1);  // version
    put_u32(out, cfg.clip_length);
    put_u32(out, cfg.in_h);
    put_u32(out, cfg.in_w);
    put_u32(out, cfg.channels);
    put_u32(out, cfg.pool_h);
    put_u32(out, cfg.pool_w);
    put_u32(out, static_cast<std::uint32_t>(cfg.hidden_dims.size()));
    for (const auto dim : cfg.hidden_dims) put_u32(out, dim);
    put_u32(out, cfg.feature_dim);
    put_u32(out, static_cast<std::uint32_t>(cfg.proj_dims.size()));
    for (const auto dim : cfg.proj_dims) put_u32(out, dim);
    put_u32(out, cfg.proj_out_dim);
    put_u64(out, cfg.seed);

    for (const auto& layer : params.layers) {
        put_f64s(out, layer.w);
        put_f64s(out, layer.b);
    }
    if (!out) throw Error("checkpoint: write failed for " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("checkpoint: cannot open " + path.string());

    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "MOQD", 4) != 0)
        throw FormatError("checkpoint: bad magic in " + path.string());
    const std::uint32_t version = take_u32(in, path.string());
    if (version != 1)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));

    EncoderConfig cfg;
    cfg.clip_length = take_u32(in, path.string());
    cfg.in_h = take_u32(in, path.string());
    cfg.in_w = take_u32(in, path.string());
    cfg.channels = take_u32(in, path.string());
    cfg.pool_h = take_u32(in, path.string());
    cfg.pool_w = take_u32(in, path.string());
    const std::uint32_t n_hidden = take_u32(in, path.string());
    if (n_hidden > 64) throw FormatError("checkpoint: implausible layer count in " + path.string());
    cfg.hidden_dims.resize(n_hidden);
    for (auto& dim : cfg.hidden_dims) dim = take_u32(in, path.string());
    cfg.feature_dim = take_u32(in, path.string());
    const std::uint32_t n_proj = take_u32(in, path.string());
    if (n_proj > 64) throw FormatError("checkpoint: implausible layer count in " + path.string());
    cfg.proj_dims.resize(n_proj);
    for (auto& dim : cfg.proj_dims) dim = take_u32(in, path.string());
    cfg.proj_out_dim = take_u32(in, path.string());
    cfg.seed = take_u64(in, path.string());

    ModelParams params = init_params(cfg);
    for (auto& layer : params.layers) {
        take_f64s(in, layer.w, path.string());
        take_f64s(in, layer.b, path.string());
    }
    char extra;
    in.read(&extra, 1);
    if (in.gcount() > 0)
        throw FormatError("checkpoint: trailing data in " + path.string());
    return params;
}

}  // namespace moquad
