#include "moquad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "moquad/kernels.hpp"

namespace moquad {

VideoFeature pool_video_features(const ModelParams& params, const VideoRecord& video,
                                 const EvalConfig& cfg) {
    if (cfg.num_clips == 0) throw ConfigError("eval: num_clips must be positive");
    const std::uint64_t span =
        static_cast<std::uint64_t>(cfg.clip_length - 1) * cfg.dilation;
    if (span + 1 > video.T)
        throw RangeError("eval: video " + std::to_string(video.id) +
                         " too short for the evaluation clip window");
    const std::uint32_t max_start = static_cast<std::uint32_t>(video.T - 1 - span);

    VideoFeature feature;
    feature.video_id = video.id;
    feature.motion_class = video.motion_class;
    feature.appearance_class = video.appearance_class;

    std::vector<double> acc;
    for (std::uint32_t i = 0; i < cfg.num_clips; ++i) {
        // Uniform offsets over [0, max_start]; repeats are fine on short
        // videos.
        const std::uint32_t start =
            cfg.num_clips == 1
                ? 0
                : static_cast<std::uint32_t>(std::lround(
                      static_cast<double>(i) * max_start / (cfg.num_clips - 1)));
        const ClipSpec spec{start, cfg.clip_length, cfg.dilation};
        const Clip clip = extract_clip(video, spec);

        std::vector<double> v;
        if (cfg.use_projection) {
            const Clip* ptr = &clip;
            const EmbeddingBatch emb = embed(params, std::span(&ptr, 1), 1);
            v = emb.vectors;
        } else {
            v = embed_feature(params, clip);
        }
        if (acc.empty()) acc.assign(v.size(), 0.0);
        kernels::axpy(1.0, v.data(), acc.data(), v.size());
    }
    kernels::scale(1.0 / cfg.num_clips, acc.data(), acc.size());
    feature.vector = std::move(acc);
    return feature;
}

std::vector<VideoFeature> pool_all_features(const ModelParams& params,
                                            const std::vector<VideoRecord>& videos,
                                            const EvalConfig& cfg) {
    std::vector<VideoFeature> features;
    features.reserve(videos.size());
    for (const auto& v : videos) features.push_back(pool_video_features(params, v, cfg));
    return features;
}

RetrievalResult retrieve(const std::vector<VideoFeature>& queries,
                         const std::vector<VideoFeature>& gallery) {
    if (gallery.empty()) throw InputError("retrieve: empty gallery");
    if (queries.empty()) throw InputError("retrieve: empty query set");

    const std::vector<int> ks = {1, 5, 10};
    const int max_k = std::min<int>(10, static_cast<int>(gallery.size()));

    std::vector<double> gallery_norms(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g) {
        const auto& v = gallery[g].vector;
        gallery_norms[g] = std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
    }

    std::map<int, std::size_t> hits;
    for (const int k : ks) hits[k] = 0;

    std::vector<std::pair<double, std::size_t>> scored(gallery.size());
    for (const auto& q : queries) {
        const double qn =
            std::sqrt(kernels::dot(q.vector.data(), q.vector.data(), q.vector.size()));
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            if (q.vector.size() != gallery[g].vector.size())
                throw ShapeError("retrieve: feature dims differ between query and gallery");
            const double sim =
                kernels::dot(q.vector.data(), gallery[g].vector.data(), q.vector.size()) /
                (qn * gallery_norms[g] + 1e-12);
            scored[g] = {sim, g};
        }
        std::partial_sort(scored.begin(), scored.begin() + max_k, scored.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });

        bool found = false;
        int rank = 0;
        for (int r = 0; r < max_k && !found; ++r) {
            if (gallery[scored[r].second].motion_class == q.motion_class) {
                found = true;
                rank = r + 1;
            }
        }
        if (found) {
            for (const int k : ks) {
                if (rank <= k) ++hits[k];
            }
        }
    }

    RetrievalResult result;
    for (const int k : ks)
        result.top_k_accuracy[k] =
            static_cast<double>(hits[k]) / static_cast<double>(queries.size());
    return result;
}

namespace {

struct ZScore {
    std::vector<double> mean, inv_std;
};

ZScore fit_zscore(const std::vector<VideoFeature>& train, std::size_t dim) {
    ZScore z;
    z.mean.assign(dim, 0.0);
    z.inv_std.assign(dim, 0.0);
    for (const auto& f : train) kernels::axpy(1.0, f.vector.data(), z.mean.data(), dim);
    kernels::scale(1.0 / train.size(), z.mean.data(), dim);
    std::vector<double> var(dim, 0.0);
    for (const auto& f : train) {
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = f.vector[k] - z.mean[k];
            var[k] += d * d;
        }
    }
    for (std::size_t k = 0; k < dim; ++k)
        z.inv_std[k] = 1.0 / std::max(std::sqrt(var[k] / train.size()), 1e-8);
    return z;
}

std::vector<double> apply_zscore(const ZScore& z, const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        out[k] = (x[k] - z.mean[k]) * z.inv_std[k];
    return out;
}

int predict_class(const std::vector<double>& w, const std::vector<double>& b,
                  std::size_t num_classes, const std::vector<double>& x) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double s = kernels::dot(w.data() + c * x.size(), x.data(), x.size()) + b[c];
        if (s > best_score) {
            best_score = s;
            best = static_cast<int>(c);
        }
    }
    return best;
}

}  // namespace

ProbeResult linear_probe(const std::vector<VideoFeature>& train,
                         const std::vector<VideoFeature>& test,
                         const ProbeConfig& cfg) {
    if (train.empty()) throw InputError("linear_probe: empty training features");

    std::set<int> classes;
    for (const auto& f : train) classes.insert(f.motion_class);
    if (classes.size() < 2)
        throw InputError("linear_probe: need at least 2 classes, got " +
                         std::to_string(classes.size()));
    // Class labels are assumed dense 0..C-1 (the generator produces them so).
    const std::size_t C = static_cast<std::size_t>(*classes.rbegin()) + 1;
    const std::size_t dim = train.front().vector.size();
    const std::size_t N = train.size();

    const ZScore z = fit_zscore(train, dim);
    std::vector<std::vector<double>> x(N);
    for (std::size_t n = 0; n < N; ++n) x[n] = apply_zscore(z, train[n].vector);

    ProbeResult result;
    result.num_classes = C;
    result.weights.assign(C * dim, 0.0);
    result.bias.assign(C, 0.0);

    std::vector<double> vel_w(C * dim, 0.0), vel_b(C, 0.0);
    std::vector<double> logits(C), probs(C);
    std::vector<double> gw(C * dim), gb(C);

    for (std::uint32_t it = 0; it < cfg.iterations; ++it) {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t c = 0; c < C; ++c)
                logits[c] = kernels::dot(result.weights.data() + c * dim, x[n].data(),
                                         dim) +
                            result.bias[c];
            const double mx = *std::max_element(logits.begin(), logits.end());
            double denom = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                probs[c] = std::exp(logits[c] - mx);
                denom += probs[c];
            }
            for (std::size_t c = 0; c < C; ++c) {
                const double err = probs[c] / denom -
                                   (static_cast<int>(c) == train[n].motion_class ? 1.0 : 0.0);
                kernels::axpy(err / N, x[n].data(), gw.data() + c * dim, dim);
                gb[c] += err / N;
            }
        }
        kernels::scale(cfg.momentum, vel_w.data(), vel_w.size());
        kernels::axpy(1.0, gw.data(), vel_w.data(), gw.size());
        kernels::axpy(-cfg.lr, vel_w.data(), result.weights.data(), vel_w.size());
        kernels::scale(cfg.momentum, vel_b.data(), vel_b.size());
        kernels::axpy(1.0, gb.data(), vel_b.data(), gb.size());
        kernels::axpy(-cfg.lr, vel_b.data(), result.bias.data(), vel_b.size());
    }

    std::size_t train_hits = 0;
    for (std::size_t n = 0; n < N; ++n) {
        if (predict_class(result.weights, result.bias, C, x[n]) == train[n].motion_class)
            ++train_hits;
    }
    result.train_accuracy = static_cast<double>(train_hits) / N;

    std::size_t test_hits = 0;
    for (const auto& f : test) {
        const std::vector<double> xt = apply_zscore(z, f.vector);
        const int pred = predict_class(result.weights, result.bias, C, xt);
        result.test_labels.push_back(f.motion_class);
        result.test_predictions.push_back(pred);
        if (pred == f.motion_class) ++test_hits;
    }
    result.test_accuracy =
        test.empty() ? 0.0 : static_cast<double>(test_hits) / test.size();
    return result;
}

CategoryReport per_category_report(const ProbeResult& probe,
                                   const std::set<int>& cue_classes) {
    CategoryReport report;
    std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
    std::size_t hits = 0;
    for (std::size_t n = 0; n < probe.test_labels.size(); ++n) {
        auto& [h, total] = per_class[probe.test_labels[n]];
        ++total;
        if (probe.test_predictions[n] == probe.test_labels[n]) {
            ++h;
            ++hits;
        }
    }

    std::size_t cue_hits = 0, cue_total = 0, motion_hits = 0, motion_total = 0;
    for (const auto& [cls, counts] : per_class) {
        CategoryRow row;
        row.motion_class = cls;
        row.count = counts.second;
        row.accuracy = static_cast<double>(counts.first) / counts.second;
        row.appearance_cue = cue_classes.count(cls) > 0;
        if (row.appearance_cue) {
            cue_hits += counts.first;
            cue_total += counts.second;
        } else {
            motion_hits += counts.first;
            motion_total += counts.second;
        }
        report.rows.push_back(row);
    }
    report.overall_accuracy =
        probe.test_labels.empty()
            ? 0.0
            : static_cast<double>(hits) / probe.test_labels.size();
    report.cue_group_accuracy =
        cue_total == 0 ? 0.0 : static_cast<double>(cue_hits) / cue_total;
    report.motion_group_accuracy =
        motion_total == 0 ? 0.0 : static_cast<double>(motion_hits) / motion_total;
    return report;
}

}  // namespace moquad
