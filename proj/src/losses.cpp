#include "moquad/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "moquad/kernels.hpp"

namespace moquad {

namespace {

constexpr double kUnitNormTol = 1e-6;

void validate_batch(const EmbeddingBatch& b, bool check_unit_norm) {
    if (b.batch < 1) throw InputError("loss: batch must hold at least one video");
    if (b.members < 2 || b.members > 4)
        throw InputError("loss: members per video must be 2, 3 or 4");
    if (b.dim < 1) throw InputError("loss: embedding dim must be positive");
    if (b.vectors.size() != b.batch * b.members * b.dim)
        throw ShapeError("loss: vector buffer does not match (batch, members, dim)");

    for (std::size_t i = 0; i < b.batch; ++i) {
        for (std::size_t m = 0; m < b.members; ++m) {
            const double* v = b.vec(i, m);
            const double sq = kernels::dot(v, v, b.dim);
            if (!std::isfinite(sq))
                throw NumericError("loss: non-finite embedding at video " +
                                   std::to_string(i) + " member " + std::to_string(m));
            if (check_unit_norm && std::abs(std::sqrt(sq) - 1.0) > kUnitNormTol)
                throw InputError("loss: embedding at video " + std::to_string(i) +
                                 " member " + std::to_string(m) +
                                 " is not unit norm (|v| = " + std::to_string(std::sqrt(sq)) +
                                 ")");
        }
    }
}

// Shared engine for Eq.-1/Eq.-2-shaped losses. When mining is off, every
// negative carries weight 1 and the computation (order included) is
// identical to the mined path with alpha = 1, so the alpha = 1 reduction is
// exact to machine rounding.
LossReport nce_engine(const EmbeddingBatch& b, double tau, bool mining,
                      double alpha, double beta, bool check_unit_norm) {
    if (!(tau > 0.0)) throw InputError("loss: tau must be positive");
    if (mining) {
        if (!(alpha >= 1.0)) throw InputError("loss: alpha must be >= 1");
        if (!(beta >= 0.0 && beta <= 1.0))
            throw InputError("loss: beta must lie in [0, 1]");
    }
    validate_batch(b, check_unit_norm);

    const std::size_t B = b.batch;
    const std::size_t M = b.members;
    const std::size_t d = b.dim;
    const std::size_t intra_count = M - 2;
    const std::size_t inter_count = (B - 1) * M;

    LossReport report;
    report.grads.assign(b.vectors.size(), 0.0);
    report.similarities.resize(B);
    report.topk_indices.resize(B);

    std::vector<double> scaled(intra_count + inter_count);
    std::vector<double> weights(intra_count + inter_count);
    std::vector<std::size_t> order;

    double total = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        const double* anchor = b.vec(i, 0);
        AnchorSimilarities& sims = report.similarities[i];

        sims.positive = kernels::dot(anchor, b.vec(i, 1), d);
        sims.intra.resize(intra_count);
        for (std::size_t m = 0; m < intra_count; ++m)
            sims.intra[m] = kernels::dot(anchor, b.vec(i, 2 + m), d);
        sims.inter.resize(inter_count);
        std::size_t k = 0;
        for (std::size_t j = 0; j < B; ++j) {
            if (j == i) continue;
            for (std::size_t m = 0; m < M; ++m)
                sims.inter[k++] = kernels::dot(anchor, b.vec(j, m), d);
        }

        // Negative terms in canonical order: intra first, then inter by
        // flat index. Weights default to 1.
        for (std::size_t m = 0; m < intra_count; ++m) {
            scaled[m] = sims.intra[m] / tau;
            weights[m] = mining ? alpha : 1.0;
        }
        for (std::size_t m = 0; m < inter_count; ++m) {
            scaled[intra_count + m] = sims.inter[m] / tau;
            weights[intra_count + m] = 1.0;
        }

        if (mining) {
            const std::size_t K = mined_topk_count(beta, inter_count);
            if (K > 0) {
                order.resize(inter_count);
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::sort(order.begin(), order.end(),
                          [&sims](std::size_t a, std::size_t c) {
                              if (sims.inter[a] != sims.inter[c])
                                  return sims.inter[a] > sims.inter[c];
                              return a < c;
                          });
                auto& topk = report.topk_indices[i];
                topk.assign(order.begin(), order.begin() + K);
                std::sort(topk.begin(), topk.end());
                for (std::size_t idx : topk) weights[intra_count + idx] = alpha;
            }
        }

        const double s_pos = sims.positive / tau;
        double max_s = s_pos;
        for (const double s : scaled) max_s = std::max(max_s, s);

        // log-sum-exp with the max subtracted; exponent weights are the
        // mining weights.
        const double e_pos = std::exp(s_pos - max_s);
        double z = e_pos;
        for (std::size_t m = 0; m < scaled.size(); ++m)
            z += weights[m] * std::exp(scaled[m] - max_s);
        const double loss_i = -s_pos + max_s + std::log(z);
        if (!std::isfinite(loss_i))
            throw NumericError("loss: non-finite per-anchor loss at video " +
                               std::to_string(i));
        total += loss_i;

        // q_* are the softmax responsibilities; all gradients flow through
        // s = <a, v> / tau.
        const double q_pos = e_pos / z;
        double* g_anchor = report.grads.data() + (i * M + 0) * d;
        kernels::axpy((q_pos - 1.0) / tau, b.vec(i, 1), g_anchor, d);
        double* g_pos = report.grads.data() + (i * M + 1) * d;
        kernels::axpy((q_pos - 1.0) / tau, anchor, g_pos, d);

        for (std::size_t m = 0; m < intra_count; ++m) {
            const double q = weights[m] * std::exp(scaled[m] - max_s) / z;
            kernels::axpy(q / tau, b.vec(i, 2 + m), g_anchor, d);
            double* g_neg = report.grads.data() + (i * M + 2 + m) * d;
            kernels::axpy(q / tau, anchor, g_neg, d);
        }
        std::size_t flat = 0;
        for (std::size_t j = 0; j < B; ++j) {
            if (j == i) continue;
            for (std::size_t m = 0; m < M; ++m, ++flat) {
                const double q = weights[intra_count + flat] *
                                 std::exp(scaled[intra_count + flat] - max_s) / z;
                kernels::axpy(q / tau, b.vec(j, m), g_anchor, d);
                double* g_neg = report.grads.data() + (j * M + m) * d;
                kernels::axpy(q / tau, anchor, g_neg, d);
            }
        }
    }

    report.loss = total;
    return report;
}

}  // namespace

std::size_t mined_topk_count(double beta, std::size_t inter_count) {
    if (beta <= 0.0 || inter_count == 0) return 0;
    const auto k = static_cast<std::size_t>(std::floor(beta * static_cast<double>(inter_count)));
    return std::max<std::size_t>(k, 1);
}

LossReport moquad_loss(const EmbeddingBatch& batch, const LossConfig& cfg) {
    return nce_engine(batch, cfg.tau, false, 1.0, 0.0, true);
}

LossReport appearance_loss(const EmbeddingBatch& batch, double tau) {
    if (batch.members != 2)
        throw InputError("appearance_loss: expects (B, 2, d) clip pairs");
    return nce_engine(batch, tau, false, 1.0, 0.0, true);
}

LossReport moquad_loss_mined(const EmbeddingBatch& batch, const LossConfig& cfg) {
    return nce_engine(batch, cfg.tau, true, cfg.alpha, cfg.beta, true);
}

double loss_gradcheck(LossKind op, const EmbeddingBatch& batch,
                      const LossConfig& cfg, double epsilon) {
    if (!(epsilon > 0.0)) throw InputError("loss_gradcheck: epsilon must be positive");

    auto eval = [&](const EmbeddingBatch& b) {
        switch (op) {
            case LossKind::moquad:
                return nce_engine(b, cfg.tau, false, 1.0, 0.0, false);
            case LossKind::appearance:
                return nce_engine(b, cfg.tau, false, 1.0, 0.0, false);
            default:
                return nce_engine(b, cfg.tau, true, cfg.alpha, cfg.beta, false);
        }
    };

    const LossReport analytic = eval(batch);
    EmbeddingBatch probe = batch;

    double max_rel = 0.0;
    for (std::size_t c = 0; c < probe.vectors.size(); ++c) {
        const double saved = probe.vectors[c];
        probe.vectors[c] = saved + epsilon;
        const double up = eval(probe).loss;
        probe.vectors[c] = saved - epsilon;
        const double down = eval(probe).loss;
        probe.vectors[c] = saved;

        const double fd = (up - down) / (2.0 * epsilon);
        const double a = analytic.grads[c];
        const double rel = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace moquad
