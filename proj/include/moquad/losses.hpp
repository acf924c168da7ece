#pragma once

#include <cstddef>
#include <vector>

#include "moquad/common.hpp"

namespace moquad {

// Unit-norm embeddings, layout (batch, members, dim) flat. Member order per
// video: 0 = anchor, 1 = positive, 2.. = intra-video negatives. members is
// 4 for the full quadruple, 2 for the appearance warm-up task (and 2 or 3
// under component ablations).
struct EmbeddingBatch {
    std::vector<double> vectors;
    std::size_t batch = 0;
    std::size_t members = 0;
    std::size_t dim = 0;

    const double* vec(std::size_t i, std::size_t m) const {
        return vectors.data() + (i * members + m) * dim;
    }
    double* vec(std::size_t i, std::size_t m) {
        return vectors.data() + (i * members + m) * dim;
    }
};

struct LossConfig {
    double tau = 0.1;      // temperature
    double alpha = 1.5;    // hard-negative weight (>= 1)
    double beta = 0.01;    // hard-negative fraction of the inter-negatives
    bool mining_enabled = false;
};

// Raw (unscaled) dot-product similarities seen by one anchor.
// Inter-negative flat index k maps to video j, member m via
// k = (j < i ? j : j - 1) * members + m.
struct AnchorSimilarities {
    double positive = 0.0;
    std::vector<double> intra;
    std::vector<double> inter;
};

struct LossReport {
    double loss = 0.0;
    // Exact partials w.r.t. every input vector treated as free (the
    // normalization Jacobian is the encoder's concern); same layout as the
    // batch.
    std::vector<double> grads;
    std::vector<AnchorSimilarities> similarities;  // one per anchor
    // Mined hard-negative flat indices per anchor, ascending; empty vectors
    // when mining is disabled.
    std::vector<std::vector<std::size_t>> topk_indices;
};

// Eq.-1-style quadruple loss: positive vs. the intra negatives plus all
// members * (B-1) cross-video terms.
LossReport moquad_loss(const EmbeddingBatch& batch, const LossConfig& cfg);

// Warm-up InfoNCE over (B, 2, d) clips-of-the-same-video pairs.
LossReport appearance_loss(const EmbeddingBatch& batch, double tau);

// Hard-negative-mined variant: the top K = floor(beta * |inter|) inter
// terms (K >= 1 whenever beta > 0), ranked by similarity with ties broken
// toward the lower flat index, get weight alpha, as do the intra
// negatives. alpha = 1 reduces exactly to moquad_loss.
LossReport moquad_loss_mined(const EmbeddingBatch& batch, const LossConfig& cfg);

// Number of mined negatives for a given fraction and pool size.
std::size_t mined_topk_count(double beta, std::size_t inter_count);

enum class LossKind { moquad, appearance, moquad_mined };

// Central-finite-difference check of a loss op's analytic gradients.
// Returns the max over coordinates of |analytic - fd| / max(1, |analytic|,
// |fd|). The loss is evaluated without the unit-norm input check, since
// coordinate perturbation leaves the sphere.
double loss_gradcheck(LossKind op, const EmbeddingBatch& batch,
                      const LossConfig& cfg, double epsilon);

}  // namespace moquad
