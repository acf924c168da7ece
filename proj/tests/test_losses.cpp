#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "moquad/losses.hpp"
#include "moquad/rng.hpp"
#include "oracle/oracles.hpp"

using namespace moquad;

namespace {

EmbeddingBatch equal_similarity_batch(std::size_t B, std::size_t M, std::size_t d) {
    EmbeddingBatch batch;
    batch.batch = B;
    batch.members = M;
    batch.dim = d;
    batch.vectors.assign(B * M * d, 0.0);
    for (std::size_t v = 0; v < B * M; ++v) batch.vectors[v * d] = 1.0;
    return batch;
}

LossConfig plain_cfg(double tau = 0.1) {
    LossConfig cfg;
    cfg.tau = tau;
    cfg.mining_enabled = false;
    return cfg;
}

LossConfig mined_cfg(double alpha, double beta, double tau = 0.1) {
    LossConfig cfg;
    cfg.tau = tau;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.mining_enabled = true;
    return cfg;
}

}  // namespace

TEST_CASE("equal-similarity closed forms") {
    SUBCASE("B=1 quadruple: ln 3") {
        const auto report = moquad_loss(equal_similarity_batch(1, 4, 8), plain_cfg());
        CHECK(report.loss == doctest::Approx(std::log(3.0)).epsilon(1e-13));
    }
    SUBCASE("B=2 quadruple: 2 ln 7 (counts the 4(B-1) inter negatives)") {
        const auto report = moquad_loss(equal_similarity_batch(2, 4, 8), plain_cfg());
        CHECK(report.loss == doctest::Approx(2.0 * std::log(7.0)).epsilon(1e-13));
    }
    SUBCASE("B=2 appearance: 2 ln 3") {
        const auto report = appearance_loss(equal_similarity_batch(2, 2, 8), 0.1);
        CHECK(report.loss == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-13));
    }
    SUBCASE("B=1 appearance: no negatives, exactly zero") {
        const auto report = appearance_loss(equal_similarity_batch(1, 2, 8), 0.1);
        CHECK(report.loss == 0.0);
        for (const double g : report.grads) CHECK(g == 0.0);
    }
    SUBCASE("B=1 mined, alpha=2, beta=0: ln 5") {
        const auto report =
            moquad_loss_mined(equal_similarity_batch(1, 4, 8), mined_cfg(2.0, 0.0));
        CHECK(report.loss == doctest::Approx(std::log(5.0)).epsilon(1e-13));
        CHECK(report.topk_indices[0].empty());
    }
}

TEST_CASE("losses agree with the brute-force oracle on random batches") {
    Rng meta(123);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t B = 1 + meta.uniform_below(8);
        const std::size_t d = 2 + meta.uniform_below(15);
        const double tau = meta.uniform(0.07, 1.0);
        const auto batch = oracle::random_unit_batch(B, 4, d, 5000 + trial);

        const double expect =
            oracle::oracle_loss(batch, tau, oracle::Variant::quadruple);
        const auto report = moquad_loss(batch, plain_cfg(tau));
        CHECK(report.loss ==
              doctest::Approx(expect).epsilon(oracle::OracleTolerance{}.loss_rel));
    }
}

TEST_CASE("appearance loss agrees with the oracle") {
    Rng meta(321);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t B = 1 + meta.uniform_below(8);
        const std::size_t d = 2 + meta.uniform_below(15);
        const double tau = meta.uniform(0.07, 1.0);
        const auto batch = oracle::random_unit_batch(B, 2, d, 9000 + trial);
        const double expect =
            oracle::oracle_loss(batch, tau, oracle::Variant::appearance);
        CHECK(appearance_loss(batch, tau).loss ==
              doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("mined loss agrees with the oracle across alpha and beta") {
    Rng meta(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t B = 2 + meta.uniform_below(7);
        const std::size_t d = 2 + meta.uniform_below(15);
        const double tau = meta.uniform(0.07, 1.0);
        const double alpha = 1.0 + meta.uniform(0.0, 2.0);
        const double beta = meta.uniform(0.0, 0.4);
        const auto batch = oracle::random_unit_batch(B, 4, d, 15000 + trial);

        const double expect =
            oracle::oracle_loss(batch, tau, oracle::Variant::mined, alpha, beta);
        const auto report = moquad_loss_mined(batch, mined_cfg(alpha, beta, tau));
        CHECK(report.loss == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("alpha=1 mining reduces exactly to the plain loss") {
    for (int trial = 0; trial < 100; ++trial) {
        const auto batch = oracle::random_unit_batch(4, 4, 8, 400 + trial);
        const auto plain = moquad_loss(batch, plain_cfg());
        const auto mined = moquad_loss_mined(batch, mined_cfg(1.0, 0.25));
        CHECK(mined.loss == plain.loss);  // bitwise: same order, weight 1.0
        REQUIRE(mined.grads.size() == plain.grads.size());
        for (std::size_t c = 0; c < plain.grads.size(); ++c)
            CHECK(mined.grads[c] == plain.grads[c]);
    }
}

TEST_CASE("top-K count: floor(beta * inter) with the >= 1 guard") {
    CHECK(mined_topk_count(0.0, 1020) == 0);
    CHECK(mined_topk_count(0.01, 1020) == 10);  // floor(10.2)
    CHECK(mined_topk_count(0.05, 1020) == 51);
    CHECK(mined_topk_count(0.01, 12) == 1);     // guard
    CHECK(mined_topk_count(0.01, 60) == 1);     // floor(0.6) -> guard
    CHECK(mined_topk_count(0.05, 60) == 3);
    CHECK(mined_topk_count(0.5, 0) == 0);
}

TEST_CASE("mined report records the top-K inter indices, ties to lower index") {
    // d=2 unit vectors with controlled angles; video 1's members are made
    // most similar to video 0's anchor.
    EmbeddingBatch batch;
    batch.batch = 3;
    batch.members = 4;
    batch.dim = 2;
    batch.vectors.assign(3 * 4 * 2, 0.0);
    auto set_angle = [&batch](std::size_t i, std::size_t m, double theta) {
        batch.vec(i, m)[0] = std::cos(theta);
        batch.vec(i, m)[1] = std::sin(theta);
    };
    // Anchor 0 at angle 0; video 1 members clustered near it, video 2 far.
    set_angle(0, 0, 0.0);
    set_angle(0, 1, 0.3);
    set_angle(0, 2, 1.2);
    set_angle(0, 3, 1.4);
    for (std::size_t m = 0; m < 4; ++m) set_angle(1, m, 0.05 + 0.01 * m);
    for (std::size_t m = 0; m < 4; ++m) set_angle(2, m, 2.5 + 0.1 * m);

    const auto report = moquad_loss_mined(batch, mined_cfg(2.0, 0.3));
    // |inter| = 8, K = floor(2.4) = 2; the two hardest for anchor 0 are
    // video 1's first two members (flat indices 0 and 1).
    REQUIRE(report.topk_indices[0].size() == 2);
    CHECK(report.topk_indices[0][0] == 0);
    CHECK(report.topk_indices[0][1] == 1);

    SUBCASE("exact ties go to the lower flat index") {
        // Make video 2's members duplicates of video 1's first member.
        for (std::size_t m = 0; m < 4; ++m) set_angle(2, m, 0.05);
        set_angle(1, 1, 0.05);
        const auto tied = moquad_loss_mined(batch, mined_cfg(2.0, 0.3));
        REQUIRE(tied.topk_indices[0].size() == 2);
        CHECK(tied.topk_indices[0][0] == 0);
        CHECK(tied.topk_indices[0][1] == 1);
    }
}

TEST_CASE("plain reports have empty topk lists and full similarity tables") {
    const auto batch = oracle::random_unit_batch(3, 4, 8, 777);
    const auto report = moquad_loss(batch, plain_cfg());
    REQUIRE(report.similarities.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(report.topk_indices[i].empty());
        CHECK(report.similarities[i].intra.size() == 2);
        CHECK(report.similarities[i].inter.size() == 8);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    SUBCASE("plain quadruple loss, B=4 d=16") {
        const auto batch = oracle::random_unit_batch(4, 4, 16, 31);
        CHECK(loss_gradcheck(LossKind::moquad, batch, plain_cfg(), 1e-5) < 1e-6);
    }
    SUBCASE("mined loss away from top-K ties") {
        const auto batch = oracle::random_unit_batch(4, 4, 12, 32);
        CHECK(loss_gradcheck(LossKind::moquad_mined, batch, mined_cfg(1.5, 0.25), 1e-5) <
              1e-6);
    }
    SUBCASE("appearance loss, B=3") {
        const auto batch = oracle::random_unit_batch(3, 2, 16, 33);
        CHECK(loss_gradcheck(LossKind::appearance, batch, plain_cfg(), 1e-5) < 1e-6);
    }
}

TEST_CASE("gradients also match the independent finite-difference oracle") {
    const auto batch = oracle::random_unit_batch(3, 4, 8, 64);
    const auto report = moquad_loss(batch, plain_cfg());

    auto loss_at = [&batch](const std::vector<double>& flat) {
        EmbeddingBatch b = batch;
        b.vectors = flat;
        return oracle::oracle_loss(b, 0.1, oracle::Variant::quadruple);
    };
    const auto fd = oracle::oracle_fd_grad(loss_at, batch.vectors, 1e-5);
    CHECK(oracle::max_rel_error(report.grads, fd) < 1e-6);
}

TEST_CASE("the finite-difference comparison detects a corrupted gradient") {
    const auto batch = oracle::random_unit_batch(3, 4, 8, 65);
    const auto report = moquad_loss(batch, plain_cfg());
    auto loss_at = [&batch](const std::vector<double>& flat) {
        EmbeddingBatch b = batch;
        b.vectors = flat;
        return oracle::oracle_loss(b, 0.1, oracle::Variant::quadruple);
    };
    const auto fd = oracle::oracle_fd_grad(loss_at, batch.vectors, 1e-5);

    std::vector<double> corrupted = report.grads;
    // Perturb the largest-magnitude coordinate by 1%.
    std::size_t worst = 0;
    for (std::size_t c = 1; c < corrupted.size(); ++c)
        if (std::abs(corrupted[c]) > std::abs(corrupted[worst])) worst = c;
    corrupted[worst] *= 1.01;
    CHECK(oracle::max_rel_error(corrupted, fd) > 1e-4);
}

TEST_CASE("permuting video order permutes per-anchor losses, total invariant") {
    const auto batch = oracle::random_unit_batch(5, 4, 8, 99);
    const auto report = moquad_loss(batch, plain_cfg());

    // Reverse the video order.
    EmbeddingBatch permuted = batch;
    for (std::size_t i = 0; i < batch.batch; ++i) {
        const std::size_t src = batch.batch - 1 - i;
        std::copy_n(batch.vec(src, 0), batch.members * batch.dim, permuted.vec(i, 0));
    }
    const auto permuted_report = moquad_loss(permuted, plain_cfg());
    CHECK(permuted_report.loss == doctest::Approx(report.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < batch.batch; ++i) {
        CHECK(permuted_report.similarities[i].positive ==
              doctest::Approx(report.similarities[batch.batch - 1 - i].positive));
    }
}

TEST_CASE("raising any single negative similarity strictly raises the loss") {
    const auto batch = oracle::random_unit_batch(3, 4, 8, 111);
    const double base = moquad_loss(batch, plain_cfg()).loss;

    // Rotate one negative member toward anchor 0 (increases that one
    // similarity; all terms involving that member move, so check via the
    // oracle with only this anchor's denominator affected is not possible -
    // instead verify the softmax monotonicity on a controlled batch).
    EmbeddingBatch controlled = equal_similarity_batch(2, 4, 2);
    // Spread the vectors so similarities differ.
    auto set_angle = [&controlled](std::size_t i, std::size_t m, double theta) {
        controlled.vec(i, m)[0] = std::cos(theta);
        controlled.vec(i, m)[1] = std::sin(theta);
    };
    set_angle(0, 0, 0.0);
    set_angle(0, 1, 0.2);
    set_angle(0, 2, 1.0);
    set_angle(0, 3, 1.1);
    set_angle(1, 0, 2.0);
    set_angle(1, 1, 2.2);
    set_angle(1, 2, 2.6);
    set_angle(1, 3, 2.8);
    const double before = moquad_loss(controlled, plain_cfg()).loss;
    set_angle(0, 2, 0.5);  // intra negative of anchor 0 moves closer
    const double after = moquad_loss(controlled, plain_cfg()).loss;
    CHECK(after > before);
    CHECK(base > 0.0);  // softmax cross-entropy with live negatives
}

TEST_CASE("input validation: non-unit and non-finite embeddings") {
    auto batch = oracle::random_unit_batch(2, 4, 8, 222);
    batch.vectors[0] *= 1.5;
    CHECK_THROWS_AS(moquad_loss(batch, plain_cfg()), InputError);

    auto nan_batch = oracle::random_unit_batch(2, 4, 8, 223);
    nan_batch.vectors[3] = std::nan("");
    CHECK_THROWS_AS(moquad_loss(nan_batch, plain_cfg()), NumericError);

    const auto ok = oracle::random_unit_batch(2, 4, 8, 224);
    LossConfig bad = plain_cfg();
    bad.tau = 0.0;
    CHECK_THROWS_AS(moquad_loss(ok, bad), InputError);

    CHECK_THROWS_AS(appearance_loss(oracle::random_unit_batch(2, 4, 8, 225), 0.1),
                    InputError);

    LossConfig bad_alpha = mined_cfg(0.5, 0.1);
    CHECK_THROWS_AS(moquad_loss_mined(ok, bad_alpha), InputError);
}

TEST_CASE("loss approaches zero when the positive dominates at small tau") {
    // Positive similarity 1, negatives near -1, tau small.
    EmbeddingBatch batch;
    batch.batch = 1;
    batch.members = 4;
    batch.dim = 2;
    batch.vectors = {1, 0, 1, 0, -1, 0, -1, 0};  // anchor, pos, two intras
    const auto report = moquad_loss(batch, plain_cfg(0.05));
    CHECK(report.loss < 1e-15);
}
