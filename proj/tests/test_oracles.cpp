#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracle/oracles.hpp"

using namespace moquad;

namespace {

// All-identical embeddings: every pairwise similarity is exactly 1.
EmbeddingBatch equal_similarity_batch(std::size_t B, std::size_t M, std::size_t d) {
    EmbeddingBatch batch;
    batch.batch = B;
    batch.members = M;
    batch.dim = d;
    batch.vectors.assign(B * M * d, 0.0);
    for (std::size_t v = 0; v < B * M; ++v) batch.vectors[v * d] = 1.0;
    return batch;
}

}  // namespace

TEST_CASE("oracle reproduces the equal-similarity closed forms") {
    // B=1 quadruple: denominator has pos + 2 equal intra terms.
    CHECK(oracle::oracle_loss(equal_similarity_batch(1, 4, 8), 0.1, oracle::Variant::quadruple) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-14));
    // B=2 quadruple: pos + 2 intra + 4 inter = 7 equal terms per anchor.
    CHECK(oracle::oracle_loss(equal_similarity_batch(2, 4, 8), 0.1, oracle::Variant::quadruple) ==
          doctest::Approx(2.0 * std::log(7.0)).epsilon(1e-14));
    // B=2 appearance task: pos + 2 negatives.
    CHECK(oracle::oracle_loss(equal_similarity_batch(2, 2, 8), 0.1, oracle::Variant::appearance) ==
          doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-14));
    // B=1 appearance task: no negatives at all.
    CHECK(oracle::oracle_loss(equal_similarity_batch(1, 2, 8), 0.1, oracle::Variant::appearance) ==
          doctest::Approx(0.0));
    // B=1 mined with alpha=2, beta=0: the two intra terms are doubled.
    CHECK(oracle::oracle_loss(equal_similarity_batch(1, 4, 8), 0.1, oracle::Variant::mined,
                              2.0, 0.0) ==
          doctest::Approx(std::log(5.0)).epsilon(1e-14));
}

TEST_CASE("mined oracle with alpha=1 reduces to the plain oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto batch = oracle::random_unit_batch(4, 4, 8, 1000 + seed);
        const double plain =
            oracle::oracle_loss(batch, 0.1, oracle::Variant::quadruple);
        const double mined =
            oracle::oracle_loss(batch, 0.1, oracle::Variant::mined, 1.0, 0.25);
        CHECK(mined == doctest::Approx(plain).epsilon(1e-15));
    }
}

TEST_CASE("finite differences recover a quadratic gradient") {
    // f(x) = sum 0.5 * i * x_i^2, df/dx_i = i * x_i, exact to O(eps^2)
    // (identically for a quadratic).
    auto fn = [](const std::vector<double>& x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += 0.5 * i * x[i] * x[i];
        return acc;
    };
    const std::vector<double> point = {0.5, -1.0, 2.0, 3.5};
    const auto grad = oracle::oracle_fd_grad(fn, point, 1e-5);
    for (std::size_t i = 0; i < point.size(); ++i)
        CHECK(grad[i] == doctest::Approx(i * point[i]).epsilon(1e-9));
}

TEST_CASE("top-k selection breaks ties toward the lower index") {
    const std::vector<double> values = {0.5, 0.9, 0.9, 0.1, 0.9};
    const auto top = oracle::oracle_topk(values, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0] == 1);
    CHECK(top[1] == 2);

    const auto all = oracle::oracle_topk(values, 99);
    CHECK(all.size() == values.size());
}

TEST_CASE("max_rel_error flags a corrupted coordinate") {
    const std::vector<double> a = {2.0, -3.0, 0.5};
    std::vector<double> b = a;
    CHECK(oracle::max_rel_error(a, b) == 0.0);
    b[1] *= 1.01;  // 1% perturbation
    CHECK(oracle::max_rel_error(a, b) > 1e-3);
}

TEST_CASE("random unit batches are unit norm") {
    const auto batch = oracle::random_unit_batch(3, 4, 16, 5);
    for (std::size_t i = 0; i < batch.batch; ++i) {
        for (std::size_t m = 0; m < batch.members; ++m) {
            const double* v = batch.vec(i, m);
            double sq = 0.0;
            for (std::size_t k = 0; k < batch.dim; ++k) sq += v[k] * v[k];
            CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}
