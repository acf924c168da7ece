#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "moquad/quadruple.hpp"

using namespace moquad;

namespace {

std::vector<VideoRecord> make_videos(int count, std::uint64_t seed = 1) {
    DatasetConfig cfg;
    cfg.num_train = count;
    cfg.num_test = 1;
    cfg.T = 32;
    cfg.seed = seed;
    auto all = generate_dataset(cfg);
    all.resize(count);
    return all;
}

DonorPool pool_of(const std::vector<VideoRecord>& videos) {
    DonorPool pool;
    for (const auto& v : videos) pool.push_back(&v);
    return pool;
}

QuadConfig default_quad() { return {}; }

}  // namespace

TEST_CASE("a quadruple's members share the source video and obey the dilation rules") {
    const auto videos = make_videos(4);
    const auto pool = pool_of(videos);
    Rng rng(5);

    for (int trial = 0; trial < 50; ++trial) {
        const Quadruple q = build_quadruple(videos[0], pool, default_quad(), rng);
        CHECK(q.anchor.source_id == videos[0].id);
        CHECK(q.pos.source_id == videos[0].id);
        REQUIRE(q.intra_neg.has_value());
        REQUIRE(q.ad_intra_neg.has_value());
        CHECK(q.intra_neg->source_id == videos[0].id);
        CHECK(q.ad_intra_neg->source_id == videos[0].id);

        // Anchor and positive share the dilation; the negatives differ from it.
        CHECK(q.anchor.spec.dilation == q.meta.anchor_dilation);
        CHECK(q.pos.spec.dilation == q.meta.anchor_dilation);
        CHECK(*q.meta.intra_dilation != q.meta.anchor_dilation);
        CHECK(*q.meta.ad_intra_dilation != q.meta.anchor_dilation);

        // Noise carried by the disturbed members only.
        CHECK(q.meta.pos_lambda >= 0.1);
        CHECK(q.meta.pos_lambda <= 0.5);
        CHECK(q.meta.ad_intra_lambda >= 0.1);
        CHECK(q.meta.ad_intra_lambda <= 0.5);
        CHECK_FALSE(q.meta.pos_donors.empty());
        CHECK_FALSE(q.meta.ad_intra_donors.empty());
        for (const auto& [vid, frame] : q.meta.pos_donors) CHECK(vid != videos[0].id);
    }
}

TEST_CASE("candidates {1,2} force both negatives onto dilation 2") {
    const auto videos = make_videos(3);
    const auto pool = pool_of(videos);
    QuadConfig cfg = default_quad();
    cfg.dilation_candidates = {1, 2};
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Quadruple q = build_quadruple(videos[0], pool, cfg, rng);
        if (q.meta.anchor_dilation == 1) {
            CHECK(*q.meta.intra_dilation == 2);
            CHECK(*q.meta.ad_intra_dilation == 2);
        } else {
            CHECK(*q.meta.intra_dilation == 1);
            CHECK(*q.meta.ad_intra_dilation == 1);
        }
    }
}

TEST_CASE("intra negative frames are exact source frames; positive differences scale by 1-lambda") {
    const auto videos = make_videos(3);
    const auto pool = pool_of(videos);
    Rng rng(7);
    const Quadruple q = build_quadruple(videos[0], pool, default_quad(), rng);

    // Intra-Neg: appearance untouched.
    const Clip& neg = *q.intra_neg;
    const std::size_t fsz = neg.frame_size();
    for (std::uint32_t t = 0; t < neg.L; ++t) {
        const std::size_t src_frame = neg.spec.start + t * neg.spec.dilation;
        for (std::size_t p = 0; p < fsz; ++p) {
            CHECK(neg.frame(t)[p] ==
                  videos[0].frames[src_frame * fsz + p] / 255.0);
        }
    }

    // AD-Pos: temporal differences equal (1 - lambda) x the undisturbed
    // window's differences.
    const Clip plain = extract_clip(videos[0], q.pos.spec);
    for (std::uint32_t t = 0; t + 1 < q.pos.L; ++t) {
        for (std::size_t p = 0; p < fsz; ++p) {
            const double lhs = q.pos.frame(t + 1)[p] - q.pos.frame(t)[p];
            const double rhs = (1.0 - q.meta.pos_lambda) *
                               (plain.frame(t + 1)[p] - plain.frame(t)[p]);
            CHECK(std::abs(lhs - rhs) <= 1e-15);
        }
    }
}

TEST_CASE("ablation flags degrade the quadruple gracefully") {
    const auto videos = make_videos(3);
    const auto pool = pool_of(videos);
    Rng rng(8);

    SUBCASE("simclr-style pair: no disturbs at all") {
        QuadConfig cfg = default_quad();
        cfg.enable_ad_pos = false;
        cfg.enable_intra_neg = false;
        cfg.enable_ad_intra_neg = false;
        const Quadruple q = build_quadruple(videos[0], pool, cfg, rng);
        CHECK(q.member_count() == 2);
        CHECK(q.meta.pos_lambda == 0.0);
        CHECK_FALSE(q.intra_neg.has_value());
        CHECK_FALSE(q.ad_intra_neg.has_value());
        // The positive is a plain clip.
        const Clip plain = extract_clip(videos[0], q.pos.spec);
        CHECK(q.pos.pixels == plain.pixels);
    }

    SUBCASE("triple: AD-Pos + Intra-Neg") {
        QuadConfig cfg = default_quad();
        cfg.enable_ad_intra_neg = false;
        const Quadruple q = build_quadruple(videos[0], pool, cfg, rng);
        CHECK(q.member_count() == 3);
        CHECK(q.intra_neg.has_value());
        CHECK_FALSE(q.ad_intra_neg.has_value());
    }

    SUBCASE("AD-Intra-Neg without Intra-Neg is rejected") {
        QuadConfig cfg = default_quad();
        cfg.enable_intra_neg = false;
        CHECK_THROWS_AS(build_quadruple(videos[0], pool, cfg, rng), ConfigError);
    }
}

TEST_CASE("batch construction is deterministic and id-checked") {
    const auto videos = make_videos(4);
    const auto pool = pool_of(videos);
    std::vector<const VideoRecord*> batch_videos = {&videos[0], &videos[1], &videos[2],
                                                    &videos[3]};

    Rng rng_a(9);
    Rng rng_b(9);
    const QuadBatch a = build_batch(batch_videos, pool, default_quad(), rng_a);
    const QuadBatch b = build_batch(batch_videos, pool, default_quad(), rng_b);
    REQUIRE(a.size() == 4);
    CHECK(a.member_count() == 4);
    CHECK(a.flatten().size() == 16);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.quads[i].anchor.pixels == b.quads[i].anchor.pixels);
        CHECK(a.quads[i].pos.pixels == b.quads[i].pos.pixels);
        CHECK(a.quads[i].intra_neg->pixels == b.quads[i].intra_neg->pixels);
        CHECK(a.quads[i].ad_intra_neg->pixels == b.quads[i].ad_intra_neg->pixels);
    }

    std::vector<const VideoRecord*> dupes = {&videos[0], &videos[0]};
    Rng rng_c(10);
    CHECK_THROWS_AS(build_batch(dupes, pool, default_quad(), rng_c), InputError);
}

TEST_CASE("B=1 batches build when the donor pool reaches beyond the batch") {
    const auto videos = make_videos(3);
    const auto pool = pool_of(videos);
    std::vector<const VideoRecord*> single = {&videos[0]};
    Rng rng(11);
    const QuadBatch batch = build_batch(single, pool, default_quad(), rng);
    CHECK(batch.size() == 1);
    CHECK(batch.member_count() == 4);
}

TEST_CASE("per-video sub-seeding makes quadruples independent of batch order") {
    const auto videos = make_videos(3);
    const auto pool = pool_of(videos);

    Rng rng_a(12);
    const std::uint64_t base_a = rng_a.next_u64();
    Rng rng_b(12);
    const std::uint64_t base_b = rng_b.next_u64();
    CHECK(base_a == base_b);

    Rng direct(mix_seed(base_a, static_cast<std::uint64_t>(videos[2].id)));
    const Quadruple expected = build_quadruple(videos[2], pool, default_quad(), direct);

    Rng rng_c(12);
    std::vector<const VideoRecord*> batch_videos = {&videos[0], &videos[1], &videos[2]};
    const QuadBatch batch = build_batch(batch_videos, pool, default_quad(), rng_c);
    CHECK(batch.quads[2].anchor.pixels == expected.anchor.pixels);
    CHECK(batch.quads[2].pos.pixels == expected.pos.pixels);
}
