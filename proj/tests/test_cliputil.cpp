#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "moquad/cliputil.hpp"

using namespace moquad;

namespace {

// A tiny video whose pixel values encode the frame index, so extraction can
// be checked frame by frame.
VideoRecord indexed_video(std::uint32_t T, std::uint32_t H = 4, std::uint32_t W = 4,
                          std::uint32_t C = 1) {
    VideoRecord v;
    v.id = 7;
    v.T = T;
    v.H = H;
    v.W = W;
    v.C = C;
    v.frames.resize(static_cast<std::size_t>(T) * H * W * C);
    for (std::uint32_t t = 0; t < T; ++t) {
        const std::size_t fsz = static_cast<std::size_t>(H) * W * C;
        for (std::size_t p = 0; p < fsz; ++p)
            v.frames[t * fsz + p] = static_cast<std::uint8_t>(t);
    }
    return v;
}

}  // namespace

TEST_CASE("extract_clip picks the dilated frame sequence") {
    const auto video = indexed_video(32);

    SUBCASE("dilation 2 from the start") {
        const Clip clip = extract_clip(video, {0, 8, 2});
        for (std::uint32_t i = 0; i < 8; ++i)
            CHECK(clip.frame(i)[0] == doctest::Approx((2.0 * i) / 255.0));
    }

    SUBCASE("identity dilation is contiguous") {
        const Clip clip = extract_clip(video, {5, 4, 1});
        for (std::uint32_t i = 0; i < 4; ++i)
            CHECK(clip.frame(i)[0] == doctest::Approx((5.0 + i) / 255.0));
    }

    SUBCASE("window overrun raises a range error naming the index") {
        CHECK_THROWS_WITH_AS(extract_clip(video, {20, 8, 2}),
                             doctest::Contains("frame index 34"), RangeError);
    }
}

TEST_CASE("extract_clip with dilation 1 over the whole video scales by 1/255") {
    const auto video = indexed_video(6);
    const Clip clip = extract_clip(video, {0, 6, 1});
    const std::size_t fsz = clip.frame_size();
    for (std::uint32_t t = 0; t < 6; ++t)
        for (std::size_t p = 0; p < fsz; ++p)
            CHECK(clip.frame(t)[p] == video.frames[t * fsz + p] / 255.0);
}

TEST_CASE("clips only contain exact source frames, regardless of dilation") {
    const auto video = indexed_video(32);
    Rng rng(5);
    for (const std::uint32_t dilation : {1u, 2u, 4u}) {
        const ClipSpec spec = sample_clip_spec(rng, video.T, 8, dilation);
        const Clip clip = extract_clip(video, spec);
        for (std::uint32_t i = 0; i < clip.L; ++i) {
            const double value = clip.frame(i)[0] * 255.0;
            CHECK(value == spec.start + i * dilation);
        }
    }
}

TEST_CASE("sample_clip_spec covers exactly the feasible starts") {
    SUBCASE("T=16 L=8 dilation=2 allows starts {0, 1}") {
        Rng rng(1);
        std::set<std::uint32_t> seen;
        for (int i = 0; i < 200; ++i)
            seen.insert(sample_clip_spec(rng, 16, 8, 2).start);
        CHECK(seen == std::set<std::uint32_t>{0, 1});
    }

    SUBCASE("T=15 leaves only start 0") {
        Rng rng(2);
        for (int i = 0; i < 50; ++i) CHECK(sample_clip_spec(rng, 15, 8, 2).start == 0);
    }

    SUBCASE("T=14 has no feasible window") {
        Rng rng(3);
        CHECK_THROWS_AS(sample_clip_spec(rng, 14, 8, 2), RangeError);
    }
}

TEST_CASE("spec validation rejects degenerate lengths and dilations") {
    const auto video = indexed_video(8);
    CHECK_THROWS_AS(extract_clip(video, {0, 1, 1}), RangeError);
    CHECK_THROWS_AS(extract_clip(video, {0, 4, 0}), RangeError);
    Rng rng(4);
    CHECK_THROWS_AS(sample_clip_spec(rng, 8, 1, 1), RangeError);
    CHECK_THROWS_AS(sample_clip_spec(rng, 8, 4, 0), RangeError);
}

TEST_CASE("area_resample averages exact blocks when the ratio is integral") {
    // 4x4 -> 2x2 with known block means.
    const std::vector<double> src = {
        1, 1, 2, 2,
        1, 1, 2, 2,
        3, 3, 4, 4,
        3, 3, 4, 4};
    std::vector<double> dst(4);
    area_resample(src.data(), 4, 4, 1, dst.data(), 2, 2);
    CHECK(dst[0] == 1.0);
    CHECK(dst[1] == 2.0);
    CHECK(dst[2] == 3.0);
    CHECK(dst[3] == 4.0);
}

TEST_CASE("area_resample preserves the mean for fractional ratios") {
    Rng rng(9);
    std::vector<double> src(5 * 7);
    double mean = 0.0;
    for (auto& x : src) {
        x = rng.uniform();
        mean += x;
    }
    mean /= src.size();

    std::vector<double> dst(3 * 2);
    area_resample(src.data(), 5, 7, 1, dst.data(), 3, 2);
    // Total mass is conserved up to the uneven cell areas; with equal
    // output cell areas the mean must match exactly.
    // 5/3 and 7/2 splits give equal-area output cells, so the plain mean of
    // the output equals the input mean.
    double out_mean = 0.0;
    for (const double x : dst) out_mean += x;
    out_mean /= dst.size();
    CHECK(out_mean == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("area_resample at identical dims is the identity") {
    Rng rng(10);
    std::vector<double> src(6 * 6 * 3);
    for (auto& x : src) x = rng.uniform();
    std::vector<double> dst(src.size());
    area_resample(src.data(), 6, 6, 3, dst.data(), 6, 6);
    for (std::size_t i = 0; i < src.size(); ++i)
        CHECK(dst[i] == doctest::Approx(src[i]).epsilon(1e-15));
}

TEST_CASE("frame_as_double bounds checks") {
    const auto video = indexed_video(4);
    CHECK_THROWS_AS(frame_as_double(video, 4), RangeError);
    const auto f = frame_as_double(video, 3);
    CHECK(f[0] == doctest::Approx(3.0 / 255.0));
}
