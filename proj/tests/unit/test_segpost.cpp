#include <gtest/gtest.h>

#include "geometry_properties.hpp"
#include "ptx/segpost.hpp"
#include "test_support.hpp"

namespace ptx {
namespace {

using test::expect_code;
using test::fill_rect;

BinaryMask mask_from(const std::vector<std::string>& rows) {
    BinaryMask m(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) m.set(x, y, rows[y][x] == '#');
    }
    return m;
}

TEST(ThresholdMap, IsInclusive) {
    ProbMap m(3, 1, std::vector<float>{0.49f, 0.5f, 0.51f});
    const auto b = threshold_map(m, 0.5f);
    EXPECT_FALSE(b.at(0, 0));
    EXPECT_TRUE(b.at(1, 0));
    EXPECT_TRUE(b.at(2, 0));
}

TEST(LabelComponents, FourConnectivityAndOrdering) {
    const auto lab = label_components(mask_from({
        "##..#",
        "##.#.",
        "....#",
        "###..",
    }));
    // Diagonal neighbours are separate components.
    ASSERT_EQ(lab.components.size(), 5u);
    EXPECT_EQ(lab.components[0].pixels, 4u);
    EXPECT_EQ(lab.components[0].bbox, (Rect{0, 0, 2, 2}));
    EXPECT_EQ(lab.components[1].pixels, 3u);
    EXPECT_EQ(lab.components[1].bbox, (Rect{0, 3, 3, 1}));
    EXPECT_DOUBLE_EQ(lab.components[1].centroid_x, 1.0);
    EXPECT_DOUBLE_EQ(lab.components[1].centroid_y, 3.0);
    // Singletons ordered by y0 then x0.
    EXPECT_EQ(lab.components[2].bbox, (Rect{4, 0, 1, 1}));
    EXPECT_EQ(lab.components[3].bbox, (Rect{3, 1, 1, 1}));
    EXPECT_EQ(lab.components[4].bbox, (Rect{4, 2, 1, 1}));
    for (const auto& c : lab.components) EXPECT_EQ(lab.mask_of(c).count(), c.pixels);
}

TEST(LabelComponents, EmptyMaskHasNone) { EXPECT_TRUE(connected_components(BinaryMask(4, 4)).empty()); }

TEST(LabelComponents, RandomMasksMatchOracle) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto c = test::random_lung_map(rng);
        const auto oracle = test::oracle_components(c.map, 0.5f);
        const auto comps = connected_components(threshold_map(c.map, 0.5f));
        ASSERT_EQ(comps.size(), oracle.size());
        std::vector<std::size_t> a, b;
        for (const auto& x : comps) a.push_back(x.pixels);
        for (const auto& x : oracle) b.push_back(x.size());
        std::sort(b.rbegin(), b.rend());
        EXPECT_EQ(a, b);
    }
}

TEST(ExtractLungFields, TwoBlobsAssignedByCentroid) {
    ProbMap m(40, 20);
    fill_rect(m, Rect{24, 2, 10, 14}, 0.9f);  // image right -> patient left
    fill_rect(m, Rect{4, 3, 12, 15}, 0.8f);
    const auto lf = extract_lung_fields(m);
    EXPECT_FALSE(lf.degraded);
    EXPECT_EQ(lf.patient_right.bbox, (Rect{4, 3, 12, 15}));
    EXPECT_EQ(lf.patient_left.bbox, (Rect{24, 2, 10, 14}));
    EXPECT_EQ(lf.combined_bbox, (Rect{4, 2, 30, 16}));
}

TEST(ExtractLungFields, SmallSpecklesIgnored) {
    ProbMap m(40, 20);
    fill_rect(m, Rect{4, 3, 12, 15}, 0.8f);
    fill_rect(m, Rect{24, 2, 10, 14}, 0.9f);
    fill_rect(m, Rect{19, 0, 2, 2}, 0.9f);  // 4 px < 1% of 800
    const auto lf = extract_lung_fields(m);
    EXPECT_EQ(lf.patient_right.bbox, (Rect{4, 3, 12, 15}));
    EXPECT_EQ(lf.patient_left.bbox, (Rect{24, 2, 10, 14}));
}

TEST(ExtractLungFields, MergedLungsSplitAtNarrowestColumn) {
    ProbMap m(30, 20);
    fill_rect(m, Rect{2, 2, 10, 16}, 0.9f);
    fill_rect(m, Rect{16, 2, 10, 16}, 0.9f);
    fill_rect(m, Rect{12, 9, 4, 2}, 0.9f);  // bridge, 2 px tall
    const auto lf = extract_lung_fields(m);
    ASSERT_FALSE(lf.degraded);
    // Middle third of bbox x in [2, 26): columns [10, 18). Bridge columns 12..15
    // tie at 2 px; the leftmost (12) wins and is dropped.
    EXPECT_EQ(lf.patient_right.bbox, (Rect{2, 2, 10, 16}));
    EXPECT_EQ(lf.patient_left.bbox, (Rect{13, 2, 13, 16}));
    EXPECT_FALSE(lf.patient_right.mask.at(12, 9));
    EXPECT_FALSE(lf.patient_left.mask.at(12, 9));
}

TEST(ExtractLungFields, FallsBackToHalves) {
    ProbMap empty(20, 10);
    const auto lf = extract_lung_fields(empty);
    EXPECT_TRUE(lf.degraded);
    EXPECT_EQ(lf.patient_right.bbox, (Rect{0, 0, 10, 10}));
    EXPECT_EQ(lf.patient_left.bbox, (Rect{10, 0, 10, 10}));

    ProbMap narrow(20, 10);
    fill_rect(narrow, Rect{2, 2, 5, 5}, 0.9f);  // single component, not wide enough to split
    EXPECT_TRUE(extract_lung_fields(narrow).degraded);

    expect_code(ErrorCode::EmptyMap, [] { extract_lung_fields(ProbMap{}); });
}

TEST(ExtractLungFields, OddWidthHalves) {
    const auto lf = full_image_halves(7, 3);
    EXPECT_EQ(lf.patient_right.bbox, (Rect{0, 0, 3, 3}));
    EXPECT_EQ(lf.patient_left.bbox, (Rect{3, 0, 4, 3}));
    EXPECT_EQ(lf.patient_right.mask.count() + lf.patient_left.mask.count(), 21u);
}

TEST(ExtractLungFields, RandomizedInvariants) {
    std::mt19937_64 rng(20240601);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto c = test::random_lung_map(rng);
        const std::string failure = test::check_lung_fields(c);
        ASSERT_TRUE(failure.empty()) << "trial " << trial << ": " << failure;
    }
}

TEST(LungCropBox, MarginAndClamp) {
    LungFields lf;
    lf.patient_right.bbox = Rect{10, 10, 20, 40};
    lf.patient_left.bbox = Rect{50, 12, 20, 40};
    // Union {10, 10, 60, 42}; margins lround(3.0) and lround(2.1).
    EXPECT_EQ(lung_crop_box(lf, 0.05, 100, 100), (Rect{7, 8, 66, 46}));
    EXPECT_EQ(lung_crop_box(lf, 0.0, 100, 100), (Rect{10, 10, 60, 42}));
    EXPECT_EQ(lung_crop_box(lf, 0.5, 75, 55), (Rect{0, 0, 75, 55}));
    expect_code(ErrorCode::InvalidArgument, [&] { lung_crop_box(lf, 0.6, 100, 100); });
    expect_code(ErrorCode::InvalidArgument, [&] { lung_crop_box(lf, -0.1, 100, 100); });
}

TEST(SegScore, BoxFilteredMaximum) {
    ProbMap m(5, 5);
    m.set(2, 2, 0.9f);
    EXPECT_NEAR(seg_score(m), 0.1, 1e-7);  // a lone pixel is damped

    ProbMap solid(5, 5, 1.0f);
    EXPECT_NEAR(seg_score(solid), 1.0, 1e-12);

    ProbMap corner(5, 5);
    fill_rect(corner, Rect{0, 0, 2, 2}, 0.9f);
    EXPECT_NEAR(seg_score(corner), 0.4, 1e-7);  // zero padding outside the image

    expect_code(ErrorCode::EmptyMap, [] { seg_score(ProbMap{}); });
}

TEST(SegScore, MatchesDirectEvaluation) {
    std::mt19937 rng(9);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = 1 + trial % 9, h = 1 + (trial * 7) % 11;
        ProbMap m(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) m.set(x, y, u(rng));
        }
        double best = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx >= 0 && ny >= 0 && nx < w && ny < h) s += m.at(nx, ny);
                    }
                }
                best = std::max(best, s / 9.0);
            }
        }
        EXPECT_NEAR(seg_score(m), best, 1e-9);
    }
}

}  // namespace
}  // namespace ptx
