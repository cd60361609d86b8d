#include <gtest/gtest.h>

#include "geometry_properties.hpp"
#include "ptx/patches.hpp"
#include "test_support.hpp"

namespace ptx {
namespace {

using test::expect_code;

LungFields fields(Rect right, Rect left) {
    LungFields lf;
    lf.patient_right.bbox = right;
    lf.patient_left.bbox = left;
    lf.combined_bbox = union_rect(right, left);
    return lf;
}

TEST(PatchTag, StringRoundTrip) {
    for (PatchTag t : kPatchOrder) EXPECT_EQ(parse_patch_tag(to_string(t)), t);
    EXPECT_EQ(to_string(PatchTag::LeftBase), "left_base");
    EXPECT_FALSE(parse_patch_tag("left_middle").has_value());
}

TEST(PatchRects, ApexAndBaseBands) {
    const auto r = patch_rects(fields(Rect{4, 10, 20, 50}, Rect{40, 12, 18, 45}), 64, 64);
    EXPECT_EQ(r[0], (Rect{4, 10, 20, 20}));   // right apex
    EXPECT_EQ(r[1], (Rect{40, 12, 18, 18}));  // left apex: lround(18.0)
    EXPECT_EQ(r[2], (Rect{4, 40, 20, 20}));   // right base
    EXPECT_EQ(r[3], (Rect{40, 39, 18, 18}));  // left base ends at y1 = 57
}

TEST(PatchRects, DegenerateLungRejected) {
    expect_code(ErrorCode::DegenerateLung, [] { patch_rects(fields(Rect{0, 0, 3, 20}, Rect{10, 0, 8, 20}), 20, 20); });
    expect_code(ErrorCode::DegenerateLung, [] { patch_rects(fields(Rect{0, 0, 8, 20}, Rect{10, 0, 8, 3}), 20, 20); });
}

TEST(ExtractPatches, CropsThenResizes) {
    std::mt19937 rng(4);
    const auto img = test::random_image(rng, 32, 32);
    const auto lf = fields(Rect{2, 2, 12, 28}, Rect{18, 2, 12, 28});
    const auto patches = extract_patches(img, lf, 16);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(patches[i].tag, kPatchOrder[i]);
        EXPECT_EQ(patches[i].image, resize_bilinear(crop(img, patches[i].source_rect), 16, 16));
    }
    expect_code(ErrorCode::InvalidArgument, [&] { extract_patches(img, lf, 4); });
}

TEST(ExtractPatches, RandomizedInvariants) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto c = test::random_lung_map(rng);
        const std::string failure = test::check_patches(c, rng);
        ASSERT_TRUE(failure.empty()) << "trial " << trial << ": " << failure;
    }
}

}  // namespace
}  // namespace ptx
