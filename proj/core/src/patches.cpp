#include "ptx/patches.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ptx/error.hpp"

namespace ptx {

std::string_view to_string(PatchTag tag) noexcept {
    switch (tag) {
        case PatchTag::RightApex: return "right_apex";
        case PatchTag::LeftApex: return "left_apex";
        case PatchTag::RightBase: return "right_base";
        case PatchTag::LeftBase: return "left_base";
    }
    return "unknown";
}

std::optional<PatchTag> parse_patch_tag(std::string_view s) noexcept {
    for (PatchTag t : kPatchOrder) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

namespace {

Rect clamp_to_image(Rect r, int width, int height) {
    const int x0 = std::clamp(r.x0, 0, width - 1);
    const int y0 = std::clamp(r.y0, 0, height - 1);
    const int x1 = std::clamp(r.x1(), x0 + 1, width);
    const int y1 = std::clamp(r.y1(), y0 + 1, height);
    return Rect{x0, y0, x1 - x0, y1 - y0};
}

std::pair<Rect, Rect> apex_and_base(const Rect& lung, const char* side) {
    if (lung.w < kMinLungExtent || lung.h < kMinLungExtent) {
        throw Error(ErrorCode::DegenerateLung, std::string(side) + " lung box is " + std::to_string(lung.w) + "x" +
                                                   std::to_string(lung.h));
    }
    const int band = static_cast<int>(std::lround(kPatchHeightFrac * lung.h));
    return {Rect{lung.x0, lung.y0, lung.w, band}, Rect{lung.x0, lung.y0 + lung.h - band, lung.w, band}};
}

}  // namespace

std::array<Rect, 4> patch_rects(const LungFields& lf, int image_width, int image_height) {
    const auto [right_apex, right_base] = apex_and_base(lf.patient_right.bbox, "right");
    const auto [left_apex, left_base] = apex_and_base(lf.patient_left.bbox, "left");
    return {clamp_to_image(right_apex, image_width, image_height), clamp_to_image(left_apex, image_width, image_height),
            clamp_to_image(right_base, image_width, image_height), clamp_to_image(left_base, image_width, image_height)};
}

std::array<Patch, 4> extract_patches(const ImageGray& img, const LungFields& lf, int out_size) {
    if (out_size < 8) throw Error(ErrorCode::InvalidArgument, "patch size must be >= 8");
    const auto rects = patch_rects(lf, img.width(), img.height());
    std::array<Patch, 4> out;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].tag = kPatchOrder[i];
        out[i].source_rect = rects[i];
        out[i].image = resize_bilinear(crop(img, rects[i]), out_size, out_size);
    }
    return out;
}

}  // namespace ptx
