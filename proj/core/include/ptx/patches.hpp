#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "ptx/imaging.hpp"
#include "ptx/segpost.hpp"

namespace ptx {

/// Patient-relative lung region.
enum class PatchTag { RightApex = 0, LeftApex = 1, RightBase = 2, LeftBase = 3 };

inline constexpr std::array<PatchTag, 4> kPatchOrder = {
    PatchTag::RightApex, PatchTag::LeftApex, PatchTag::RightBase, PatchTag::LeftBase};

/// "right_apex", "left_apex", "right_base", "left_base".
std::string_view to_string(PatchTag tag) noexcept;
std::optional<PatchTag> parse_patch_tag(std::string_view s) noexcept;

struct Patch {
    PatchTag tag = PatchTag::RightApex;
    Rect source_rect;
    ImageGray image;
};

/// Fraction of the lung box height covered by each apex/base patch.
inline constexpr double kPatchHeightFrac = 0.4;
/// Lung boxes narrower or shorter than this are rejected as degenerate.
inline constexpr int kMinLungExtent = 4;

/// Rects for the four patches, in kPatchOrder.
std::array<Rect, 4> patch_rects(const LungFields& lf, int image_width, int image_height);

/// Crops the apical and basilar bands of each lung and resizes them to
/// out_size x out_size. Output order is kPatchOrder.
std::array<Patch, 4> extract_patches(const ImageGray& img, const LungFields& lf, int out_size);

}  // namespace ptx
