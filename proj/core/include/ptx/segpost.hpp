#pragma once

#include <cstddef>
#include <vector>

#include "ptx/imaging.hpp"

namespace ptx {

/// Per-pixel probability raster produced by segmentation models.
class ProbMap {
public:
    ProbMap() = default;
    ProbMap(int width, int height, float fill = 0.0f);
    /// Validates length and that every value is in [0, 1].
    ProbMap(int width, int height, std::vector<float> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return values_.empty(); }

    float at(int x, int y) const noexcept { return values_[index(x, y)]; }
    void set(int x, int y, float v) noexcept { values_[index(x, y)] = v; }
    std::span<const float> values() const noexcept { return values_; }

    friend bool operator==(const ProbMap&, const ProbMap&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> values_;
};

class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    bool at(int x, int y) const noexcept { return bits_[index(x, y)] != 0; }
    void set(int x, int y, bool v) noexcept { bits_[index(x, y)] = v ? 1 : 0; }
    std::size_t count() const noexcept;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<unsigned char> bits_;
};

struct Component {
    std::size_t pixels = 0;
    Rect bbox;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    int label = 0;  // value in Labeling::labels, 1-based
};

/// Label image plus component table. labels[i] == 0 means background.
struct Labeling {
    int width = 0;
    int height = 0;
    std::vector<int> labels;
    std::vector<Component> components;

    BinaryMask mask_of(const Component& c) const;
};

struct Lung {
    BinaryMask mask;
    Rect bbox;
};

/// Left/right lung geometry. "Right" is the patient's right, which appears
/// on the image left.
struct LungFields {
    Lung patient_right;
    Lung patient_left;
    Rect combined_bbox;
    bool degraded = false;
};

struct LungExtractionConfig {
    float threshold = 0.5f;
    double min_area_frac = 0.01;
    double split_width_frac = 0.60;
};

BinaryMask threshold_map(const ProbMap& m, float t);

/// 4-connected labeling. Components are ordered by pixel count descending,
/// then by bbox.y0, then by bbox.x0.
Labeling label_components(const BinaryMask& mask);
std::vector<Component> connected_components(const BinaryMask& mask);

LungFields extract_lung_fields(const ProbMap& m, const LungExtractionConfig& cfg = {});

/// Fallback geometry: left image half is the patient's right lung.
LungFields full_image_halves(int width, int height);

/// Union of both lung boxes grown by `margin_frac` of its size per side and
/// clamped to the image.
Rect lung_crop_box(const LungFields& lf, double margin_frac, int image_width, int image_height);

/// Maximum of the 3x3 box-filtered map (zero padding outside the image).
double seg_score(const ProbMap& m);

}  // namespace ptx
