#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ptx {

/// Axis-aligned pixel rectangle. (x0, y0) is the inclusive top-left corner.
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int w = 1;
    int h = 1;

    int x1() const noexcept { return x0 + w; }  // exclusive
    int y1() const noexcept { return y0 + h; }  // exclusive
    double center_x() const noexcept { return x0 + w / 2.0; }
    double center_y() const noexcept { return y0 + h / 2.0; }

    bool fits(int width, int height) const noexcept {
        return x0 >= 0 && y0 >= 0 && w >= 1 && h >= 1 && x1() <= width && y1() <= height;
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Smallest rectangle containing both inputs.
Rect union_rect(const Rect& a, const Rect& b) noexcept;

/// Grayscale raster with row-major intensities in [0, 1].
class ImageGray {
public:
    ImageGray() = default;
    /// Constant-filled image. Throws InvalidArgument for non-positive sizes
    /// or a fill value outside [0, 1].
    ImageGray(int width, int height, float fill = 0.0f);
    /// Takes ownership of `pixels`; validates length and range.
    ImageGray(int width, int height, std::vector<float> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return pixels_.empty(); }

    float at(int x, int y) const noexcept { return pixels_[index(x, y)]; }
    /// Unchecked write; callers keep values inside [0, 1].
    void set(int x, int y, float v) noexcept { pixels_[index(x, y)] = v; }

    std::span<const float> pixels() const noexcept { return pixels_; }
    Rect full_rect() const noexcept { return Rect{0, 0, width_, height_}; }

    friend bool operator==(const ImageGray&, const ImageGray&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> pixels_;
};

/// Decodes a binary PGM (P5) with maxval 255 or 65535. Header comments are
/// skipped; 16-bit samples are big-endian.
ImageGray load_pgm(std::span<const std::uint8_t> bytes);
ImageGray load_pgm_file(const std::filesystem::path& path);

/// Encodes as P5. Intensities are quantized with round-to-nearest.
std::vector<std::uint8_t> save_pgm(const ImageGray& img, int maxval = 255);
void save_pgm_file(const ImageGray& img, const std::filesystem::path& path, int maxval = 255);

ImageGray crop(const ImageGray& img, const Rect& r);

/// Bilinear resampling with pixel-center alignment:
/// src = (dst + 0.5) * (src_dim / dst_dim) - 0.5, clamped to [0, src_dim - 1].
ImageGray resize_bilinear(const ImageGray& img, int width, int height);

/// Stretches intensities to span [0, 1]. A constant image maps to all zeros.
ImageGray normalize_minmax(const ImageGray& img);

}  // namespace ptx
