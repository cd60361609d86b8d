#include "ptx/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "ptx/error.hpp"

namespace ptx {

Rect union_rect(const Rect& a, const Rect& b) noexcept {
    const int x0 = std::min(a.x0, b.x0);
    const int y0 = std::min(a.y0, b.y0);
    const int x1 = std::max(a.x1(), b.x1());
    const int y1 = std::max(a.y1(), b.y1());
    return Rect{x0, y0, x1 - x0, y1 - y0};
}

ImageGray::ImageGray(int width, int height, float fill) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    if (!(fill >= 0.0f && fill <= 1.0f)) throw Error(ErrorCode::InvalidArgument, "fill value outside [0, 1]");
    width_ = width;
    height_ = height;
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

ImageGray::ImageGray(int width, int height, std::vector<float> pixels) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorCode::InvalidArgument, "pixel count does not match dimensions");
    }
    for (float p : pixels) {
        if (!(p >= 0.0f && p <= 1.0f)) throw Error(ErrorCode::InvalidArgument, "intensity outside [0, 1]");
    }
    width_ = width;
    height_ = height;
    pixels_ = std::move(pixels);
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // Skips whitespace and '#' comments, then reads an unsigned decimal.
    long next_number(const char* field) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > std::numeric_limits<int>::max()) {
                throw Error(ErrorCode::MalformedHeader, std::string(field) + " too large");
            }
            ++pos_;
        }
        if (pos_ == start) throw Error(ErrorCode::MalformedHeader, std::string("non-numeric ") + field);
        return value;
    }

    // Exactly one whitespace byte separates the header from the raster.
    std::size_t payload_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw Error(ErrorCode::MalformedHeader, "missing whitespace after maxval");
        }
        return pos_ + 1;
    }

    std::size_t pos_ = 0;

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
};

}  // namespace

ImageGray load_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw Error(ErrorCode::MalformedHeader, "bad magic, expected P5");
    }
    HeaderReader reader(bytes);
    reader.pos_ = 2;
    const long width = reader.next_number("width");
    const long height = reader.next_number("height");
    const long maxval = reader.next_number("maxval");
    if (width < 1 || height < 1) throw Error(ErrorCode::MalformedHeader, "zero image dimension");
    if (maxval != 255 && maxval != 65535) {
        throw Error(ErrorCode::UnsupportedMaxval, "maxval " + std::to_string(maxval));
    }
    const std::size_t offset = reader.payload_offset();
    const std::size_t sample_bytes = maxval == 255 ? 1 : 2;
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() < offset || bytes.size() - offset < count * sample_bytes) {
        throw Error(ErrorCode::TruncatedData, "payload shorter than " + std::to_string(count) + " samples");
    }

    std::vector<float> pixels(count);
    const auto payload = bytes.subspan(offset);
    const double scale = 1.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned raw = sample_bytes == 1 ? payload[i] : (unsigned{payload[2 * i]} << 8) | payload[2 * i + 1];
        pixels[i] = static_cast<float>(raw * scale);
    }
    return ImageGray(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

ImageGray load_pgm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ImageLoadError, "cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_pgm(bytes);
}

std::vector<std::uint8_t> save_pgm(const ImageGray& img, int maxval) {
    if (maxval != 255 && maxval != 65535) throw Error(ErrorCode::UnsupportedMaxval, std::to_string(maxval));
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n" + std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + img.pixels().size() * (maxval == 255 ? 1 : 2));
    for (float p : img.pixels()) {
        const auto raw = static_cast<unsigned>(std::lround(static_cast<double>(p) * maxval));
        if (maxval == 255) {
            out.push_back(static_cast<std::uint8_t>(raw));
        } else {
            out.push_back(static_cast<std::uint8_t>(raw >> 8));
            out.push_back(static_cast<std::uint8_t>(raw & 0xFF));
        }
    }
    return out;
}

void save_pgm_file(const ImageGray& img, const std::filesystem::path& path, int maxval) {
    const auto bytes = save_pgm(img, maxval);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileUnreadable, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ImageGray crop(const ImageGray& img, const Rect& r) {
    if (!r.fits(img.width(), img.height())) {
        throw Error(ErrorCode::OutOfBounds, "crop rect exceeds " + std::to_string(img.width()) + "x" +
                                                std::to_string(img.height()));
    }
    std::vector<float> pixels;
    pixels.reserve(static_cast<std::size_t>(r.w) * static_cast<std::size_t>(r.h));
    const auto src = img.pixels();
    for (int y = r.y0; y < r.y1(); ++y) {
        const auto row = src.subspan(static_cast<std::size_t>(y) * img.width() + r.x0, static_cast<std::size_t>(r.w));
        pixels.insert(pixels.end(), row.begin(), row.end());
    }
    return ImageGray(r.w, r.h, std::move(pixels));
}

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;  // weight of hi
};

std::vector<Tap> bilinear_taps(int src_dim, int dst_dim) {
    std::vector<Tap> taps(static_cast<std::size_t>(dst_dim));
    const double scale = static_cast<double>(src_dim) / dst_dim;
    for (int d = 0; d < dst_dim; ++d) {
        const double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(src_dim - 1));
        const int lo = static_cast<int>(std::floor(s));
        const int hi = std::min(lo + 1, src_dim - 1);
        taps[static_cast<std::size_t>(d)] = Tap{lo, hi, s - lo};
    }
    return taps;
}

}  // namespace

ImageGray resize_bilinear(const ImageGray& img, int width, int height) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "resize target must be >= 1x1");
    if (img.empty()) throw Error(ErrorCode::InvalidArgument, "resize of empty image");
    const auto xs = bilinear_taps(img.width(), width);
    const auto ys = bilinear_taps(img.height(), height);
    std::vector<float> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        const Tap& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < width; ++x) {
            const Tap& tx = xs[static_cast<std::size_t>(x)];
            const double top = img.at(tx.lo, ty.lo) * (1.0 - tx.frac) + img.at(tx.hi, ty.lo) * tx.frac;
            const double bottom = img.at(tx.lo, ty.hi) * (1.0 - tx.frac) + img.at(tx.hi, ty.hi) * tx.frac;
            const double v = top * (1.0 - ty.frac) + bottom * ty.frac;
            pixels[static_cast<std::size_t>(y) * width + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return ImageGray(width, height, std::move(pixels));
}

ImageGray normalize_minmax(const ImageGray& img) {
    if (img.empty()) return img;
    const auto [lo_it, hi_it] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    const double lo = *lo_it;
    const double range = static_cast<double>(*hi_it) - lo;
    std::vector<float> pixels(img.pixels().size(), 0.0f);
    if (range > 0.0) {
        std::transform(img.pixels().begin(), img.pixels().end(), pixels.begin(), [&](float p) {
            return static_cast<float>(std::clamp((p - lo) / range, 0.0, 1.0));
        });
    }
    return ImageGray(img.width(), img.height(), std::move(pixels));
}

}  // namespace ptx
