#include "ptx/segpost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <tuple>

#include "ptx/error.hpp"

namespace ptx {

ProbMap::ProbMap(int width, int height, float fill) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "map dimensions must be >= 1");
    if (!(fill >= 0.0f && fill <= 1.0f)) throw Error(ErrorCode::InvalidArgument, "fill value outside [0, 1]");
    width_ = width;
    height_ = height;
    values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

ProbMap::ProbMap(int width, int height, std::vector<float> values) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "map dimensions must be >= 1");
    if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorCode::InvalidArgument, "value count does not match dimensions");
    }
    for (float v : values) {
        if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorCode::InvalidArgument, "probability outside [0, 1]");
    }
    width_ = width;
    height_ = height;
    values_ = std::move(values);
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
            fill ? 1 : 0) {}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), static_cast<unsigned char>(1)));
}

BinaryMask Labeling::mask_of(const Component& c) const {
    BinaryMask mask(width, height);
    for (int y = c.bbox.y0; y < c.bbox.y1(); ++y) {
        for (int x = c.bbox.x0; x < c.bbox.x1(); ++x) {
            if (labels[static_cast<std::size_t>(y) * width + x] == c.label) mask.set(x, y, true);
        }
    }
    return mask;
}

BinaryMask threshold_map(const ProbMap& m, float t) {
    BinaryMask mask(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) mask.set(x, y, m.at(x, y) >= t);
    }
    return mask;
}

Labeling label_components(const BinaryMask& mask) {
    Labeling out;
    out.width = mask.width();
    out.height = mask.height();
    out.labels.assign(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height), 0);

    std::vector<std::pair<int, int>> stack;
    int next_label = 0;
    for (int sy = 0; sy < out.height; ++sy) {
        for (int sx = 0; sx < out.width; ++sx) {
            if (!mask.at(sx, sy) || out.labels[static_cast<std::size_t>(sy) * out.width + sx] != 0) continue;

            const int label = ++next_label;
            Component c;
            c.label = label;
            int min_x = sx, max_x = sx, min_y = sy, max_y = sy;
            double sum_x = 0.0, sum_y = 0.0;
            stack.assign(1, {sx, sy});
            out.labels[static_cast<std::size_t>(sy) * out.width + sx] = label;
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                ++c.pixels;
                sum_x += x;
                sum_y += y;
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_y = std::min(min_y, y);
                max_y = std::max(max_y, y);
                constexpr int dx[4] = {1, -1, 0, 0};
                constexpr int dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = x + dx[k];
                    const int ny = y + dy[k];
                    if (nx < 0 || ny < 0 || nx >= out.width || ny >= out.height) continue;
                    int& slot = out.labels[static_cast<std::size_t>(ny) * out.width + nx];
                    if (slot != 0 || !mask.at(nx, ny)) continue;
                    slot = label;
                    stack.emplace_back(nx, ny);
                }
            }
            c.bbox = Rect{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
            c.centroid_x = sum_x / static_cast<double>(c.pixels);
            c.centroid_y = sum_y / static_cast<double>(c.pixels);
            out.components.push_back(c);
        }
    }
    std::stable_sort(out.components.begin(), out.components.end(), [](const Component& a, const Component& b) {
        return std::tuple(b.pixels, a.bbox.y0, a.bbox.x0) < std::tuple(a.pixels, b.bbox.y0, b.bbox.x0);
    });
    return out;
}

std::vector<Component> connected_components(const BinaryMask& mask) { return label_components(mask).components; }

namespace {

Rect bbox_of(const BinaryMask& m) {
    int min_x = m.width(), min_y = m.height(), max_x = -1, max_y = -1;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y)) continue;
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
        }
    }
    return Rect{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

LungFields make_fields(Lung right, Lung left) {
    LungFields lf;
    lf.combined_bbox = union_rect(right.bbox, left.bbox);
    lf.patient_right = std::move(right);
    lf.patient_left = std::move(left);
    return lf;
}

// Splits a single wide component at its thinnest column inside the middle
// third of its bbox. Pixels on the split column belong to neither half.
std::optional<LungFields> split_component(const Labeling& lab, const Component& c) {
    const int lo = c.bbox.x0 + c.bbox.w / 3;
    const int hi = std::max(lo + 1, c.bbox.x0 + (2 * c.bbox.w) / 3);
    int split = lo;
    int best = -1;
    for (int x = lo; x < hi; ++x) {
        int count = 0;
        for (int y = c.bbox.y0; y < c.bbox.y1(); ++y) {
            if (lab.labels[static_cast<std::size_t>(y) * lab.width + x] == c.label) ++count;
        }
        if (best < 0 || count < best) {
            best = count;
            split = x;
        }
    }
    BinaryMask left_half(lab.width, lab.height);
    BinaryMask right_half(lab.width, lab.height);
    for (int y = c.bbox.y0; y < c.bbox.y1(); ++y) {
        for (int x = c.bbox.x0; x < c.bbox.x1(); ++x) {
            if (lab.labels[static_cast<std::size_t>(y) * lab.width + x] != c.label || x == split) continue;
            (x < split ? left_half : right_half).set(x, y, true);
        }
    }
    if (left_half.count() == 0 || right_half.count() == 0) return std::nullopt;
    const Rect left_box = bbox_of(left_half);
    const Rect right_box = bbox_of(right_half);
    return make_fields(Lung{std::move(left_half), left_box}, Lung{std::move(right_half), right_box});
}

}  // namespace

LungFields full_image_halves(int width, int height) {
    const int left_w = std::max(1, width / 2);
    Lung right{BinaryMask(width, height), Rect{0, 0, left_w, height}};
    Lung left{BinaryMask(width, height), Rect{std::min(left_w, width - 1), 0, std::max(1, width - left_w), height}};
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (x < left_w) {
                right.mask.set(x, y, true);
            } else {
                left.mask.set(x, y, true);
            }
        }
    }
    LungFields lf = make_fields(std::move(right), std::move(left));
    lf.degraded = true;
    return lf;
}

LungFields extract_lung_fields(const ProbMap& m, const LungExtractionConfig& cfg) {
    if (m.empty()) throw Error(ErrorCode::EmptyMap, "lung map has no pixels");
    const Labeling lab = label_components(threshold_map(m, cfg.threshold));
    const double image_area = static_cast<double>(m.width()) * m.height();

    std::vector<const Component*> kept;
    for (const auto& c : lab.components) {
        if (static_cast<double>(c.pixels) >= cfg.min_area_frac * image_area) kept.push_back(&c);
    }

    if (kept.size() >= 2) {
        const Component* a = kept[0];
        const Component* b = kept[1];
        if (std::tuple(b->centroid_x, b->bbox.x0) < std::tuple(a->centroid_x, a->bbox.x0)) std::swap(a, b);
        return make_fields(Lung{lab.mask_of(*a), a->bbox}, Lung{lab.mask_of(*b), b->bbox});
    }
    if (kept.size() == 1 && kept[0]->bbox.w > cfg.split_width_frac * m.width()) {
        if (auto split = split_component(lab, *kept[0])) return std::move(*split);
    }
    return full_image_halves(m.width(), m.height());
}

Rect lung_crop_box(const LungFields& lf, double margin_frac, int image_width, int image_height) {
    if (!(margin_frac >= 0.0 && margin_frac <= 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "crop margin must be in [0, 0.5]");
    }
    const Rect u = union_rect(lf.patient_right.bbox, lf.patient_left.bbox);
    const int dx = static_cast<int>(std::lround(margin_frac * u.w));
    const int dy = static_cast<int>(std::lround(margin_frac * u.h));
    const int x0 = std::clamp(u.x0 - dx, 0, image_width - 1);
    const int y0 = std::clamp(u.y0 - dy, 0, image_height - 1);
    const int x1 = std::clamp(u.x1() + dx, x0 + 1, image_width);
    const int y1 = std::clamp(u.y1() + dy, y0 + 1, image_height);
    return Rect{x0, y0, x1 - x0, y1 - y0};
}

double seg_score(const ProbMap& m) {
    if (m.empty()) throw Error(ErrorCode::EmptyMap, "segmentation map has no pixels");
    double best = 0.0;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            double sum = 0.0;
            for (int ny = std::max(0, y - 1); ny <= std::min(m.height() - 1, y + 1); ++ny) {
                for (int nx = std::max(0, x - 1); nx <= std::min(m.width() - 1, x + 1); ++nx) sum += m.at(nx, ny);
            }
            best = std::max(best, sum / 9.0);
        }
    }
    return std::clamp(best, 0.0, 1.0);
}

}  // namespace ptx
