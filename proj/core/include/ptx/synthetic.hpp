#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptx/imaging.hpp"
#include "ptx/study.hpp"

namespace ptx {

/// Composition of a generated evaluation set. Every study gets oracle truth
/// and matching labels; the image is a shared synthetic radiograph.
struct SyntheticSpec {
    std::size_t studies = 200;
    /// Frontal, pneumothorax present, no tube, report silent about it.
    std::size_t planted_missed = 10;
    /// Frontal, pneumothorax present, chest tube, report silent.
    std::size_t tube_positive = 20;
    /// Frontal, no pneumothorax, chest tube in place.
    std::size_t tube_negative = 20;
    /// Frontal, pneumothorax present and reported.
    std::size_t reported_positive = 20;
    /// Lateral view, pneumothorax present, report silent.
    std::size_t lateral = 10;
    /// Remaining studies are frontal negatives with negative reports.
    std::uint64_t seed = 1;
    int image_size = 64;
};

struct SyntheticSet {
    std::vector<StudyRecord> studies;
    std::vector<std::string> planted_ids;
};

/// Builds the study list (no files written).
SyntheticSet make_synthetic_set(const SyntheticSpec& spec, const std::filesystem::path& image_path);

/// Writes the image and `manifest.jsonl` into `dir`; returns the set.
SyntheticSet write_synthetic_set(const SyntheticSpec& spec, const std::filesystem::path& dir);

/// Chest-radiograph-like test image: dark lung fields on a brighter body.
ImageGray synthetic_radiograph(int width, int height);

}  // namespace ptx
