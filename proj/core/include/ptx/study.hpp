#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ptx/patches.hpp"

namespace ptx {

enum class ViewPosition { AP, PA, Lateral, Other };
enum class TubeType { Standard, Pigtail };

/// Status of a study in the store. Transitions:
/// ingested -> processed | errored | skipped_non_frontal; processed -> flagged -> adjudicated.
enum class StudyStatus { Ingested, Processed, Flagged, Adjudicated, Errored, SkippedNonFrontal };

std::string_view to_string(ViewPosition v) noexcept;
std::string_view to_string(TubeType t) noexcept;
std::string_view to_string(StudyStatus s) noexcept;
std::optional<ViewPosition> parse_view(std::string_view s) noexcept;
std::optional<TubeType> parse_tube_type(std::string_view s) noexcept;
std::optional<StudyStatus> parse_status(std::string_view s) noexcept;

inline bool is_frontal(ViewPosition v) noexcept { return v == ViewPosition::AP || v == ViewPosition::PA; }

/// Ground-truth labels, when the study belongs to an evaluation set.
struct StudyLabels {
    bool pneumothorax = false;
    bool chest_tube = false;
    std::optional<TubeType> tube_type;
    std::optional<ViewPosition> view;

    friend bool operator==(const StudyLabels&, const StudyLabels&) = default;
};

/// Truth consumed by the oracle backend: the labels plus where the
/// pneumothorax sits.
struct OracleRecord {
    bool pneumothorax = false;
    bool chest_tube = false;
    std::optional<TubeType> tube_type;
    ViewPosition view = ViewPosition::PA;
    std::optional<PatchTag> location;

    friend bool operator==(const OracleRecord&, const OracleRecord&) = default;
};

struct StudyRecord {
    std::string study_id;
    std::filesystem::path image_path;
    /// Exactly one of report_text / report_path is set.
    std::optional<std::string> report_text;
    std::optional<std::filesystem::path> report_path;
    std::optional<StudyLabels> labels;
    std::optional<OracleRecord> oracle;

    friend bool operator==(const StudyRecord&, const StudyRecord&) = default;
};

/// Inline report text, or the contents of report_path. Throws FileUnreadable.
std::string load_report(const StudyRecord& study);

}  // namespace ptx
