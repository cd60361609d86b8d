#include "ptx/study.hpp"

#include <fstream>
#include <sstream>

#include "ptx/error.hpp"

namespace ptx {

std::string_view to_string(ViewPosition v) noexcept {
    switch (v) {
        case ViewPosition::AP: return "AP";
        case ViewPosition::PA: return "PA";
        case ViewPosition::Lateral: return "LATERAL";
        case ViewPosition::Other: return "OTHER";
    }
    return "OTHER";
}

std::string_view to_string(TubeType t) noexcept { return t == TubeType::Standard ? "standard" : "pigtail"; }

std::string_view to_string(StudyStatus s) noexcept {
    switch (s) {
        case StudyStatus::Ingested: return "ingested";
        case StudyStatus::Processed: return "processed";
        case StudyStatus::Flagged: return "flagged";
        case StudyStatus::Adjudicated: return "adjudicated";
        case StudyStatus::Errored: return "errored";
        case StudyStatus::SkippedNonFrontal: return "skipped_non_frontal";
    }
    return "unknown";
}

std::optional<ViewPosition> parse_view(std::string_view s) noexcept {
    for (auto v : {ViewPosition::AP, ViewPosition::PA, ViewPosition::Lateral, ViewPosition::Other}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::optional<TubeType> parse_tube_type(std::string_view s) noexcept {
    if (s == "standard") return TubeType::Standard;
    if (s == "pigtail") return TubeType::Pigtail;
    return std::nullopt;
}

std::optional<StudyStatus> parse_status(std::string_view s) noexcept {
    for (auto st : {StudyStatus::Ingested, StudyStatus::Processed, StudyStatus::Flagged, StudyStatus::Adjudicated,
                    StudyStatus::Errored, StudyStatus::SkippedNonFrontal}) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

std::string load_report(const StudyRecord& study) {
    if (study.report_text) return *study.report_text;
    if (!study.report_path) return {};
    std::ifstream in(*study.report_path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read report " + study.report_path->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace ptx
