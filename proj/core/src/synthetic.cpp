#include "ptx/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "ptx/backends.hpp"
#include "ptx/error.hpp"
#include "ptx/json.hpp"

namespace ptx {

namespace {

enum class Kind { Planted, TubePositive, TubeNegative, ReportedPositive, Lateral, Negative };

constexpr std::array<std::string_view, 4> kSilentReports = {
    "FINDINGS: Heart size is normal. No focal consolidation or pleural effusion.\nIMPRESSION: No acute cardiopulmonary process.",
    "Lungs are clear. Cardiomediastinal silhouette within normal limits.",
    "FINDINGS:\nStable postoperative changes. No acute osseous abnormality.",
    "IMPRESSION: No acute findings.",
};

constexpr std::array<std::string_view, 3> kNegatedReports = {
    "No pneumothorax or pleural effusion. Lungs are clear.",
    "FINDINGS: No evidence of pneumothorax. Heart size normal.",
    "IMPRESSION: Negative for pneumothorax.",
};

constexpr std::array<std::string_view, 3> kPositiveReports = {
    "Small right apical pneumothorax.",
    "FINDINGS: Moderate left pneumothorax with mild mediastinal shift.",
    "IMPRESSION: Cannot exclude small basilar pneumothorax.",
};

constexpr std::array<std::string_view, 2> kTubeReports = {
    "Right chest tube in place. No focal consolidation.",
    "Left pigtail catheter in place. Lungs otherwise clear.",
};

}  // namespace

ImageGray synthetic_radiograph(int width, int height) {
    ImageGray img(width, height, 0.0f);
    const auto lungs = stub_lung_rects(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            float v = 0.55f + 0.25f * static_cast<float>(y) / static_cast<float>(std::max(1, height - 1));
            for (const Rect& r : lungs) {
                if (x >= r.x0 && x < r.x1() && y >= r.y0 && y < r.y1()) v = 0.15f + 0.1f * ((x + y) % 2);
            }
            img.set(x, y, v);
        }
    }
    return img;
}

SyntheticSet make_synthetic_set(const SyntheticSpec& spec, const std::filesystem::path& image_path) {
    const std::size_t fixed =
        spec.planted_missed + spec.tube_positive + spec.tube_negative + spec.reported_positive + spec.lateral;
    if (fixed > spec.studies) throw Error(ErrorCode::InvalidArgument, "category counts exceed study count");

    std::vector<Kind> kinds;
    kinds.insert(kinds.end(), spec.planted_missed, Kind::Planted);
    kinds.insert(kinds.end(), spec.tube_positive, Kind::TubePositive);
    kinds.insert(kinds.end(), spec.tube_negative, Kind::TubeNegative);
    kinds.insert(kinds.end(), spec.reported_positive, Kind::ReportedPositive);
    kinds.insert(kinds.end(), spec.lateral, Kind::Lateral);
    kinds.insert(kinds.end(), spec.studies - fixed, Kind::Negative);
    std::mt19937_64 rng(spec.seed);
    std::shuffle(kinds.begin(), kinds.end(), rng);

    SyntheticSet set;
    std::array<std::size_t, 6> seen{};
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const Kind kind = kinds[i];
        const std::size_t n = seen[static_cast<std::size_t>(kind)]++;
        char id[32];
        std::snprintf(id, sizeof id, "S%05zu", i + 1);

        OracleRecord o;
        o.view = n % 2 == 0 ? ViewPosition::PA : ViewPosition::AP;
        std::string report;
        switch (kind) {
            case Kind::Planted:
                o.pneumothorax = true;
                o.location = kPatchOrder[n % kPatchOrder.size()];
                report = kSilentReports[n % kSilentReports.size()];
                set.planted_ids.emplace_back(id);
                break;
            case Kind::TubePositive:
                o.pneumothorax = true;
                o.chest_tube = true;
                o.tube_type = n % 2 == 0 ? TubeType::Standard : TubeType::Pigtail;
                o.location = kPatchOrder[n % kPatchOrder.size()];
                report = kTubeReports[n % kTubeReports.size()];
                break;
            case Kind::TubeNegative:
                o.chest_tube = true;
                o.tube_type = n % 2 == 0 ? TubeType::Pigtail : TubeType::Standard;
                report = kTubeReports[n % kTubeReports.size()];
                break;
            case Kind::ReportedPositive:
                o.pneumothorax = true;
                o.location = kPatchOrder[n % kPatchOrder.size()];
                report = kPositiveReports[n % kPositiveReports.size()];
                break;
            case Kind::Lateral:
                o.pneumothorax = true;
                o.view = ViewPosition::Lateral;
                report = kSilentReports[n % kSilentReports.size()];
                break;
            case Kind::Negative:
                report = n % 2 == 0 ? kNegatedReports[(n / 2) % kNegatedReports.size()]
                                    : kSilentReports[(n / 2) % kSilentReports.size()];
                break;
        }
        StudyRecord s;
        s.study_id = id;
        s.image_path = image_path;
        s.report_text = report;
        s.labels = StudyLabels{o.pneumothorax, o.chest_tube, o.tube_type, o.view};
        s.oracle = o;
        set.studies.push_back(std::move(s));
    }
    return set;
}

SyntheticSet write_synthetic_set(const SyntheticSpec& spec, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_pgm_file(synthetic_radiograph(spec.image_size, spec.image_size), dir / "radiograph.pgm");
    SyntheticSet set = make_synthetic_set(spec, "radiograph.pgm");
    std::ofstream out(dir / "manifest.jsonl", std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileUnreadable, "cannot write manifest in " + dir.string());
    for (const auto& s : set.studies) out << nlohmann::json(s).dump() << '\n';
    for (auto& s : set.studies) s.image_path = dir / s.image_path;
    return set;
}

}  // namespace ptx
