#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptx/backends.hpp"
#include "ptx/imaging.hpp"
#include "ptx/segpost.hpp"
#include "ptx/study.hpp"

namespace ptx {

/// Pneumothorax scorers: A full-image classifier on the lung crop, B patch
/// classifier, C segmentation-derived score.
enum class Member { A, B, C };

std::string_view to_string(Member m) noexcept;
std::optional<Member> parse_member(std::string_view s) noexcept;

struct PipelineConfig {
    double view_threshold = 0.5;
    int patch_out_size = 224;
    /// Side length of the lung-cropped image fed to ptx_full and ptx_seg.
    int model_input_size = 224;
    double crop_margin = 0.05;
    std::vector<Member> ensemble_members = {Member::A, Member::B, Member::C};
    double ptx_threshold = 0.5;
    double tube_threshold = 0.5;
    bool normalize_inputs = true;
    LungExtractionConfig lung;

    /// Throws InvalidArgument when a field is out of range.
    void validate() const;
};

struct PtxScores {
    double a_full = 0.0;
    double b_patch = 0.0;
    std::array<double, 4> b_per_patch{};  // indexed in kPatchOrder
    double c_seg = 0.0;
    double ens_ac = 0.0;
    double ens_abc = 0.0;
    /// Mean over PipelineConfig::ensemble_members; what triage thresholds.
    double ensemble = 0.0;
};

struct TubeResult {
    double standard = 0.0;
    double pigtail = 0.0;
    double any = 0.0;
};

enum class ResultStatus { Ok, SkippedNonFrontal, Error };
std::string_view to_string(ResultStatus s) noexcept;

struct StageTiming {
    std::string stage;
    double ms = 0.0;
};

struct StudyResult {
    std::string study_id;
    ResultStatus status = ResultStatus::Ok;
    std::optional<double> view_score;
    bool frontal = false;
    std::string skip_reason;
    std::string error_stage;
    std::string error;
    std::optional<PtxScores> scores;
    std::optional<TubeResult> tube;
    bool degraded_lungs = false;
    std::optional<Rect> crop_rect;
    std::optional<std::array<Rect, 4>> patch_rects;
    std::vector<StageTiming> timings;

    bool complete() const noexcept { return status == ResultStatus::Ok && scores && tube; }
};

struct ViewDecision {
    bool frontal = false;
    double score = 0.0;
};

ViewDecision classify_view(const ImageGray& img, Backend& backend, const PipelineConfig& cfg,
                           const InferenceContext& ctx = {});

double aggregate_patch_scores(const std::array<double, 4>& scores) noexcept;

/// Unweighted mean over `members`. Throws MissingMember.
double ensemble(const std::map<Member, double>& scores, std::span<const Member> members);

/// Runs the image pipeline on an already-loaded image. Stage failures are
/// captured in the returned result rather than thrown.
StudyResult run_study_image(const std::string& study_id, const ImageGray& img, Backend& backend,
                            const PipelineConfig& cfg);

/// Loads the study image and runs the pipeline.
StudyResult run_study(const StudyRecord& study, Backend& backend, const PipelineConfig& cfg);

/// Runs studies on `workers` threads (0 = hardware concurrency). Output
/// order matches input order.
std::vector<StudyResult> run_studies(std::span<const StudyRecord> studies, Backend& backend,
                                     const PipelineConfig& cfg, unsigned workers = 0);

}  // namespace ptx
