#include "ptx/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <type_traits>

#include "ptx/error.hpp"
#include "ptx/parallel.hpp"
#include "ptx/patches.hpp"

namespace ptx {

std::string_view to_string(Member m) noexcept {
    switch (m) {
        case Member::A: return "A";
        case Member::B: return "B";
        case Member::C: return "C";
    }
    return "?";
}

std::optional<Member> parse_member(std::string_view s) noexcept {
    if (s == "A" || s == "a") return Member::A;
    if (s == "B" || s == "b") return Member::B;
    if (s == "C" || s == "c") return Member::C;
    return std::nullopt;
}

std::string_view to_string(ResultStatus s) noexcept {
    switch (s) {
        case ResultStatus::Ok: return "ok";
        case ResultStatus::SkippedNonFrontal: return "skipped_non_frontal";
        case ResultStatus::Error: return "error";
    }
    return "error";
}

void PipelineConfig::validate() const {
    auto unit = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be in [0, 1]");
    };
    unit(view_threshold, "view_threshold");
    unit(ptx_threshold, "ptx_threshold");
    unit(tube_threshold, "tube_threshold");
    unit(lung.threshold, "lung.threshold");
    unit(lung.min_area_frac, "lung.min_area_frac");
    unit(lung.split_width_frac, "lung.split_width_frac");
    if (!(crop_margin >= 0.0 && crop_margin <= 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "crop_margin must be in [0, 0.5]");
    }
    if (patch_out_size < 8) throw Error(ErrorCode::InvalidArgument, "patch_out_size must be >= 8");
    if (model_input_size < 8) throw Error(ErrorCode::InvalidArgument, "model_input_size must be >= 8");
    if (ensemble_members.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble_members must be nonempty");
}

ViewDecision classify_view(const ImageGray& img, Backend& backend, const PipelineConfig& cfg,
                           const InferenceContext& ctx) {
    const double score = infer_scalar(backend, ctx, ModelId::View, img);
    return ViewDecision{score >= cfg.view_threshold, score};
}

double aggregate_patch_scores(const std::array<double, 4>& scores) noexcept {
    return *std::max_element(scores.begin(), scores.end());
}

double ensemble(const std::map<Member, double>& scores, std::span<const Member> members) {
    if (members.empty()) throw Error(ErrorCode::InvalidArgument, "empty ensemble");
    double sum = 0.0;
    for (Member m : members) {
        const auto it = scores.find(m);
        if (it == scores.end()) throw Error(ErrorCode::MissingMember, std::string(to_string(m)));
        sum += it->second;
    }
    return sum / static_cast<double>(members.size());
}

namespace {

class StageClock {
public:
    StageClock(StudyResult& result, std::string& current) : result_(result), current_(current) {}

    template <typename Fn>
    auto run(const char* stage, Fn&& fn) {
        current_ = stage;
        const auto start = std::chrono::steady_clock::now();
        auto finish = [&] {
            const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
            result_.timings.push_back(StageTiming{stage, ms.count()});
        };
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            finish();
        } else {
            auto value = fn();
            finish();
            return value;
        }
    }

private:
    StudyResult& result_;
    std::string& current_;
};

}  // namespace

StudyResult run_study_image(const std::string& study_id, const ImageGray& img, Backend& backend,
                            const PipelineConfig& cfg) {
    StudyResult result;
    result.study_id = study_id;
    std::string stage = "config";
    StageClock clock(result, stage);
    try {
        cfg.validate();
        auto prepare = [&](const ImageGray& in) { return cfg.normalize_inputs ? normalize_minmax(in) : in; };
        const InferenceContext ctx{study_id, std::nullopt};
        const ImageGray full = prepare(img);

        const ViewDecision view = clock.run("view", [&] { return classify_view(full, backend, cfg, ctx); });
        result.view_score = view.score;
        result.frontal = view.frontal;
        if (!view.frontal) {
            result.status = ResultStatus::SkippedNonFrontal;
            result.skip_reason = "non-frontal";
            return result;
        }

        const LungFields lungs = clock.run("lung_seg", [&] {
            return extract_lung_fields(infer_map(backend, ctx, ModelId::LungSeg, full), cfg.lung);
        });
        result.degraded_lungs = lungs.degraded;
        const Rect crop_box = lung_crop_box(lungs, cfg.crop_margin, img.width(), img.height());
        result.crop_rect = crop_box;
        const ImageGray lung_crop =
            prepare(resize_bilinear(crop(img, crop_box), cfg.model_input_size, cfg.model_input_size));

        PtxScores scores;
        scores.a_full = clock.run("ptx_full", [&] { return infer_scalar(backend, ctx, ModelId::PtxFull, lung_crop); });

        clock.run("ptx_patch", [&] {
            std::array<Patch, 4> patches;
            try {
                patches = extract_patches(img, lungs, cfg.patch_out_size);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateLung) throw;
                result.degraded_lungs = true;
                patches = extract_patches(img, full_image_halves(img.width(), img.height()), cfg.patch_out_size);
            }
            std::array<Rect, 4> rects;
            for (std::size_t i = 0; i < patches.size(); ++i) {
                const InferenceContext patch_ctx{study_id, patches[i].tag};
                scores.b_per_patch[i] = infer_scalar(backend, patch_ctx, ModelId::PtxPatch, prepare(patches[i].image));
                rects[i] = patches[i].source_rect;
            }
            result.patch_rects = rects;
            scores.b_patch = aggregate_patch_scores(scores.b_per_patch);
        });

        scores.c_seg = clock.run("ptx_seg", [&] { return seg_score(infer_map(backend, ctx, ModelId::PtxSeg, lung_crop)); });

        const std::map<Member, double> members{
            {Member::A, scores.a_full}, {Member::B, scores.b_patch}, {Member::C, scores.c_seg}};
        constexpr Member kAC[] = {Member::A, Member::C};
        constexpr Member kABC[] = {Member::A, Member::B, Member::C};
        scores.ens_ac = ensemble(members, kAC);
        scores.ens_abc = ensemble(members, kABC);
        scores.ensemble = ensemble(members, cfg.ensemble_members);

        const TubeScores tube = clock.run("tube", [&] { return infer_tube(backend, ctx, full); });
        result.scores = scores;
        result.tube = TubeResult{tube.standard, tube.pigtail, tube.any()};
    } catch (const std::exception& e) {
        result.status = ResultStatus::Error;
        result.error_stage = stage;
        result.error = e.what();
        result.scores.reset();
        result.tube.reset();
    }
    return result;
}

StudyResult run_study(const StudyRecord& study, Backend& backend, const PipelineConfig& cfg) {
    ImageGray img;
    try {
        img = load_pgm_file(study.image_path);
    } catch (const std::exception& e) {
        StudyResult result;
        result.study_id = study.study_id;
        result.status = ResultStatus::Error;
        result.error_stage = "image_load";
        result.error = std::string("ImageLoadError: ") + e.what();
        return result;
    }
    return run_study_image(study.study_id, img, backend, cfg);
}

std::vector<StudyResult> run_studies(std::span<const StudyRecord> studies, Backend& backend,
                                     const PipelineConfig& cfg, unsigned workers) {
    std::vector<StudyResult> out(studies.size());
    parallel_for(studies.size(), workers, [&](std::size_t i) { out[i] = run_study(studies[i], backend, cfg); });
    return out;
}

}  // namespace ptx
