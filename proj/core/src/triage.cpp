#include "ptx/triage.hpp"

#include "ptx/error.hpp"

namespace ptx {

TriageDecision decide(const StudyResult& result, const ReportClassification& nlp, const PipelineConfig& cfg) {
    TriageDecision d;
    d.study_id = result.study_id;
    d.ptx_threshold = cfg.ptx_threshold;
    d.tube_threshold = cfg.tube_threshold;
    d.reasons.nlp_negative = !nlp.positive;

    switch (result.status) {
        case ResultStatus::Error:
            throw Error(ErrorCode::IncompleteResult,
                        "study '" + result.study_id + "' failed at stage " + result.error_stage);
        case ResultStatus::SkippedNonFrontal:
            d.reasons.frontal = false;
            d.flagged = false;
            d.note = "non-frontal";
            return d;
        case ResultStatus::Ok: break;
    }
    if (!result.complete()) {
        throw Error(ErrorCode::IncompleteResult, "study '" + result.study_id + "' has no scores");
    }
    d.reasons.frontal = result.frontal;
    d.reasons.tube_negative = result.tube->any < cfg.tube_threshold;
    d.reasons.ptx_positive = result.scores->ensemble >= cfg.ptx_threshold;
    d.flagged = d.reasons.all();
    return d;
}

std::string_view to_string(AdjudicationDecision d) noexcept {
    switch (d) {
        case AdjudicationDecision::ConfirmedMissed: return "confirmed_missed";
        case AdjudicationDecision::NotMissed: return "not_missed";
        case AdjudicationDecision::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

std::optional<AdjudicationDecision> parse_adjudication(std::string_view s) noexcept {
    for (auto d : {AdjudicationDecision::ConfirmedMissed, AdjudicationDecision::NotMissed,
                   AdjudicationDecision::Indeterminate}) {
        if (to_string(d) == s) return d;
    }
    return std::nullopt;
}

}  // namespace ptx
