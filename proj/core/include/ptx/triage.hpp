#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ptx/pipeline.hpp"
#include "ptx/report_nlp.hpp"

namespace ptx {

struct TriagePredicates {
    bool frontal = false;
    bool nlp_negative = false;
    bool tube_negative = false;
    bool ptx_positive = false;

    /// A study is flagged only when every predicate holds.
    bool all() const noexcept { return frontal && nlp_negative && tube_negative && ptx_positive; }
};

struct TriageDecision {
    std::string study_id;
    bool flagged = false;
    TriagePredicates reasons;
    double ptx_threshold = 0.5;
    double tube_threshold = 0.5;
    std::string note;
};

/// Flags a potential missed pneumothorax: frontal view, report negative,
/// no chest tube, image positive. Throws IncompleteResult for an errored
/// pipeline result.
TriageDecision decide(const StudyResult& result, const ReportClassification& nlp, const PipelineConfig& cfg);

enum class AdjudicationDecision { ConfirmedMissed, NotMissed, Indeterminate };

std::string_view to_string(AdjudicationDecision d) noexcept;
std::optional<AdjudicationDecision> parse_adjudication(std::string_view s) noexcept;

struct AdjudicationRecord {
    std::string study_id;
    AdjudicationDecision decision = AdjudicationDecision::Indeterminate;
    std::string reviewer_id;
    std::string note;
    std::int64_t timestamp = 0;  // UTC seconds
};

}  // namespace ptx
