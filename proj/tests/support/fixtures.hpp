#pragma once

#include <string>

#include "ptx/pipeline.hpp"
#include "ptx/report_nlp.hpp"

namespace ptx::test {

/// Completed (or non-frontal) pipeline result with every score set to
/// `ptx` and the tube head answering `tube`.
inline StudyResult make_result(const std::string& id, bool frontal, double ptx, double tube) {
    StudyResult r;
    r.study_id = id;
    r.view_score = frontal ? 0.9 : 0.1;
    r.frontal = frontal;
    if (!frontal) {
        r.status = ResultStatus::SkippedNonFrontal;
        r.skip_reason = "non-frontal";
        return r;
    }
    PtxScores s;
    s.a_full = s.b_patch = s.c_seg = s.ens_ac = s.ens_abc = s.ensemble = ptx;
    s.b_per_patch = {ptx, ptx, ptx, ptx};
    r.scores = s;
    r.tube = TubeResult{tube, 0.0, tube};
    return r;
}

inline ReportClassification make_nlp(bool positive) {
    ReportClassification c;
    c.positive = positive;
    return c;
}

}  // namespace ptx::test
