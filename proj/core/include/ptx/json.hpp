#pragma once

// nlohmann::json conversions for the domain types. Enums serialize as the
// lowercase strings used on the wire and in the manifest.

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ptx/eval.hpp"
#include "ptx/pipeline.hpp"
#include "ptx/report_nlp.hpp"
#include "ptx/study.hpp"
#include "ptx/triage.hpp"

namespace ptx {

using json = nlohmann::json;

void to_json(json& j, const Rect& r);
void from_json(const json& j, Rect& r);

void to_json(json& j, const StudyLabels& l);
void from_json(const json& j, StudyLabels& l);
void to_json(json& j, const OracleRecord& o);
void from_json(const json& j, OracleRecord& o);
void to_json(json& j, const StudyRecord& s);
void from_json(const json& j, StudyRecord& s);

/// Validates one manifest line and resolves relative paths against
/// `base_dir`. Throws ValidationError naming the offending field.
StudyRecord parse_manifest_line(const json& j, const std::filesystem::path& base_dir);

/// Accepts any subset of the PipelineConfig field names; unknown keys are a
/// ValidationError.
void to_json(json& j, const PipelineConfig& c);
void from_json(const json& j, PipelineConfig& c);

void to_json(json& j, const PtxScores& s);
void from_json(const json& j, PtxScores& s);
void to_json(json& j, const TubeResult& t);
void from_json(const json& j, TubeResult& t);
void to_json(json& j, const StudyResult& r);
void from_json(const json& j, StudyResult& r);

void to_json(json& j, const Mention& m);
void from_json(const json& j, Mention& m);
void to_json(json& j, const ReportClassification& c);
void from_json(const json& j, ReportClassification& c);

void to_json(json& j, const TriageDecision& d);
void from_json(const json& j, TriageDecision& d);
void to_json(json& j, const AdjudicationRecord& a);
void from_json(const json& j, AdjudicationRecord& a);

void to_json(json& j, const MethodRow& r);
void to_json(json& j, const EvalTable& t);

}  // namespace ptx
