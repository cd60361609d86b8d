#include "ptx/json.hpp"

#include "ptx/error.hpp"

namespace ptx {

namespace {

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::ValidationError, message); }

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) invalid(std::string(key) + " is missing");
    return j.at(key);
}

bool require_bool(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_boolean()) invalid(std::string(key) + " must be a boolean");
    return v.get<bool>();
}

std::string require_string(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string() || v.get_ref<const std::string&>().empty()) {
        invalid(std::string(key) + " must be a nonempty string");
    }
    return v.get<std::string>();
}

double require_number(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number()) invalid(std::string(key) + " must be a number");
    return v.get<double>();
}

bool present(const json& j, const char* key) { return j.is_object() && j.contains(key) && !j.at(key).is_null(); }

template <typename T, typename Parse>
std::optional<T> optional_enum(const json& j, const char* key, Parse parse) {
    if (!present(j, key)) return std::nullopt;
    const json& v = j.at(key);
    if (!v.is_string()) invalid(std::string(key) + " must be a string");
    auto parsed = parse(v.get<std::string>());
    if (!parsed) invalid(std::string(key) + " has unknown value '" + v.get<std::string>() + "'");
    return parsed;
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
    if (v) {
        j[key] = *v;
    } else {
        j[key] = nullptr;
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() || base.empty() ? path : base / path).lexically_normal();
}

}  // namespace

void to_json(json& j, const Rect& r) { j = json{{"x0", r.x0}, {"y0", r.y0}, {"w", r.w}, {"h", r.h}}; }

void from_json(const json& j, Rect& r) {
    r = Rect{j.at("x0").get<int>(), j.at("y0").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

void to_json(json& j, const StudyLabels& l) {
    j = json{{"pneumothorax", l.pneumothorax}, {"chest_tube", l.chest_tube}};
    j["tube_type"] = l.tube_type ? json(to_string(*l.tube_type)) : json(nullptr);
    j["view"] = l.view ? json(to_string(*l.view)) : json(nullptr);
}

void from_json(const json& j, StudyLabels& l) {
    l.pneumothorax = require_bool(j, "pneumothorax");
    l.chest_tube = require_bool(j, "chest_tube");
    l.tube_type = optional_enum<TubeType>(j, "tube_type", parse_tube_type);
    l.view = optional_enum<ViewPosition>(j, "view", parse_view);
}

void to_json(json& j, const OracleRecord& o) {
    j = json{{"pneumothorax", o.pneumothorax}, {"chest_tube", o.chest_tube}, {"view", to_string(o.view)}};
    j["tube_type"] = o.tube_type ? json(to_string(*o.tube_type)) : json(nullptr);
    j["location"] = o.location ? json(to_string(*o.location)) : json(nullptr);
}

void from_json(const json& j, OracleRecord& o) {
    o.pneumothorax = require_bool(j, "pneumothorax");
    o.chest_tube = require_bool(j, "chest_tube");
    o.tube_type = optional_enum<TubeType>(j, "tube_type", parse_tube_type);
    o.view = optional_enum<ViewPosition>(j, "view", parse_view).value_or(ViewPosition::PA);
    o.location = optional_enum<PatchTag>(j, "location", parse_patch_tag);
}

void to_json(json& j, const StudyRecord& s) {
    j = json{{"study_id", s.study_id}, {"image_path", s.image_path.string()}};
    if (s.report_text) j["report"] = *s.report_text;
    if (s.report_path) j["report_path"] = s.report_path->string();
    if (s.labels) j["labels"] = *s.labels;
    if (s.oracle) j["oracle"] = *s.oracle;
}

void from_json(const json& j, StudyRecord& s) { s = parse_manifest_line(j, {}); }

StudyRecord parse_manifest_line(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) invalid("line is not a JSON object");
    StudyRecord s;
    s.study_id = require_string(j, "study_id");
    s.image_path = resolve(base_dir, require_string(j, "image_path"));
    const bool has_text = present(j, "report");
    const bool has_path = present(j, "report_path");
    if (has_text == has_path) invalid("exactly one of report / report_path is required");
    if (has_text) {
        if (!j.at("report").is_string()) invalid("report must be a string");
        s.report_text = j.at("report").get<std::string>();
    } else {
        s.report_path = resolve(base_dir, require_string(j, "report_path"));
    }
    auto nested = [&](const char* key, auto& out) {
        if (!present(j, key)) return;
        try {
            out = j.at(key).get<typename std::remove_reference_t<decltype(out)>::value_type>();
        } catch (const Error& e) {
            invalid(std::string(key) + "." + e.detail());
        }
    };
    nested("labels", s.labels);
    nested("oracle", s.oracle);
    return s;
}

void to_json(json& j, const PipelineConfig& c) {
    json members = json::array();
    for (Member m : c.ensemble_members) members.push_back(to_string(m));
    j = json{{"view_threshold", c.view_threshold},
             {"patch_out_size", c.patch_out_size},
             {"model_input_size", c.model_input_size},
             {"crop_margin", c.crop_margin},
             {"ensemble_members", members},
             {"ptx_threshold", c.ptx_threshold},
             {"tube_threshold", c.tube_threshold},
             {"normalize_inputs", c.normalize_inputs},
             {"lung",
              {{"threshold", c.lung.threshold},
               {"min_area_frac", c.lung.min_area_frac},
               {"split_width_frac", c.lung.split_width_frac}}}};
}

void from_json(const json& j, PipelineConfig& c) {
    if (!j.is_object()) invalid("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "view_threshold") {
            c.view_threshold = require_number(j, "view_threshold");
        } else if (key == "ptx_threshold") {
            c.ptx_threshold = require_number(j, "ptx_threshold");
        } else if (key == "tube_threshold") {
            c.tube_threshold = require_number(j, "tube_threshold");
        } else if (key == "crop_margin") {
            c.crop_margin = require_number(j, "crop_margin");
        } else if (key == "patch_out_size" || key == "model_input_size") {
            if (!value.is_number_integer()) invalid(key + " must be an integer");
            (key == "patch_out_size" ? c.patch_out_size : c.model_input_size) = value.get<int>();
        } else if (key == "normalize_inputs") {
            c.normalize_inputs = require_bool(j, "normalize_inputs");
        } else if (key == "ensemble_members") {
            if (!value.is_array()) invalid("ensemble_members must be an array");
            c.ensemble_members.clear();
            for (const auto& m : value) {
                const auto member = m.is_string() ? parse_member(m.get<std::string>()) : std::nullopt;
                if (!member) invalid("ensemble_members entries must be A, B or C");
                c.ensemble_members.push_back(*member);
            }
        } else if (key == "lung") {
            if (!value.is_object()) invalid("lung must be an object");
            for (const auto& [lk, lv] : value.items()) {
                if (!lv.is_number()) invalid("lung." + lk + " must be a number");
                if (lk == "threshold") {
                    c.lung.threshold = lv.get<float>();
                } else if (lk == "min_area_frac") {
                    c.lung.min_area_frac = lv.get<double>();
                } else if (lk == "split_width_frac") {
                    c.lung.split_width_frac = lv.get<double>();
                } else {
                    invalid("unknown config key lung." + lk);
                }
            }
        } else {
            invalid("unknown config key " + key);
        }
    }
    try {
        c.validate();
    } catch (const Error& e) {
        invalid(e.detail());
    }
}

void to_json(json& j, const PtxScores& s) {
    json per_patch = json::object();
    for (std::size_t i = 0; i < kPatchOrder.size(); ++i) per_patch[std::string(to_string(kPatchOrder[i]))] = s.b_per_patch[i];
    j = json{{"a_full", s.a_full}, {"b_patch", s.b_patch}, {"b_per_patch", per_patch}, {"c_seg", s.c_seg},
             {"ens_ac", s.ens_ac}, {"ens_abc", s.ens_abc}, {"ensemble", s.ensemble}};
}

void from_json(const json& j, PtxScores& s) {
    s.a_full = j.at("a_full").get<double>();
    s.b_patch = j.at("b_patch").get<double>();
    for (std::size_t i = 0; i < kPatchOrder.size(); ++i) {
        s.b_per_patch[i] = j.at("b_per_patch").at(std::string(to_string(kPatchOrder[i]))).get<double>();
    }
    s.c_seg = j.at("c_seg").get<double>();
    s.ens_ac = j.at("ens_ac").get<double>();
    s.ens_abc = j.at("ens_abc").get<double>();
    s.ensemble = j.value("ensemble", s.ens_abc);
}

void to_json(json& j, const TubeResult& t) {
    j = json{{"standard", t.standard}, {"pigtail", t.pigtail}, {"any", t.any}};
}

void from_json(const json& j, TubeResult& t) {
    t.standard = j.at("standard").get<double>();
    t.pigtail = j.at("pigtail").get<double>();
    t.any = j.at("any").get<double>();
}

void to_json(json& j, const StudyResult& r) {
    j = json{{"study_id", r.study_id}, {"status", to_string(r.status)}, {"frontal", r.frontal},
             {"degraded_lungs", r.degraded_lungs}};
    put_optional(j, "view_score", r.view_score);
    if (!r.skip_reason.empty()) j["skip_reason"] = r.skip_reason;
    if (r.status == ResultStatus::Error) j["error"] = {{"stage", r.error_stage}, {"message", r.error}};
    put_optional(j, "scores", r.scores);
    put_optional(j, "tube", r.tube);
    put_optional(j, "crop_rect", r.crop_rect);
    if (r.patch_rects) {
        json rects = json::object();
        for (std::size_t i = 0; i < kPatchOrder.size(); ++i) rects[std::string(to_string(kPatchOrder[i]))] = (*r.patch_rects)[i];
        j["patch_rects"] = rects;
    } else {
        j["patch_rects"] = nullptr;
    }
    json timings = json::array();
    for (const auto& t : r.timings) timings.push_back({{"stage", t.stage}, {"ms", t.ms}});
    j["timings"] = timings;
}

void from_json(const json& j, StudyResult& r) {
    r = StudyResult{};
    r.study_id = j.at("study_id").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status == "ok") {
        r.status = ResultStatus::Ok;
    } else if (status == "skipped_non_frontal") {
        r.status = ResultStatus::SkippedNonFrontal;
    } else if (status == "error") {
        r.status = ResultStatus::Error;
    } else {
        invalid("unknown result status '" + status + "'");
    }
    r.frontal = j.value("frontal", false);
    r.degraded_lungs = j.value("degraded_lungs", false);
    if (present(j, "view_score")) r.view_score = j.at("view_score").get<double>();
    r.skip_reason = j.value("skip_reason", std::string{});
    if (present(j, "error")) {
        r.error_stage = j.at("error").value("stage", std::string{});
        r.error = j.at("error").value("message", std::string{});
    }
    if (present(j, "scores")) r.scores = j.at("scores").get<PtxScores>();
    if (present(j, "tube")) r.tube = j.at("tube").get<TubeResult>();
    if (present(j, "crop_rect")) r.crop_rect = j.at("crop_rect").get<Rect>();
    if (present(j, "patch_rects")) {
        std::array<Rect, 4> rects;
        for (std::size_t i = 0; i < kPatchOrder.size(); ++i) {
            rects[i] = j.at("patch_rects").at(std::string(to_string(kPatchOrder[i]))).get<Rect>();
        }
        r.patch_rects = rects;
    }
    if (present(j, "timings")) {
        for (const auto& t : j.at("timings")) r.timings.push_back({t.at("stage").get<std::string>(), t.at("ms").get<double>()});
    }
}

void to_json(json& j, const Mention& m) {
    j = json{{"sentence_index", m.sentence_index},
             {"span", {m.start, m.end}},
             {"polarity", to_string(m.polarity)},
             {"uncertain", m.uncertain}};
    if (!m.negation_cue.empty()) j["negation_cue"] = m.negation_cue;
}

void from_json(const json& j, Mention& m) {
    m.sentence_index = j.at("sentence_index").get<int>();
    m.start = j.at("span").at(0).get<std::size_t>();
    m.end = j.at("span").at(1).get<std::size_t>();
    const auto p = j.at("polarity").get<std::string>();
    m.polarity = p == "positive" ? Polarity::Positive : p == "negated" ? Polarity::Negated : Polarity::None;
    m.uncertain = j.value("uncertain", false);
    m.negation_cue = j.value("negation_cue", std::string{});
}

void to_json(json& j, const ReportClassification& c) {
    j = json{{"positive", c.positive}, {"mentions", c.mentions}, {"sentence_count", c.sentence_count}};
}

void from_json(const json& j, ReportClassification& c) {
    c.positive = j.at("positive").get<bool>();
    c.mentions = j.at("mentions").get<std::vector<Mention>>();
    c.sentence_count = j.at("sentence_count").get<int>();
}

void to_json(json& j, const TriageDecision& d) {
    j = json{{"study_id", d.study_id},
             {"flagged", d.flagged},
             {"reasons",
              {{"frontal", d.reasons.frontal},
               {"nlp_negative", d.reasons.nlp_negative},
               {"tube_negative", d.reasons.tube_negative},
               {"ptx_positive", d.reasons.ptx_positive}}},
             {"thresholds_used", {{"ptx_threshold", d.ptx_threshold}, {"tube_threshold", d.tube_threshold}}}};
    if (!d.note.empty()) j["note"] = d.note;
}

void from_json(const json& j, TriageDecision& d) {
    d.study_id = j.at("study_id").get<std::string>();
    d.flagged = j.at("flagged").get<bool>();
    const json& r = j.at("reasons");
    d.reasons = TriagePredicates{r.at("frontal").get<bool>(), r.at("nlp_negative").get<bool>(),
                                 r.at("tube_negative").get<bool>(), r.at("ptx_positive").get<bool>()};
    d.ptx_threshold = j.at("thresholds_used").at("ptx_threshold").get<double>();
    d.tube_threshold = j.at("thresholds_used").at("tube_threshold").get<double>();
    d.note = j.value("note", std::string{});
}

void to_json(json& j, const AdjudicationRecord& a) {
    j = json{{"study_id", a.study_id}, {"decision", to_string(a.decision)}, {"reviewer_id", a.reviewer_id},
             {"note", a.note}, {"timestamp", a.timestamp}};
}

void from_json(const json& j, AdjudicationRecord& a) {
    a.study_id = require_string(j, "study_id");
    const auto decision = parse_adjudication(require_string(j, "decision"));
    if (!decision) invalid("decision must be confirmed_missed, not_missed or indeterminate");
    a.decision = *decision;
    a.reviewer_id = j.value("reviewer_id", std::string{});
    a.note = j.value("note", std::string{});
    a.timestamp = j.value("timestamp", std::int64_t{0});
}

void to_json(json& j, const MethodRow& r) {
    j = json{{"method", r.key}, {"method_name", r.name}};
    put_optional(j, "auc_all", r.auc_all);
    put_optional(j, "auc_no_tubes", r.auc_no_tubes);
    put_optional(j, "auc_only_tubes", r.auc_only_tubes);
    put_optional(j, "pct_change_no_tubes", r.pct_change_no_tubes);
    j["pct_change_no_tubes_display"] =
        r.pct_change_no_tubes ? json(round_display(*r.pct_change_no_tubes)) : json(nullptr);
}

void to_json(json& j, const EvalTable& t) {
    const auto& s = t.sizes;
    j = json{{"rows", t.rows},
             {"strata",
              {{"n_all", s.n_all},
               {"n_pos_all", s.n_pos_all},
               {"n_no_tubes", s.n_no_tubes},
               {"n_pos_no_tubes", s.n_pos_no_tubes},
               {"n_only_tubes", s.n_only_tubes},
               {"n_pos_only_tubes", s.n_pos_only_tubes}}},
             {"n_excluded", t.n_excluded}};
    json tube = json::object();
    put_optional(tube, "standard", t.tube_auc_standard);
    put_optional(tube, "pigtail", t.tube_auc_pigtail);
    j["tube_auc"] = tube;
}

}  // namespace ptx
