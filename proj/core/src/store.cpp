#include "ptx/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ptx/error.hpp"
#include "ptx/json.hpp"
#include "ptx/parallel.hpp"

namespace ptx {

std::string_view to_string(EventKind k) noexcept {
    switch (k) {
        case EventKind::Ingest: return "ingest";
        case EventKind::Result: return "result";
        case EventKind::Triage: return "triage";
        case EventKind::Adjudication: return "adjudication";
    }
    return "unknown";
}

namespace {

std::optional<EventKind> parse_kind(std::string_view s) {
    for (auto k : {EventKind::Ingest, EventKind::Result, EventKind::Triage, EventKind::Adjudication}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::int64_t now_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

struct LogContents {
    std::vector<EventLogEntry> entries;
    std::uintmax_t valid_bytes = 0;
};

LogContents read_log(const std::filesystem::path& path) {
    LogContents out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();

    std::size_t pos = 0;
    while (pos < data.size()) {
        const std::size_t nl = data.find('\n', pos);
        if (nl == std::string::npos) break;  // torn tail: the write never finished
        const std::string_view line(data.data() + pos, nl - pos);
        const bool is_last = nl + 1 == data.size();
        try {
            EventLogEntry e = parse_event_line(line);
            if (!out.entries.empty() && e.seq <= out.entries.back().seq) {
                throw Error(ErrorCode::ValidationError, "non-increasing seq " + std::to_string(e.seq));
            }
            out.entries.push_back(std::move(e));
        } catch (const std::exception& e) {
            if (is_last) break;
            throw Error(ErrorCode::ValidationError,
                        path.string() + ": corrupt entry at byte " + std::to_string(pos) + ": " + e.what());
        }
        pos = nl + 1;
        out.valid_bytes = pos;
    }
    return out;
}

double ensemble_or_lowest(const StudyState& s) {
    if (s.result && s.result->scores) return s.result->scores->ensemble;
    return -std::numeric_limits<double>::infinity();
}

StudyStatus status_after_result(ResultStatus r) {
    switch (r) {
        case ResultStatus::Ok: return StudyStatus::Processed;
        case ResultStatus::SkippedNonFrontal: return StudyStatus::SkippedNonFrontal;
        case ResultStatus::Error: return StudyStatus::Errored;
    }
    return StudyStatus::Errored;
}

}  // namespace

void to_json(nlohmann::json& j, const StudyState& s) {
    j = nlohmann::json{{"study_id", s.record.study_id}, {"record", s.record}, {"status", to_string(s.status)}};
    j["result"] = s.result ? nlohmann::json(*s.result) : nlohmann::json(nullptr);
    j["nlp"] = s.nlp ? nlohmann::json(*s.nlp) : nlohmann::json(nullptr);
    j["triage"] = s.triage ? nlohmann::json(*s.triage) : nlohmann::json(nullptr);
    j["adjudications"] = s.adjudications;
    j["flagged_at"] = s.flagged_at == 0 ? nlohmann::json(nullptr) : nlohmann::json(s.flagged_at);
}

nlohmann::json worklist_entry(const StudyState& s) {
    nlohmann::json j{{"study_id", s.record.study_id}, {"status", to_string(s.status)}};
    const bool scored = s.result && s.result->scores;
    j["ensemble_score"] = scored ? nlohmann::json(s.result->scores->ensemble) : nlohmann::json(nullptr);
    j["scores"] = scored ? nlohmann::json(*s.result->scores) : nlohmann::json(nullptr);
    j["tube"] = s.result && s.result->tube ? nlohmann::json(*s.result->tube) : nlohmann::json(nullptr);
    j["degraded_lungs"] = s.result ? s.result->degraded_lungs : false;
    j["patch_rects"] = s.result ? nlohmann::json(*s.result)["patch_rects"] : nlohmann::json(nullptr);
    j["nlp"] = s.nlp ? nlohmann::json(*s.nlp) : nlohmann::json(nullptr);
    j["thresholds_used"] = s.triage ? nlohmann::json(*s.triage)["thresholds_used"] : nlohmann::json(nullptr);
    j["flagged_at"] = s.flagged_at == 0 ? nlohmann::json(nullptr) : nlohmann::json(s.flagged_at);
    const auto* current = s.current_adjudication();
    j["adjudication"] = current ? nlohmann::json(*current) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json_line(const EventLogEntry& e) {
    return nlohmann::json{{"seq", e.seq}, {"kind", to_string(e.kind)}, {"timestamp", e.timestamp}, {"payload", e.payload}};
}

EventLogEntry parse_event_line(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ValidationError, "event is not a JSON object");
    try {
        EventLogEntry e;
        e.seq = j.at("seq").get<std::uint64_t>();
        const auto kind = parse_kind(j.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::ValidationError, "unknown event kind");
        e.kind = *kind;
        e.timestamp = j.at("timestamp").get<std::int64_t>();
        e.payload = j.at("payload");
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::ValidationError, std::string("malformed event: ") + ex.what());
    }
}

std::vector<EventLogEntry> read_event_log(const std::filesystem::path& path) { return read_log(path).entries; }

struct Store::Writer {
    std::FILE* file = nullptr;

    explicit Writer(const std::filesystem::path& path) {
        file = std::fopen(path.c_str(), "ab");
        if (!file) throw Error(ErrorCode::FileUnreadable, "cannot open event log " + path.string());
    }
    ~Writer() {
        if (file) std::fclose(file);
    }

    void write(const std::string& line) {
        if (std::fwrite(line.data(), 1, line.size(), file) != line.size() || std::fputc('\n', file) == EOF ||
            std::fflush(file) != 0) {
            throw Error(ErrorCode::FileUnreadable, "event log write failed");
        }
    }
};

Store::Store() = default;

Store::Store(const std::filesystem::path& data_dir) {
    std::filesystem::create_directories(data_dir);
    log_path_ = data_dir / "events.jsonl";
    const LogContents contents = read_log(*log_path_);
    if (std::filesystem::exists(*log_path_) && std::filesystem::file_size(*log_path_) != contents.valid_bytes) {
        spdlog::warn("discarding torn tail of {}", log_path_->string());
        std::filesystem::resize_file(*log_path_, contents.valid_bytes);
    }
    for (const auto& e : contents.entries) {
        apply(studies_, e);
        last_seq_ = e.seq;
    }
    writer_ = std::make_unique<Writer>(*log_path_);
}

Store::~Store() = default;

void Store::apply(std::map<std::string, StudyState>& state, const EventLogEntry& entry) {
    const auto& p = entry.payload;
    auto find = [&](const std::string& id) -> StudyState& {
        const auto it = state.find(id);
        if (it == state.end()) throw Error(ErrorCode::ValidationError, "event for unknown study '" + id + "'");
        return it->second;
    };
    switch (entry.kind) {
        case EventKind::Ingest: {
            StudyRecord record = p.at("record").get<StudyRecord>();
            const std::string id = record.study_id;
            state[id] = StudyState{std::move(record), StudyStatus::Ingested, {}, {}, {}, {}, 0};
            break;
        }
        case EventKind::Result: {
            StudyResult result = p.at("result").get<StudyResult>();
            StudyState& s = find(result.study_id);
            s.status = status_after_result(result.status);
            s.nlp = p.contains("nlp") && !p.at("nlp").is_null()
                        ? std::optional(p.at("nlp").get<ReportClassification>())
                        : std::nullopt;
            s.result = std::move(result);
            s.triage.reset();
            s.flagged_at = 0;
            break;
        }
        case EventKind::Triage: {
            TriageDecision d = p.at("decision").get<TriageDecision>();
            StudyState& s = find(d.study_id);
            if (d.flagged) {
                s.status = StudyStatus::Flagged;
                s.flagged_at = entry.timestamp;
            }
            s.triage = std::move(d);
            break;
        }
        case EventKind::Adjudication: {
            AdjudicationRecord a = p.at("record").get<AdjudicationRecord>();
            StudyState& s = find(a.study_id);
            s.status = StudyStatus::Adjudicated;
            s.adjudications.push_back(std::move(a));
            break;
        }
    }
}

void Store::append_locked(EventKind kind, nlohmann::json payload) {
    EventLogEntry e{last_seq_ + 1, kind, std::move(payload), now_seconds()};
    if (writer_) {
        writer_->write(to_json_line(e).dump());
    } else {
        events_.push_back(e);
    }
    apply(studies_, e);
    last_seq_ = e.seq;
}

IngestReport Store::ingest_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read manifest " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ingest_manifest_text(ss.str(), std::filesystem::absolute(path).parent_path());
}

IngestReport Store::ingest_manifest_text(std::string_view text, const std::filesystem::path& base_dir) {
    IngestReport report;
    std::vector<std::string> order;
    std::map<std::string, StudyRecord> latest;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) throw Error(ErrorCode::ValidationError, "not valid JSON");
            StudyRecord record = parse_manifest_line(j, base_dir);
            const auto [it, inserted] = latest.insert_or_assign(record.study_id, std::move(record));
            if (inserted) {
                order.push_back(it->first);
            } else {
                report.warnings.push_back("line " + std::to_string(line_no) + ": duplicate study_id '" + it->first +
                                          "' supersedes the earlier occurrence");
            }
        } catch (const Error& e) {
            report.rejected.emplace_back(line_no, e.detail());
        }
    }

    std::lock_guard lock(mutex_);
    for (const auto& id : order) {
        const StudyRecord& record = latest.at(id);
        const auto existing = studies_.find(id);
        if (existing == studies_.end() || !(existing->second.record == record)) {
            append_locked(EventKind::Ingest, nlohmann::json{{"record", record}});
        }
        ++report.ingested;
        report.study_ids.push_back(id);
    }
    for (const auto& w : report.warnings) spdlog::warn("{}", w);
    return report;
}

BatchSummary Store::run_batch(const BatchFilter& filter, Backend& backend, const BatchOptions& options) {
    options.config.validate();
    const Lexicon& lexicon = options.lexicon ? *options.lexicon : Lexicon::builtin();

    std::vector<StudyRecord> targets;
    {
        std::lock_guard lock(mutex_);
        const std::set<std::string> wanted(filter.study_ids.begin(), filter.study_ids.end());
        for (const auto& [id, s] : studies_) {
            if (s.status == StudyStatus::Adjudicated) continue;
            if (!wanted.empty() && !wanted.contains(id)) continue;
            if (!filter.statuses.empty() &&
                std::find(filter.statuses.begin(), filter.statuses.end(), s.status) == filter.statuses.end()) {
                continue;
            }
            targets.push_back(s.record);
        }
    }

    struct Outcome {
        StudyResult result;
        std::optional<ReportClassification> nlp;
        std::optional<TriageDecision> decision;
    };
    std::vector<Outcome> outcomes(targets.size());
    std::atomic<std::size_t> done{0};
    parallel_for(targets.size(), options.workers, [&](std::size_t i) {
        Outcome& o = outcomes[i];
        o.result = run_study(targets[i], backend, options.config);
        try {
            o.nlp = classify_report(load_report(targets[i]), lexicon);
        } catch (const std::exception& e) {
            if (o.result.status != ResultStatus::Error) {
                o.result.status = ResultStatus::Error;
                o.result.error_stage = "report";
                o.result.error = e.what();
                o.result.scores.reset();
                o.result.tube.reset();
            }
        }
        if (o.result.status != ResultStatus::Error && o.nlp) o.decision = decide(o.result, *o.nlp, options.config);
        if (const std::size_t n = ++done; n % 1000 == 0) spdlog::info("batch: {}/{} studies", n, targets.size());
    });

    BatchSummary summary;
    std::lock_guard lock(mutex_);
    for (const auto& o : outcomes) {
        nlohmann::json payload{{"result", o.result}};
        payload["nlp"] = o.nlp ? nlohmann::json(*o.nlp) : nlohmann::json(nullptr);
        append_locked(EventKind::Result, std::move(payload));
        if (o.decision) append_locked(EventKind::Triage, nlohmann::json{{"decision", *o.decision}});

        ++summary.total;
        switch (studies_.at(o.result.study_id).status) {
            case StudyStatus::Flagged: ++summary.flagged; break;
            case StudyStatus::Errored: ++summary.errored; break;
            case StudyStatus::SkippedNonFrontal: ++summary.skipped; break;
            default: ++summary.processed; break;
        }
    }
    spdlog::info("batch: {} studies, {} processed, {} flagged, {} errored, {} skipped", summary.total,
                 summary.processed, summary.flagged, summary.errored, summary.skipped);
    return summary;
}

std::vector<StudyState> Store::worklist(StudyStatus status) const {
    std::vector<StudyState> out;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [id, s] : studies_) {
            if (s.status == status) out.push_back(s);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const StudyState& a, const StudyState& b) {
        const double sa = ensemble_or_lowest(a);
        const double sb = ensemble_or_lowest(b);
        if (sa != sb) return sa > sb;
        return a.record.study_id < b.record.study_id;
    });
    return out;
}

StudyStatus Store::adjudicate(const std::string& study_id, AdjudicationDecision decision,
                              const std::string& reviewer_id, const std::string& note, bool supersede) {
    std::lock_guard lock(mutex_);
    const auto it = studies_.find(study_id);
    if (it == studies_.end()) throw Error(ErrorCode::UnknownStudy, study_id);
    const StudyStatus status = it->second.status;
    const bool allowed = status == StudyStatus::Flagged || (status == StudyStatus::Adjudicated && supersede);
    if (!allowed) {
        throw Error(ErrorCode::NotFlagged, "study '" + study_id + "' is " + std::string(to_string(status)));
    }
    const AdjudicationRecord record{study_id, decision, reviewer_id, note, now_seconds()};
    append_locked(EventKind::Adjudication, nlohmann::json{{"record", record}});
    return studies_.at(study_id).status;
}

std::optional<StudyState> Store::study(const std::string& study_id) const {
    std::lock_guard lock(mutex_);
    const auto it = studies_.find(study_id);
    if (it == studies_.end()) return std::nullopt;
    return it->second;
}

std::vector<StudyRecord> Store::records() const {
    std::lock_guard lock(mutex_);
    std::vector<StudyRecord> out;
    out.reserve(studies_.size());
    for (const auto& [id, s] : studies_) out.push_back(s.record);
    return out;
}

std::map<std::string, OracleRecord> Store::oracle_records() const {
    std::lock_guard lock(mutex_);
    std::map<std::string, OracleRecord> out;
    for (const auto& [id, s] : studies_) {
        if (s.record.oracle) out.emplace(id, *s.record.oracle);
    }
    return out;
}

std::size_t Store::size() const {
    std::lock_guard lock(mutex_);
    return studies_.size();
}

Funnel Store::funnel() const {
    std::lock_guard lock(mutex_);
    Funnel f;
    for (const auto& [id, s] : studies_) {
        ++f.total;
        if (s.result && s.result->frontal) ++f.frontal;
        if (s.triage && s.triage->flagged) ++f.flagged;
        if (const auto* a = s.current_adjudication(); a && a->decision == AdjudicationDecision::ConfirmedMissed) {
            ++f.confirmed;
        }
    }
    return f;
}

AdjudicationCounts Store::adjudication_counts() const {
    std::lock_guard lock(mutex_);
    AdjudicationCounts c;
    for (const auto& [id, s] : studies_) {
        if (s.status == StudyStatus::Flagged) ++c.pending;
        const auto* a = s.current_adjudication();
        if (!a) continue;
        switch (a->decision) {
            case AdjudicationDecision::ConfirmedMissed: ++c.confirmed; break;
            case AdjudicationDecision::NotMissed: ++c.not_missed; break;
            case AdjudicationDecision::Indeterminate: ++c.indeterminate; break;
        }
    }
    return c;
}

std::optional<EvalTable> Store::metrics(std::span<const Method> methods) const {
    std::vector<StudyResult> results;
    std::vector<EvalLabel> labels;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [id, s] : studies_) {
            if (!s.record.labels || !s.result) continue;
            results.push_back(*s.result);
            labels.push_back(EvalLabel{s.record.labels->pneumothorax, s.record.labels->chest_tube,
                                       s.record.labels->tube_type});
        }
    }
    if (results.empty()) return std::nullopt;
    return stratified_eval(results, labels, methods);
}

nlohmann::json Store::snapshot() const {
    std::lock_guard lock(mutex_);
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [id, s] : studies_) out[id] = s;
    return out;
}

std::uint64_t Store::last_seq() const {
    std::lock_guard lock(mutex_);
    return last_seq_;
}

std::vector<EventLogEntry> Store::events() const {
    std::lock_guard lock(mutex_);
    if (log_path_) return read_event_log(*log_path_);
    return events_;
}

}  // namespace ptx
