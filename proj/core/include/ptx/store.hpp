#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptx/backends.hpp"
#include "ptx/eval.hpp"
#include "ptx/pipeline.hpp"
#include "ptx/report_nlp.hpp"
#include "ptx/study.hpp"
#include "ptx/triage.hpp"

namespace ptx {

enum class EventKind { Ingest, Result, Triage, Adjudication };
std::string_view to_string(EventKind k) noexcept;

struct EventLogEntry {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Ingest;
    nlohmann::json payload;
    std::int64_t timestamp = 0;
};

nlohmann::json to_json_line(const EventLogEntry& e);
EventLogEntry parse_event_line(std::string_view line);

/// Reads every complete entry. A torn trailing line (no newline, or not
/// valid JSON) is ignored; corruption before the tail throws ValidationError.
std::vector<EventLogEntry> read_event_log(const std::filesystem::path& path);

/// Current state of one study, reconstructed from its events.
struct StudyState {
    StudyRecord record;
    StudyStatus status = StudyStatus::Ingested;
    std::optional<StudyResult> result;
    std::optional<ReportClassification> nlp;
    std::optional<TriageDecision> triage;
    std::vector<AdjudicationRecord> adjudications;  // full history, oldest first
    std::int64_t flagged_at = 0;                     // UTC seconds of the flagging triage event

    const AdjudicationRecord* current_adjudication() const noexcept {
        return adjudications.empty() ? nullptr : &adjudications.back();
    }
};

/// Full state as JSON: record, status, result, nlp, triage, adjudications.
void to_json(nlohmann::json& j, const StudyState& s);
/// Compact reviewer view: scores, tube, NLP evidence spans, thresholds,
/// patch rectangles and the current decision.
nlohmann::json worklist_entry(const StudyState& s);

struct IngestReport {
    std::size_t ingested = 0;
    std::vector<std::string> study_ids;  // accepted, in first-occurrence order
    std::vector<std::pair<std::size_t, std::string>> rejected;  // (1-based line, reason)
    std::vector<std::string> warnings;
};

struct BatchFilter {
    /// Empty means every status except adjudicated.
    std::vector<StudyStatus> statuses;
    /// Empty means every study.
    std::vector<std::string> study_ids;
};

/// Exclusive counts: total == processed + flagged + errored + skipped.
struct BatchSummary {
    std::size_t total = 0;
    std::size_t processed = 0;
    std::size_t flagged = 0;
    std::size_t errored = 0;
    std::size_t skipped = 0;

    friend bool operator==(const BatchSummary&, const BatchSummary&) = default;
};

struct Funnel {
    std::size_t total = 0;
    std::size_t frontal = 0;
    std::size_t flagged = 0;
    std::size_t confirmed = 0;
};

struct AdjudicationCounts {
    std::size_t pending = 0;  // flagged, not yet adjudicated
    std::size_t confirmed = 0;
    std::size_t not_missed = 0;
    std::size_t indeterminate = 0;
};

struct BatchOptions {
    PipelineConfig config;
    unsigned workers = 0;
    const Lexicon* lexicon = nullptr;  // null = builtin
};

/// Study store backed by an append-only event log (one JSON object per
/// line). State is a fold over the log: every mutation is appended first and
/// then applied through the same path used on replay.
class Store {
public:
    /// Ephemeral store; events are kept in memory only.
    Store();
    /// Opens (creating if needed) `data_dir/events.jsonl` and replays it.
    explicit Store(const std::filesystem::path& data_dir);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    /// Line-delimited JSON manifest. Throws FileUnreadable only.
    IngestReport ingest_manifest(const std::filesystem::path& path);
    /// Manifest content; relative paths resolve against `base_dir`.
    IngestReport ingest_manifest_text(std::string_view text, const std::filesystem::path& base_dir);

    BatchSummary run_batch(const BatchFilter& filter, Backend& backend, const BatchOptions& options = {});

    /// Studies in `status`, by descending ensemble score then study_id.
    std::vector<StudyState> worklist(StudyStatus status = StudyStatus::Flagged) const;

    /// Records a reviewer decision. A flagged study moves to adjudicated; an
    /// adjudicated study accepts a new decision only with `supersede`.
    /// Throws UnknownStudy or NotFlagged.
    StudyStatus adjudicate(const std::string& study_id, AdjudicationDecision decision, const std::string& reviewer_id,
                           const std::string& note, bool supersede = false);

    std::optional<StudyState> study(const std::string& study_id) const;
    std::vector<StudyRecord> records() const;
    std::map<std::string, OracleRecord> oracle_records() const;
    std::size_t size() const;

    Funnel funnel() const;
    AdjudicationCounts adjudication_counts() const;
    /// Stratified evaluation over labeled studies with results; nullopt when
    /// no such study exists.
    std::optional<EvalTable> metrics(std::span<const Method> methods) const;

    /// Canonical JSON of the full state, for replay comparisons.
    nlohmann::json snapshot() const;
    std::uint64_t last_seq() const;
    /// Events appended so far (ephemeral stores and file stores alike).
    std::vector<EventLogEntry> events() const;

    /// Applies an entry to a state map. Exposed for replay tests.
    static void apply(std::map<std::string, StudyState>& state, const EventLogEntry& entry);

private:
    void append_locked(EventKind kind, nlohmann::json payload);

    mutable std::mutex mutex_;
    std::optional<std::filesystem::path> log_path_;
    std::vector<EventLogEntry> events_;
    std::map<std::string, StudyState> studies_;
    std::uint64_t last_seq_ = 0;
    struct Writer;
    std::unique_ptr<Writer> writer_;
};

}  // namespace ptx
