#pragma once
// Crash-safety property for the event log: cutting the log at any entry
// boundary (optionally leaving a torn partial line behind) and reopening
// the store reproduces the state the live store had at that point.

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ptx/store.hpp"
#include "ptx/synthetic.hpp"

namespace ptx::test {

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

inline void write_prefix(const std::filesystem::path& dir, const std::vector<std::string>& lines, std::size_t k,
                         const std::string& torn_tail) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "events.jsonl", std::ios::binary | std::ios::trunc);
    for (std::size_t i = 0; i < k; ++i) out << lines[i] << '\n';
    out << torn_tail;
}

/// Drives a file-backed store through ingest, per-study batches,
/// adjudications and a re-ingest, then checks every prefix of its log.
/// Returns an empty string on success.
inline std::string check_replay_property(const std::filesystem::path& work) {
    SyntheticSpec spec;
    spec.studies = 24;
    spec.planted_missed = 4;
    spec.tube_positive = 3;
    spec.tube_negative = 3;
    spec.reported_positive = 3;
    spec.lateral = 2;
    spec.image_size = 48;
    const auto set = write_synthetic_set(spec, work / "set");

    std::vector<std::pair<std::uint64_t, nlohmann::json>> live;  // (seq, snapshot) at operation boundaries
    {
        Store store(work / "live");
        auto mark = [&] { live.emplace_back(store.last_seq(), store.snapshot()); };
        mark();
        store.ingest_manifest(work / "set" / "manifest.jsonl");
        mark();
        OracleBackend oracle(store.oracle_records(), OracleOptions{0.05, 3});
        BatchOptions opts;
        opts.workers = 1;
        opts.config.model_input_size = 32;
        opts.config.patch_out_size = 16;
        for (const auto& s : set.studies) {
            store.run_batch(BatchFilter{{}, {s.study_id}}, oracle, opts);
            mark();
        }
        const auto flagged = store.worklist();
        for (std::size_t i = 0; i < flagged.size(); ++i) {
            const auto d = i % 2 == 0 ? AdjudicationDecision::ConfirmedMissed : AdjudicationDecision::NotMissed;
            store.adjudicate(flagged[i].record.study_id, d, "r1", "note " + std::to_string(i));
            mark();
        }
        if (!flagged.empty()) {
            store.adjudicate(flagged[0].record.study_id, AdjudicationDecision::Indeterminate, "r2", "", true);
            mark();
        }
        std::ifstream in(work / "set" / "manifest.jsonl");
        std::string first;
        std::getline(in, first);
        auto j = nlohmann::json::parse(first);
        j["report"] = "Large right pneumothorax.";
        store.ingest_manifest_text(j.dump() + "\n", work / "set");
        mark();
        store.run_batch(BatchFilter{{}, {j["study_id"].get<std::string>()}}, oracle, opts);
        mark();
    }

    const auto lines = read_lines(work / "live" / "events.jsonl");
    if (lines.size() != live.back().first) return "log has " + std::to_string(lines.size()) + " lines";
    std::size_t next_mark = 0;
    std::map<std::string, StudyState> folded;
    for (std::size_t k = 0; k <= lines.size(); ++k) {
        if (k > 0) Store::apply(folded, parse_event_line(lines[k - 1]));
        nlohmann::json expected = nlohmann::json::object();
        for (const auto& [id, s] : folded) expected[id] = s;

        const std::string torn = k < lines.size() && k % 3 == 0 ? lines[k].substr(0, lines[k].size() / 2) : "";
        const auto dir = work / ("replay-" + std::to_string(k));
        write_prefix(dir, lines, k, torn);
        Store replayed(dir);
        const auto snap = replayed.snapshot();
        if (snap != expected) return "prefix " + std::to_string(k) + " differs from the fold of its entries";
        if (replayed.last_seq() != k) return "prefix " + std::to_string(k) + " has wrong last_seq";
        while (next_mark < live.size() && live[next_mark].first < k) ++next_mark;
        if (next_mark < live.size() && live[next_mark].first == k && snap != live[next_mark].second) {
            return "prefix " + std::to_string(k) + " differs from the live state";
        }
        if (!torn.empty() && read_lines(dir / "events.jsonl").size() != k) {
            return "torn tail not discarded at prefix " + std::to_string(k);
        }
        std::filesystem::remove_all(dir);
    }
    return {};
}

}  // namespace ptx::test
