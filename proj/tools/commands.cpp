#include "commands.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ptx/backends.hpp"
#include "ptx/error.hpp"
#include "ptx/eval.hpp"
#include "ptx/json.hpp"
#include "ptx/report_nlp.hpp"
#include "ptx/service.hpp"
#include "ptx/store.hpp"
#include "ptx/synthetic.hpp"

namespace ptxcli {

namespace {

using nlohmann::json;

int fail(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return kExitUsage;
}

ptx::PipelineConfig load_config(const std::optional<std::filesystem::path>& path) {
    ptx::PipelineConfig cfg;
    if (!path) return cfg;
    std::ifstream in(*path);
    if (!in) throw ptx::Error(ptx::ErrorCode::FileUnreadable, path->string());
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ptx::Error(ptx::ErrorCode::ValidationError, path->string() + " is not a JSON object");
    }
    cfg = j.get<ptx::PipelineConfig>();
    cfg.validate();
    return cfg;
}

std::vector<ptx::Method> parse_methods(const std::string& csv) {
    std::vector<ptx::Method> out;
    std::stringstream ss(csv);
    std::string key;
    while (std::getline(ss, key, ',')) {
        const auto m = ptx::parse_method(key);
        if (!m) throw ptx::Error(ptx::ErrorCode::InvalidArgument, "unknown method '" + key + "'");
        out.push_back(*m);
    }
    if (out.empty()) throw ptx::Error(ptx::ErrorCode::InvalidArgument, "no methods given");
    return out;
}

// Reads one JSON object per non-blank line. Any bad line is an operator error.
std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ptx::Error(ptx::ErrorCode::FileUnreadable, path.string());
    std::vector<json> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ptx::Error(ptx::ErrorCode::ValidationError, path.string() + ":" + std::to_string(n) + ": not a JSON object");
        }
        out.push_back(std::move(j));
    }
    return out;
}

// SIGINT/SIGTERM are blocked before any server thread starts so that only the
// waiter thread sees them.
template <typename Server>
void serve_until_signal(Server& server) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    std::atomic<bool> signalled{false};
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        if (signalled.exchange(true)) return;
        spdlog::info("signal {} received, shutting down", sig);
        server.stop();
    });
    server.listen();
    // listen() can also return without a signal; wake the waiter in that case.
    if (!signalled.exchange(true)) pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
}

}  // namespace

int cmd_run(const RunArgs& args) {
    ptx::BatchOptions opts;
    std::optional<ptx::Lexicon> lexicon;
    try {
        opts.config = load_config(args.backend.config);
        if (args.lexicon) lexicon = ptx::Lexicon::load(*args.lexicon);
    } catch (const std::exception& e) {
        return fail(std::string("config: ") + e.what());
    }
    opts.workers = args.backend.workers;
    if (lexicon) opts.lexicon = &*lexicon;

    std::unique_ptr<ptx::Store> store;
    try {
        store = args.data_dir ? std::make_unique<ptx::Store>(*args.data_dir) : std::make_unique<ptx::Store>();
    } catch (const std::exception& e) {
        return fail(std::string("data dir: ") + e.what());
    }

    ptx::IngestReport report;
    try {
        report = store->ingest_manifest(args.manifest);
    } catch (const std::exception& e) {
        return fail(std::string("manifest: ") + e.what());
    }
    for (const auto& [line, reason] : report.rejected) spdlog::warn("manifest line {} rejected: {}", line, reason);
    for (const auto& w : report.warnings) spdlog::warn("manifest: {}", w);
    if (report.study_ids.empty()) return fail("manifest " + args.manifest.string() + " has no valid studies");

    std::unique_ptr<ptx::Backend> backend;
    try {
        backend = ptx::make_backend(args.backend.backend, store->oracle_records(),
                                    ptx::OracleOptions{args.backend.oracle_epsilon, args.backend.seed});
    } catch (const std::exception& e) {
        return fail(std::string("backend: ") + e.what());
    }

    ptx::BatchFilter filter;
    filter.study_ids = report.study_ids;
    const ptx::BatchSummary summary = store->run_batch(filter, *backend, opts);

    std::ofstream file;
    const bool to_stdout = args.out == "-";
    if (!to_stdout) {
        file.open(args.out);
        if (!file) return fail("cannot write " + args.out.string());
    }
    std::ostream& out = to_stdout ? std::cout : file;
    for (const auto& id : report.study_ids) {
        const auto s = store->study(id);
        json line{{"study_id", id}, {"status", ptx::to_string(s->status)}};
        line["result"] = s->result ? json(*s->result) : json(nullptr);
        line["nlp"] = s->nlp ? json(*s->nlp) : json(nullptr);
        line["triage"] = s->triage ? json(*s->triage) : json(nullptr);
        out << line.dump() << '\n';
    }
    out.flush();

    std::cerr << "studies: " << summary.total << "  processed: " << summary.processed << "  flagged: " << summary.flagged
              << "  errored: " << summary.errored << "  skipped_non_frontal: " << summary.skipped
              << "  rejected_lines: " << report.rejected.size() << "\n";
    return kExitOk;
}

int cmd_eval(const EvalArgs& args) {
    try {
        const auto methods = parse_methods(args.methods);

        std::map<std::string, ptx::StudyResult> results;
        for (const auto& j : read_jsonl(args.results)) {
            if (!j.contains("result") || j.at("result").is_null()) continue;
            auto r = j.at("result").get<ptx::StudyResult>();
            results[r.study_id] = std::move(r);
        }

        const auto base = args.manifest.parent_path();
        std::vector<ptx::StudyResult> aligned;
        std::vector<ptx::EvalLabel> labels;
        std::set<std::string> seen;
        for (const auto& j : read_jsonl(args.manifest)) {
            const ptx::StudyRecord rec = ptx::parse_manifest_line(j, base);
            if (!rec.labels || !seen.insert(rec.study_id).second) continue;
            const auto it = results.find(rec.study_id);
            if (it == results.end()) return fail("study '" + rec.study_id + "' has labels but no result in " + args.results.string());
            aligned.push_back(it->second);
            labels.push_back(ptx::EvalLabel{rec.labels->pneumothorax, rec.labels->chest_tube, rec.labels->tube_type});
        }
        if (labels.empty()) return fail("manifest " + args.manifest.string() + " has no labeled studies");

        const ptx::EvalTable table = ptx::stratified_eval(aligned, labels, methods);
        if (args.json) {
            std::cout << json(table).dump(2) << "\n";
        } else {
            std::cout << ptx::format_table(table);
        }
        return kExitOk;
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

int cmd_nlp(const NlpArgs& args) {
    std::string text;
    std::optional<ptx::Lexicon> lexicon;
    try {
        if (args.lexicon) lexicon = ptx::Lexicon::load(*args.lexicon);
        if (args.report) {
            std::ifstream in(*args.report, std::ios::binary);
            if (!in) return fail("cannot read " + args.report->string());
            text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        } else {
            text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
        }
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    const auto c = lexicon ? ptx::classify_report(text, *lexicon) : ptx::classify_report(text);
    std::cout << json(c).dump(2) << "\n";
    return kExitOk;
}

int cmd_serve(const ServeArgs& args) {
    ptx::ServiceOptions opts;
    try {
        opts.default_config = load_config(args.backend.config);
    } catch (const std::exception& e) {
        return fail(std::string("config: ") + e.what());
    }
    opts.default_backend = args.backend.backend;
    opts.workers = args.backend.workers;
    opts.oracle = ptx::OracleOptions{args.backend.oracle_epsilon, args.backend.seed};
    opts.ui_dir = args.ui_dir;

    std::unique_ptr<ptx::Store> store;
    try {
        store = std::make_unique<ptx::Store>(args.data_dir);
    } catch (const std::exception& e) {
        return fail(std::string("data dir: ") + e.what());
    }
    ptx::Service service(*store, opts);
    const int port = service.bind(args.host, args.port);
    if (port < 0) return fail("cannot bind " + args.host + ":" + std::to_string(args.port));
    spdlog::info("serving on http://{}:{} ({} studies, backend {})", args.host, port, store->size(), opts.default_backend);
    // Scripts starting with --port 0 read the chosen port from here.
    std::cout << "listening " << port << std::endl;
    serve_until_signal(service);
    spdlog::info("stopped; event log at {}", (args.data_dir / "events.jsonl").string());
    return kExitOk;
}

int cmd_model_serve(const ModelServeArgs& args) {
    ptx::StubBackend stub;
    ptx::InferenceServer server(stub);
    const int port = server.bind(args.host, args.port);
    if (port < 0) return fail("cannot bind " + args.host + ":" + std::to_string(args.port));
    spdlog::info("stub models on http://{}:{}/v1/infer", args.host, port);
    std::cout << "listening " << port << std::endl;
    serve_until_signal(server);
    return kExitOk;
}

int cmd_synth(const SynthArgs& args) {
    ptx::SyntheticSpec spec;
    spec.studies = args.studies;
    spec.planted_missed = args.planted;
    spec.seed = args.seed;
    spec.image_size = args.image_size;
    try {
        const auto set = ptx::write_synthetic_set(spec, args.out);
        std::cerr << "wrote " << set.studies.size() << " studies (" << set.planted_ids.size() << " planted) to "
                  << (args.out / "manifest.jsonl").string() << "\n";
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    return kExitOk;
}

}  // namespace ptxcli
