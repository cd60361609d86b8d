#include "ptx/service.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "listen_guard.hpp"
#include "ptx/error.hpp"
#include "ptx/json.hpp"

namespace ptx {

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}});
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownStudy: return 404;
        case ErrorCode::NotFlagged: return 409;
        case ErrorCode::ValidationError:
        case ErrorCode::InvalidArgument:
        case ErrorCode::Misaligned:
        case ErrorCode::DegenerateLabels: return 422;
        case ErrorCode::FileUnreadable: return 422;
        default: return 500;
    }
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw Error(ErrorCode::ValidationError, "body is not valid JSON");
    return body;
}

std::vector<Method> parse_methods(const std::string& csv) {
    std::vector<Method> out;
    std::stringstream ss(csv);
    std::string key;
    while (std::getline(ss, key, ',')) {
        const auto m = parse_method(key);
        if (!m) throw Error(ErrorCode::ValidationError, "unknown method '" + key + "'");
        out.push_back(*m);
    }
    return out;
}

BatchFilter parse_filter(const json& j) {
    BatchFilter f;
    if (j.is_null()) return f;
    if (!j.is_object()) throw Error(ErrorCode::ValidationError, "filter must be an object");
    if (j.contains("status")) {
        const json& st = j.at("status");
        const json list = st.is_array() ? st : json::array({st});
        for (const auto& s : list) {
            const auto parsed = s.is_string() ? parse_status(s.get<std::string>()) : std::nullopt;
            if (!parsed) throw Error(ErrorCode::ValidationError, "unknown status in filter");
            f.statuses.push_back(*parsed);
        }
    }
    if (j.contains("study_ids")) {
        if (!j.at("study_ids").is_array()) throw Error(ErrorCode::ValidationError, "study_ids must be an array");
        for (const auto& id : j.at("study_ids")) f.study_ids.push_back(id.get<std::string>());
    }
    return f;
}

json counts_json(const AdjudicationCounts& c) {
    return json{{"flagged_remaining", c.pending},
                {"confirmed", c.confirmed},
                {"not_missed", c.not_missed},
                {"indeterminate", c.indeterminate}};
}

}  // namespace

struct Service::Impl {
    Store& store;
    ServiceOptions options;
    httplib::Server server;
    detail::ListenGuard guard;

    Impl(Store& s, ServiceOptions o) : store(s), options(std::move(o)) { detail::use_exclusive_port(server); }

    // Runs a handler, mapping library errors onto HTTP statuses.
    template <typename Fn>
    void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            send_json(res, status_for(e.code()), json{{"error", e.detail()}, {"code", to_string(e.code())}});
        } catch (const json::exception& e) {
            send_error(res, 422, e.what());
        } catch (const std::exception& e) {
            spdlog::error("request failed: {}", e.what());
            send_error(res, 500, e.what());
        }
    }

    void routes() {
        server.Post("/v1/manifest", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                IngestReport report;
                const auto body = json::parse(req.body, nullptr, false);
                if (!body.is_discarded() && body.is_object() && body.contains("path")) {
                    report = store.ingest_manifest(body.at("path").get<std::string>());
                } else {
                    report = store.ingest_manifest_text(req.body, std::filesystem::current_path());
                }
                json rejected = json::array();
                for (const auto& [line, reason] : report.rejected) rejected.push_back({{"line", line}, {"reason", reason}});
                send_json(res, 200, json{{"ingested", report.ingested}, {"rejected", rejected}, {"warnings", report.warnings}});
            });
        });

        server.Post("/v1/batch", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                BatchOptions opts;
                opts.config = options.default_config;
                opts.workers = body.value("workers", options.workers);
                if (body.contains("config")) opts.config = body.at("config").get<PipelineConfig>();
                OracleOptions oracle = options.oracle;
                if (body.contains("oracle")) {
                    oracle.epsilon = body.at("oracle").value("epsilon", oracle.epsilon);
                    oracle.seed = body.at("oracle").value("seed", oracle.seed);
                }
                const std::string spec = body.value("backend", options.default_backend);
                auto backend = make_backend(spec, store.oracle_records(), oracle, options.remote);
                const BatchFilter filter = parse_filter(body.value("filter", json(nullptr)));
                const BatchSummary s = store.run_batch(filter, *backend, opts);
                send_json(res, 200,
                          json{{"total", s.total}, {"processed", s.processed}, {"flagged", s.flagged},
                               {"errored", s.errored}, {"skipped", s.skipped}, {"backend", spec},
                               {"config", opts.config}});
            });
        });

        server.Get("/v1/worklist", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                StudyStatus status = StudyStatus::Flagged;
                if (req.has_param("status")) {
                    const auto parsed = parse_status(req.get_param_value("status"));
                    if (!parsed) throw Error(ErrorCode::ValidationError, "unknown status");
                    status = *parsed;
                }
                json items = json::array();
                for (const auto& s : store.worklist(status)) items.push_back(worklist_entry(s));
                send_json(res, 200, items);
            });
        });

        server.Get(R"(/v1/studies/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto s = store.study(req.matches[1]);
                if (!s) throw Error(ErrorCode::UnknownStudy, req.matches[1]);
                json j = *s;
                j["report_text"] = load_report(s->record);
                j["summary"] = worklist_entry(*s);
                send_json(res, 200, j);
            });
        });

        server.Get(R"(/v1/studies/([^/]+)/image)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto s = store.study(req.matches[1]);
                if (!s) throw Error(ErrorCode::UnknownStudy, req.matches[1]);
                std::ifstream in(s->record.image_path, std::ios::binary);
                if (!in) return send_error(res, 404, "image file missing");
                std::ostringstream ss;
                ss << in.rdbuf();
                const auto ext = s->record.image_path.extension().string();
                res.status = 200;
                res.set_content(ss.str(), ext == ".png" ? "image/png" : "image/x-portable-graymap");
            });
        });

        server.Post(R"(/v1/studies/([^/]+)/adjudication)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                json body = parse_body(req);
                if (!body.is_object()) throw Error(ErrorCode::ValidationError, "body must be an object");
                body["study_id"] = id;
                const auto record = body.get<AdjudicationRecord>();
                const bool supersede = body.value("supersede", false);
                const StudyStatus status = store.adjudicate(id, record.decision, record.reviewer_id, record.note, supersede);
                const auto state = store.study(id);
                send_json(res, 200,
                          json{{"study_id", id},
                               {"status", to_string(status)},
                               {"adjudication", *state->current_adjudication()},
                               {"history_length", state->adjudications.size()},
                               {"counts", counts_json(store.adjudication_counts())}});
            });
        });

        server.Get("/v1/metrics", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto methods = parse_methods(req.has_param("methods") ? req.get_param_value("methods")
                                                                            : "a,b,c,ens_ac,ens_abc");
                const Funnel f = store.funnel();
                json j{{"funnel",
                        {{"total", f.total}, {"frontal", f.frontal}, {"flagged", f.flagged}, {"confirmed", f.confirmed}}},
                       {"adjudication", counts_json(store.adjudication_counts())}};
                const auto table = store.metrics(methods);
                j["eval"] = table ? json(*table) : json(nullptr);
                send_json(res, 200, j);
            });
        });

        if (options.ui_dir) {
            if (!server.set_mount_point("/ui", options.ui_dir->string())) {
                spdlog::warn("UI directory {} not found; /ui/ disabled", options.ui_dir->string());
            }
        }
    }
};

Service::Service(Store& store, ServiceOptions options) : impl_(std::make_unique<Impl>(store, std::move(options))) {
    impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void Service::listen() { impl_->guard.listen(impl_->server); }

void Service::stop() { impl_->guard.stop(impl_->server); }

}  // namespace ptx
