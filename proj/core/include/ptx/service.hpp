#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ptx/backends.hpp"
#include "ptx/pipeline.hpp"
#include "ptx/store.hpp"

namespace ptx {

struct ServiceOptions {
    /// Backend used when a batch request does not name one.
    std::string default_backend = "oracle";
    PipelineConfig default_config;
    unsigned workers = 0;
    OracleOptions oracle;
    RemoteOptions remote;
    /// Static review UI assets served under /ui/.
    std::optional<std::filesystem::path> ui_dir;
};

/// HTTP API over a Store:
///   POST /v1/manifest                      ingest
///   POST /v1/batch                         run the pipeline
///   GET  /v1/worklist?status=...
///   GET  /v1/studies/{id}
///   GET  /v1/studies/{id}/image
///   POST /v1/studies/{id}/adjudication
///   GET  /v1/metrics
class Service {
public:
    Service(Store& store, ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Returns the bound port (port 0 picks one) or -1 on failure.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ptx
