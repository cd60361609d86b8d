#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ptxcli {

/// Exit codes: 0 success, 2 operator error (bad flags, unreadable inputs,
/// bind failure). Per-study failures never change the exit code.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;

struct BackendArgs {
    std::string backend = "oracle";
    double oracle_epsilon = 0.0;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> config;
    unsigned workers = 0;
};

struct RunArgs {
    std::filesystem::path manifest;
    std::filesystem::path out;
    std::optional<std::filesystem::path> data_dir;
    std::optional<std::filesystem::path> lexicon;
    BackendArgs backend;
};

struct EvalArgs {
    std::filesystem::path results;
    std::filesystem::path manifest;
    std::string methods = "a,b,c,ens_ac,ens_abc";
    bool json = false;
};

struct NlpArgs {
    std::optional<std::filesystem::path> report;
    std::optional<std::filesystem::path> lexicon;
};

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path data_dir = "ptx-data";
    std::optional<std::filesystem::path> ui_dir;
    BackendArgs backend;
};

struct ModelServeArgs {
    std::string host = "127.0.0.1";
    int port = 8500;
};

struct SynthArgs {
    std::filesystem::path out;
    std::size_t studies = 200;
    std::size_t planted = 10;
    std::uint64_t seed = 1;
    int image_size = 64;
};

int cmd_run(const RunArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_nlp(const NlpArgs& args);
int cmd_serve(const ServeArgs& args);
int cmd_model_serve(const ModelServeArgs& args);
int cmd_synth(const SynthArgs& args);

}  // namespace ptxcli
