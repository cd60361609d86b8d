#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptx/imaging.hpp"
#include "ptx/patches.hpp"
#include "ptx/segpost.hpp"
#include "ptx/study.hpp"

namespace ptx {

/// The six models the pipeline talks to. Closed set.
enum class ModelId { View, LungSeg, PtxFull, PtxPatch, PtxSeg, Tube };

inline constexpr std::array<ModelId, 6> kAllModels = {ModelId::View,     ModelId::LungSeg, ModelId::PtxFull,
                                                      ModelId::PtxPatch, ModelId::PtxSeg,  ModelId::Tube};

std::string_view to_string(ModelId id) noexcept;
std::optional<ModelId> parse_model_id(std::string_view s) noexcept;
bool is_map_model(ModelId id) noexcept;

/// Per-call information that is not part of the pixels. Remote backends
/// ignore it; the oracle backend keys its answers on it.
struct InferenceContext {
    std::string study_id;
    std::optional<PatchTag> patch;
};

/// Raw model output before validation.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;
};

class Backend {
public:
    virtual ~Backend() = default;

    /// Runs one model. Implementations must be safe to call concurrently.
    virtual Tensor run(const InferenceContext& ctx, ModelId model, const ImageGray& img) = 0;
};

struct TubeScores {
    double standard = 0.0;
    double pigtail = 0.0;
    double any() const noexcept { return standard > pigtail ? standard : pigtail; }
};

/// Validated scalar output of "view", "ptx_full" or "ptx_patch".
double infer_scalar(Backend& backend, const InferenceContext& ctx, ModelId model, const ImageGray& img);
/// Validated (standard, pigtail) output of "tube".
TubeScores infer_tube(Backend& backend, const InferenceContext& ctx, const ImageGray& img);
/// Validated probability map of "lung_seg" or "ptx_seg", same size as `img`.
ProbMap infer_map(Backend& backend, const InferenceContext& ctx, ModelId model, const ImageGray& img);

/// Checks shape and finiteness for `model` and clamps values to [0, 1].
/// NaN/inf or a wrong shape is a ProtocolError.
std::vector<float> validate_output(ModelId model, const Tensor& out, int width, int height);

// Wire protocol ---------------------------------------------------------------

inline constexpr std::string_view kEncodingF32 = "f32le-b64";

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Standard alphabet with padding. Throws ProtocolError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Little-endian IEEE-754 binary32, base64-encoded.
std::string encode_f32le_b64(std::span<const float> values);
std::vector<float> decode_f32le_b64(std::string_view text);

nlohmann::json make_infer_request(ModelId model, const ImageGray& img);
/// Parses a request body; throws ModelUnknown or ProtocolError.
std::pair<ModelId, ImageGray> parse_infer_request(const nlohmann::json& body);
nlohmann::json make_infer_response(const Tensor& out);
/// Decodes shape/encoding/data. Throws ProtocolError when inconsistent.
Tensor parse_infer_response(const nlohmann::json& body);

// Backends --------------------------------------------------------------------

/// Stub lung blob geometry: centers at (0.28 W, 0.55 H) and (0.72 W, 0.55 H),
/// each 0.30 W x 0.55 H. Index 0 is the image-left blob (patient right).
std::array<Rect, 2> stub_lung_rects(int width, int height);

/// Deterministic image-derived backend for running without trained weights.
///   view        -> 1.0 (every image treated as frontal)
///   lung_seg    -> the two stub lung blobs
///   ptx_full    -> mean intensity
///   ptx_patch   -> mean intensity
///   ptx_seg     -> the image intensities themselves
///   tube        -> (0, 0)
class StubBackend final : public Backend {
public:
    Tensor run(const InferenceContext& ctx, ModelId model, const ImageGray& img) override;
};

struct OracleOptions {
    /// Half-width of the uniform noise added to every output.
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};

/// Test oracle that answers from ground truth: 0.9 for a positive finding,
/// 0.1 for a negative one (view: 0.9 for AP/PA). Maps: lung_seg uses the
/// stub blobs; ptx_seg is 1.0 over the affected stub lung region.
class OracleBackend final : public Backend {
public:
    OracleBackend(std::map<std::string, OracleRecord> records, OracleOptions options = {});

    Tensor run(const InferenceContext& ctx, ModelId model, const ImageGray& img) override;

    /// Noise draw in [-epsilon, epsilon]; a pure function of its arguments.
    double noise(const InferenceContext& ctx, ModelId model) const noexcept;

private:
    const OracleRecord& lookup(const std::string& study_id) const;

    std::map<std::string, OracleRecord> records_;
    OracleOptions options_;
};

struct RemoteOptions {
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds timeout{30000};
};

/// HTTP client for POST /v1/infer. 400 -> ModelUnknown, 422 -> ProtocolError,
/// 5xx or transport failure -> BackendUnavailable.
class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(std::string base_url, RemoteOptions options = {});
    ~RemoteBackend() override;

    Tensor run(const InferenceContext& ctx, ModelId model, const ImageGray& img) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Forwards to another backend and remembers what each model was given.
class RecordingBackend final : public Backend {
public:
    struct Call {
        ModelId model;
        int width;
        int height;
        std::string study_id;
        std::optional<PatchTag> patch;
        ImageGray input;  // copy of what the model was given
    };

    explicit RecordingBackend(Backend& inner) : inner_(inner) {}

    Tensor run(const InferenceContext& ctx, ModelId model, const ImageGray& img) override;
    std::vector<Call> calls() const;

private:
    Backend& inner_;
    mutable std::mutex mutex_;
    std::vector<Call> calls_;
};

/// Builds a backend from "stub", "oracle" or an http(s) URL.
std::unique_ptr<Backend> make_backend(std::string_view spec, const std::map<std::string, OracleRecord>& oracle_records,
                                      OracleOptions oracle_options = {}, RemoteOptions remote_options = {});

/// Serves POST /v1/infer on top of any backend. Used to expose the stub over
/// the wire and as a fixture for the remote client.
class InferenceServer {
public:
    explicit InferenceServer(Backend& backend);
    ~InferenceServer();
    InferenceServer(const InferenceServer&) = delete;
    InferenceServer& operator=(const InferenceServer&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ptx
