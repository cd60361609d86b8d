#include "ptx/backends.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <semaphore>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "listen_guard.hpp"
#include "ptx/error.hpp"

namespace ptx {

std::string_view to_string(ModelId id) noexcept {
    switch (id) {
        case ModelId::View: return "view";
        case ModelId::LungSeg: return "lung_seg";
        case ModelId::PtxFull: return "ptx_full";
        case ModelId::PtxPatch: return "ptx_patch";
        case ModelId::PtxSeg: return "ptx_seg";
        case ModelId::Tube: return "tube";
    }
    return "unknown";
}

std::optional<ModelId> parse_model_id(std::string_view s) noexcept {
    for (ModelId id : kAllModels) {
        if (to_string(id) == s) return id;
    }
    return std::nullopt;
}

bool is_map_model(ModelId id) noexcept { return id == ModelId::LungSeg || id == ModelId::PtxSeg; }

// Validation ------------------------------------------------------------------

std::vector<float> validate_output(ModelId model, const Tensor& out, int width, int height) {
    std::vector<int> expected;
    if (is_map_model(model)) {
        expected = {height, width};
    } else if (model == ModelId::Tube) {
        expected = {2};
    } else {
        expected = {1};
    }
    if (out.shape != expected) {
        std::string got;
        for (int d : out.shape) got += (got.empty() ? "" : ",") + std::to_string(d);
        throw Error(ErrorCode::ProtocolError,
                    std::string(to_string(model)) + " returned shape [" + got + "]");
    }
    const std::size_t n = std::accumulate(expected.begin(), expected.end(), std::size_t{1},
                                          [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
    if (out.data.size() != n) {
        throw Error(ErrorCode::ProtocolError, std::string(to_string(model)) + " payload length does not match shape");
    }
    std::vector<float> values(out.data);
    std::size_t clamped = 0;
    for (float& v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::ProtocolError, std::string(to_string(model)) + " returned a non-finite value");
        }
        if (v < 0.0f || v > 1.0f) {
            v = std::clamp(v, 0.0f, 1.0f);
            ++clamped;
        }
    }
    if (clamped > 0) spdlog::warn("{}: clamped {} out-of-range value(s) to [0, 1]", to_string(model), clamped);
    return values;
}

double infer_scalar(Backend& backend, const InferenceContext& ctx, ModelId model, const ImageGray& img) {
    if (model != ModelId::View && model != ModelId::PtxFull && model != ModelId::PtxPatch) {
        throw Error(ErrorCode::InvalidArgument, std::string(to_string(model)) + " is not a single-score model");
    }
    return validate_output(model, backend.run(ctx, model, img), img.width(), img.height())[0];
}

TubeScores infer_tube(Backend& backend, const InferenceContext& ctx, const ImageGray& img) {
    const auto v = validate_output(ModelId::Tube, backend.run(ctx, ModelId::Tube, img), img.width(), img.height());
    return TubeScores{v[0], v[1]};
}

ProbMap infer_map(Backend& backend, const InferenceContext& ctx, ModelId model, const ImageGray& img) {
    if (!is_map_model(model)) {
        throw Error(ErrorCode::InvalidArgument, std::string(to_string(model)) + " is not a map model");
    }
    auto v = validate_output(model, backend.run(ctx, model, img), img.width(), img.height());
    return ProbMap(img.width(), img.height(), std::move(v));
}

// Wire codec ------------------------------------------------------------------

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) noexcept {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (const std::size_t rest = bytes.size() - i; rest > 0) {
        std::uint32_t v = std::uint32_t{bytes[i]} << 16;
        if (rest == 2) v |= std::uint32_t{bytes[i + 1]} << 8;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw Error(ErrorCode::ProtocolError, "base64 length is not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        const bool last = i + 4 == text.size();
        int pad = 0;
        std::uint32_t v = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=' && last && k >= 2) {
                ++pad;
                v <<= 6;
                continue;
            }
            const int d = decode_char(c);
            if (d < 0 || pad > 0) throw Error(ErrorCode::ProtocolError, "invalid base64 character");
            v = (v << 6) | static_cast<std::uint32_t>(d);
        }
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    return out;
}

std::string encode_f32le_b64(std::span<const float> values) {
    std::vector<std::uint8_t> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    return base64_encode(bytes);
}

std::vector<float> decode_f32le_b64(std::string_view text) {
    const auto bytes = base64_decode(text);
    if (bytes.size() % 4 != 0) throw Error(ErrorCode::ProtocolError, "payload is not a whole number of float32s");
    std::vector<float> values(bytes.size() / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t{bytes[4 * i + b]} << (8 * b);
        values[i] = std::bit_cast<float>(bits);
    }
    return values;
}

nlohmann::json make_infer_request(ModelId model, const ImageGray& img) {
    return {{"model", to_string(model)},
            {"shape", {img.height(), img.width()}},
            {"encoding", kEncodingF32},
            {"data", encode_f32le_b64(img.pixels())}};
}

namespace {

std::vector<int> parse_shape(const nlohmann::json& body) {
    if (!body.contains("shape") || !body["shape"].is_array() || body["shape"].empty()) {
        throw Error(ErrorCode::ProtocolError, "missing shape");
    }
    std::vector<int> shape;
    for (const auto& d : body["shape"]) {
        if (!d.is_number_integer() || d.get<long long>() < 1 || d.get<long long>() > (1 << 20)) {
            throw Error(ErrorCode::ProtocolError, "shape entries must be positive integers");
        }
        shape.push_back(d.get<int>());
    }
    return shape;
}

std::vector<float> parse_payload(const nlohmann::json& body) {
    if (!body.contains("encoding") || body["encoding"] != kEncodingF32) {
        throw Error(ErrorCode::ProtocolError, "encoding must be f32le-b64");
    }
    if (!body.contains("data") || !body["data"].is_string()) throw Error(ErrorCode::ProtocolError, "missing data");
    return decode_f32le_b64(body["data"].get<std::string>());
}

}  // namespace

std::pair<ModelId, ImageGray> parse_infer_request(const nlohmann::json& body) {
    if (!body.is_object() || !body.contains("model") || !body["model"].is_string()) {
        throw Error(ErrorCode::ProtocolError, "missing model");
    }
    const auto model = parse_model_id(body["model"].get<std::string>());
    if (!model) throw Error(ErrorCode::ModelUnknown, body["model"].get<std::string>());
    const auto shape = parse_shape(body);
    if (shape.size() != 2) throw Error(ErrorCode::ProtocolError, "request shape must be [h, w]");
    auto pixels = parse_payload(body);
    if (pixels.size() != static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1])) {
        throw Error(ErrorCode::ProtocolError, "payload length does not match shape");
    }
    for (float p : pixels) {
        if (!(p >= 0.0f && p <= 1.0f)) throw Error(ErrorCode::ProtocolError, "pixel outside [0, 1]");
    }
    return {*model, ImageGray(shape[1], shape[0], std::move(pixels))};
}

nlohmann::json make_infer_response(const Tensor& out) {
    return {{"shape", out.shape}, {"encoding", kEncodingF32}, {"data", encode_f32le_b64(out.data)}};
}

Tensor parse_infer_response(const nlohmann::json& body) {
    if (!body.is_object()) throw Error(ErrorCode::ProtocolError, "response is not an object");
    Tensor t;
    t.shape = parse_shape(body);
    t.data = parse_payload(body);
    const std::size_t n = std::accumulate(t.shape.begin(), t.shape.end(), std::size_t{1},
                                          [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
    if (t.data.size() != n) throw Error(ErrorCode::ProtocolError, "payload length does not match shape");
    return t;
}

// Stub ------------------------------------------------------------------------

std::array<Rect, 2> stub_lung_rects(int width, int height) {
    const int w = std::max(1, static_cast<int>(std::lround(0.30 * width)));
    const int h = std::max(1, static_cast<int>(std::lround(0.55 * height)));
    const int y0 = std::clamp(static_cast<int>(std::lround(0.55 * height - h / 2.0)), 0, height - h);
    std::array<Rect, 2> out;
    const double centers[2] = {0.28 * width, 0.72 * width};
    for (int i = 0; i < 2; ++i) {
        const int x0 = std::clamp(static_cast<int>(std::lround(centers[i] - w / 2.0)), 0, width - w);
        out[static_cast<std::size_t>(i)] = Rect{x0, y0, w, h};
    }
    return out;
}

namespace {

Tensor scalar(double v) { return Tensor{{1}, {static_cast<float>(v)}}; }

Tensor fill_rects(const ImageGray& img, std::span<const Rect> rects, float value) {
    Tensor t{{img.height(), img.width()},
             std::vector<float>(static_cast<std::size_t>(img.width()) * img.height(), 0.0f)};
    for (const Rect& r : rects) {
        for (int y = r.y0; y < r.y1(); ++y) {
            for (int x = r.x0; x < r.x1(); ++x) t.data[static_cast<std::size_t>(y) * img.width() + x] = value;
        }
    }
    return t;
}

double mean_intensity(const ImageGray& img) {
    const auto p = img.pixels();
    return p.empty() ? 0.0 : std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
}

}  // namespace

Tensor StubBackend::run(const InferenceContext&, ModelId model, const ImageGray& img) {
    switch (model) {
        case ModelId::View: return scalar(1.0);
        case ModelId::LungSeg: {
            const auto rects = stub_lung_rects(img.width(), img.height());
            return fill_rects(img, rects, 1.0f);
        }
        case ModelId::PtxFull:
        case ModelId::PtxPatch: return scalar(mean_intensity(img));
        case ModelId::PtxSeg: {
            const auto p = img.pixels();
            return Tensor{{img.height(), img.width()}, std::vector<float>(p.begin(), p.end())};
        }
        case ModelId::Tube: return Tensor{{2}, {0.0f, 0.0f}};
    }
    throw Error(ErrorCode::ModelUnknown, "unhandled model");
}

// Oracle ----------------------------------------------------------------------

namespace {

constexpr double kPositive = 0.9;
constexpr double kNegative = 0.1;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double noise_draw(const OracleOptions& opt, const InferenceContext& ctx, ModelId model, std::string_view salt) {
    if (opt.epsilon == 0.0) return 0.0;
    std::uint64_t h = fnv1a(ctx.study_id);
    h = fnv1a("\x1f", h);
    h = fnv1a(to_string(model), h);
    if (ctx.patch) h = fnv1a(to_string(*ctx.patch), fnv1a("\x1f", h));
    if (!salt.empty()) h = fnv1a(salt, fnv1a("\x1f", h));
    const double u = static_cast<double>(splitmix64(h ^ splitmix64(opt.seed)) >> 11) * 0x1.0p-53;
    return opt.epsilon * (2.0 * u - 1.0);
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

// Region of a stub lung hit by the pneumothorax: the apex or base half of
// the lung on the affected side; the whole right lung when unlocalized.
Rect ptx_region(const OracleRecord& o, int width, int height) {
    const auto lungs = stub_lung_rects(width, height);
    if (!o.location) return lungs[0];
    const bool right = *o.location == PatchTag::RightApex || *o.location == PatchTag::RightBase;
    const bool apex = *o.location == PatchTag::RightApex || *o.location == PatchTag::LeftApex;
    const Rect lung = lungs[right ? 0 : 1];
    const int top_h = std::max(1, lung.h / 2);
    if (apex) return Rect{lung.x0, lung.y0, lung.w, top_h};
    return Rect{lung.x0, lung.y0 + top_h, lung.w, std::max(1, lung.h - top_h)};
}

}  // namespace

OracleBackend::OracleBackend(std::map<std::string, OracleRecord> records, OracleOptions options)
    : records_(std::move(records)), options_(options) {
    if (!(options_.epsilon >= 0.0 && options_.epsilon < 0.4)) {
        throw Error(ErrorCode::InvalidArgument, "oracle epsilon must be in [0, 0.4)");
    }
}

const OracleRecord& OracleBackend::lookup(const std::string& study_id) const {
    const auto it = records_.find(study_id);
    if (it == records_.end()) throw Error(ErrorCode::MissingOracle, "no oracle record for study '" + study_id + "'");
    return it->second;
}

double OracleBackend::noise(const InferenceContext& ctx, ModelId model) const noexcept {
    return noise_draw(options_, ctx, model, {});
}

Tensor OracleBackend::run(const InferenceContext& ctx, ModelId model, const ImageGray& img) {
    const OracleRecord& o = lookup(ctx.study_id);
    const double eps = noise(ctx, model);
    switch (model) {
        case ModelId::View: return scalar(clamp01((is_frontal(o.view) ? kPositive : kNegative) + eps));
        case ModelId::PtxFull: return scalar(clamp01((o.pneumothorax ? kPositive : kNegative) + eps));
        case ModelId::PtxPatch: {
            const bool hit = o.pneumothorax && (!o.location || !ctx.patch || *o.location == *ctx.patch);
            return scalar(clamp01((hit ? kPositive : kNegative) + eps));
        }
        case ModelId::Tube: {
            double standard = kNegative, pigtail = kNegative;
            if (o.chest_tube) {
                (o.tube_type == TubeType::Pigtail ? pigtail : standard) = kPositive;
            }
            const double eps_pigtail = noise_draw(options_, ctx, model, "pigtail");
            return Tensor{{2}, {clamp01(standard + eps), clamp01(pigtail + eps_pigtail)}};
        }
        case ModelId::LungSeg: {
            const auto rects = stub_lung_rects(img.width(), img.height());
            return fill_rects(img, rects, 1.0f);
        }
        case ModelId::PtxSeg: {
            Tensor t{{img.height(), img.width()},
                     std::vector<float>(static_cast<std::size_t>(img.width()) * img.height(), 0.0f)};
            if (o.pneumothorax) {
                const Rect r = ptx_region(o, img.width(), img.height());
                t = fill_rects(img, std::span<const Rect>(&r, 1), 1.0f);
            }
            if (eps != 0.0) {
                for (float& v : t.data) v = clamp01(v + eps);
            }
            return t;
        }
    }
    throw Error(ErrorCode::ModelUnknown, "unhandled model");
}

// Remote ----------------------------------------------------------------------

struct RemoteBackend::Impl {
    std::string base_url;
    RemoteOptions options;
    std::counting_semaphore<> slots;

    Impl(std::string url, RemoteOptions opt)
        : base_url(std::move(url)), options(opt), slots(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, opt.max_in_flight))) {}
};

RemoteBackend::RemoteBackend(std::string base_url, RemoteOptions options)
    : impl_(std::make_unique<Impl>(std::move(base_url), options)) {
    while (!impl_->base_url.empty() && impl_->base_url.back() == '/') impl_->base_url.pop_back();
}

RemoteBackend::~RemoteBackend() = default;

Tensor RemoteBackend::run(const InferenceContext&, ModelId model, const ImageGray& img) {
    const std::string body = make_infer_request(model, img).dump();

    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{impl_->slots};

    httplib::Client client(impl_->base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(impl_->options.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(impl_->options.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const auto res = client.Post("/v1/infer", body, "application/json");
    if (!res) {
        throw Error(ErrorCode::BackendUnavailable, impl_->base_url + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 400) throw Error(ErrorCode::ModelUnknown, std::string(to_string(model)) + ": " + res->body);
    if (res->status == 422) throw Error(ErrorCode::ProtocolError, "422 from backend: " + res->body);
    if (res->status >= 500) {
        throw Error(ErrorCode::BackendUnavailable, "HTTP " + std::to_string(res->status) + " from backend");
    }
    if (res->status != 200) throw Error(ErrorCode::ProtocolError, "unexpected HTTP " + std::to_string(res->status));

    nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw Error(ErrorCode::ProtocolError, "response is not JSON");
    return parse_infer_response(parsed);
}

// Recording -------------------------------------------------------------------

Tensor RecordingBackend::run(const InferenceContext& ctx, ModelId model, const ImageGray& img) {
    {
        std::lock_guard lock(mutex_);
        calls_.push_back(Call{model, img.width(), img.height(), ctx.study_id, ctx.patch, img});
    }
    return inner_.run(ctx, model, img);
}

std::vector<RecordingBackend::Call> RecordingBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::unique_ptr<Backend> make_backend(std::string_view spec, const std::map<std::string, OracleRecord>& oracle_records,
                                      OracleOptions oracle_options, RemoteOptions remote_options) {
    if (spec == "stub") return std::make_unique<StubBackend>();
    if (spec == "oracle") return std::make_unique<OracleBackend>(oracle_records, oracle_options);
    if (spec.starts_with("http://") || spec.starts_with("https://")) {
        return std::make_unique<RemoteBackend>(std::string(spec), remote_options);
    }
    throw Error(ErrorCode::InvalidArgument, "backend must be 'oracle', 'stub' or an http URL, got '" +
                                                std::string(spec) + "'");
}

// Inference server ------------------------------------------------------------

struct InferenceServer::Impl {
    Backend& backend;
    httplib::Server server;
    detail::ListenGuard guard;

    explicit Impl(Backend& b) : backend(b) { detail::use_exclusive_port(server); }
};

InferenceServer::InferenceServer(Backend& backend) : impl_(std::make_unique<Impl>(backend)) {
    impl_->server.Post("/v1/infer", [this](const httplib::Request& req, httplib::Response& res) {
        auto reply = [&](int status, const std::string& message) {
            res.status = status;
            res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
        };
        try {
            const auto body = nlohmann::json::parse(req.body, nullptr, false);
            if (body.is_discarded()) return reply(422, "body is not JSON");
            const auto [model, img] = parse_infer_request(body);
            const Tensor out = impl_->backend.run(InferenceContext{}, model, img);
            res.set_content(make_infer_response(out).dump(), "application/json");
        } catch (const Error& e) {
            switch (e.code()) {
                case ErrorCode::ModelUnknown: return reply(400, e.what());
                case ErrorCode::ProtocolError:
                case ErrorCode::InvalidArgument: return reply(422, e.what());
                default: return reply(500, e.what());
            }
        } catch (const std::exception& e) {
            reply(500, e.what());
        }
    });
}

InferenceServer::~InferenceServer() { stop(); }

int InferenceServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void InferenceServer::listen() { impl_->guard.listen(impl_->server); }

void InferenceServer::stop() { impl_->guard.stop(impl_->server); }

}  // namespace ptx
