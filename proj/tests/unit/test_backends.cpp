#include <gtest/gtest.h>
#include <httplib.h>

#include <cmath>
#include <limits>
#include <thread>

#include "ptx/backends.hpp"
#include "test_support.hpp"

namespace ptx {
namespace {

using test::expect_code;

/// Returns a fixed tensor for every call; used to feed malformed outputs
/// through validation and over the wire.
class FixedBackend final : public Backend {
public:
    explicit FixedBackend(Tensor t) : t_(std::move(t)) {}
    Tensor run(const InferenceContext&, ModelId, const ImageGray&) override { return t_; }

private:
    Tensor t_;
};

class ThrowingBackend final : public Backend {
public:
    Tensor run(const InferenceContext&, ModelId, const ImageGray&) override {
        throw Error(ErrorCode::BackendUnavailable, "model not loaded");
    }
};

/// InferenceServer on an ephemeral loopback port for the lifetime of the object.
class ServerFixture {
public:
    explicit ServerFixture(Backend& backend) : server_(backend) {
        port_ = server_.bind("127.0.0.1", 0);
        thread_ = std::thread([this] { server_.listen(); });
    }
    ~ServerFixture() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }

private:
    InferenceServer server_;
    int port_ = -1;
    std::thread thread_;
};

TEST(ModelId, StringsRoundTrip) {
    for (ModelId m : kAllModels) EXPECT_EQ(parse_model_id(to_string(m)), m);
    EXPECT_EQ(to_string(ModelId::PtxSeg), "ptx_seg");
    EXPECT_FALSE(parse_model_id("ptx_mega").has_value());
    EXPECT_TRUE(is_map_model(ModelId::LungSeg));
    EXPECT_FALSE(is_map_model(ModelId::Tube));
}

TEST(Base64, KnownVectors) {
    const std::pair<std::string, std::string> vectors[] = {
        {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
        {"foobar", "Zm9vYmFy"}};
    for (const auto& [plain, coded] : vectors) {
        const std::vector<std::uint8_t> bytes(plain.begin(), plain.end());
        EXPECT_EQ(base64_encode(bytes), coded);
        EXPECT_EQ(base64_decode(coded), bytes);
    }
}

TEST(Base64, RejectsMalformed) {
    for (std::string_view bad : {"Zg=", "Z===", "Zm9v!A==", "Zg==Zg==", "=Zg="}) {
        expect_code(ErrorCode::ProtocolError, [&] { base64_decode(bad); });
    }
}

TEST(F32Codec, RoundTripIsBitExact) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<float> u(-1e6f, 1e6f);
    for (int n = 0; n < 40; ++n) {
        std::vector<float> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = u(rng);
        if (n > 3) {
            v[0] = 0.0f;
            v[1] = -0.0f;
            v[2] = std::numeric_limits<float>::denorm_min();
        }
        const auto back = decode_f32le_b64(encode_f32le_b64(v));
        ASSERT_EQ(back.size(), v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            EXPECT_EQ(std::bit_cast<std::uint32_t>(back[i]), std::bit_cast<std::uint32_t>(v[i]));
        }
    }
}

TEST(F32Codec, LittleEndianLayout) {
    const float one = 1.0f;  // 0x3F800000 -> bytes 00 00 80 3F
    EXPECT_EQ(encode_f32le_b64(std::span<const float>(&one, 1)), "AACAPw==");
    expect_code(ErrorCode::ProtocolError, [] { decode_f32le_b64("AAAA"); });  // 3 bytes
}

TEST(InferRequest, RoundTrip) {
    std::mt19937 rng(2);
    const auto img = test::random_image(rng, 7, 5);
    const auto body = make_infer_request(ModelId::PtxFull, img);
    EXPECT_EQ(body["shape"], (nlohmann::json{5, 7}));
    EXPECT_EQ(body["encoding"], "f32le-b64");
    const auto [model, back] = parse_infer_request(body);
    EXPECT_EQ(model, ModelId::PtxFull);
    EXPECT_EQ(back, img);
}

TEST(InferRequest, Errors) {
    const auto good = make_infer_request(ModelId::View, ImageGray(2, 2, 0.5f));
    auto unknown = good;
    unknown["model"] = "ptx_mega";
    expect_code(ErrorCode::ModelUnknown, [&] { parse_infer_request(unknown); });
    auto shape = good;
    shape["shape"] = {3, 2};
    expect_code(ErrorCode::ProtocolError, [&] { parse_infer_request(shape); });
    auto enc = good;
    enc["encoding"] = "f16";
    expect_code(ErrorCode::ProtocolError, [&] { parse_infer_request(enc); });
    auto range = good;
    const float bad[] = {0.0f, 2.0f, 0.0f, 0.0f};
    range["data"] = encode_f32le_b64(bad);
    expect_code(ErrorCode::ProtocolError, [&] { parse_infer_request(range); });
}

TEST(InferResponse, RoundTripAndLengthCheck) {
    const Tensor t{{2}, {0.25f, 0.75f}};
    const auto back = parse_infer_response(make_infer_response(t));
    EXPECT_EQ(back.shape, t.shape);
    EXPECT_EQ(back.data, t.data);
    auto wrong = make_infer_response(t);
    wrong["shape"] = {3};
    expect_code(ErrorCode::ProtocolError, [&] { parse_infer_response(wrong); });
    wrong["shape"] = {0};
    expect_code(ErrorCode::ProtocolError, [&] { parse_infer_response(wrong); });
}

TEST(ValidateOutput, ShapesAndValues) {
    const ImageGray img(3, 2);
    EXPECT_EQ(validate_output(ModelId::View, Tensor{{1}, {0.4f}}, 3, 2), std::vector<float>{0.4f});
    EXPECT_EQ(validate_output(ModelId::Tube, Tensor{{2}, {1.5f, -0.5f}}, 3, 2), (std::vector<float>{1.0f, 0.0f}));
    expect_code(ErrorCode::ProtocolError, [] { validate_output(ModelId::Tube, Tensor{{1}, {0.5f}}, 3, 2); });
    expect_code(ErrorCode::ProtocolError,
                [] { validate_output(ModelId::PtxSeg, Tensor{{3, 2}, std::vector<float>(6)}, 3, 2); });
    expect_code(ErrorCode::ProtocolError, [] {
        validate_output(ModelId::PtxFull, Tensor{{1}, {std::numeric_limits<float>::quiet_NaN()}}, 3, 2);
    });
    expect_code(ErrorCode::ProtocolError, [] {
        validate_output(ModelId::PtxFull, Tensor{{1}, {std::numeric_limits<float>::infinity()}}, 3, 2);
    });
    expect_code(ErrorCode::ProtocolError, [] { validate_output(ModelId::View, Tensor{{1}, {}}, 3, 2); });
}

TEST(StubLungRects, Geometry) {
    const auto r = stub_lung_rects(100, 200);
    EXPECT_EQ(r[0], (Rect{13, 55, 30, 110}));
    EXPECT_EQ(r[1], (Rect{57, 55, 30, 110}));
    for (int w : {1, 2, 3, 9, 64, 257}) {
        for (const Rect& x : stub_lung_rects(w, w + 3)) EXPECT_TRUE(x.fits(w, w + 3));
    }
}

TEST(StubBackend, Outputs) {
    StubBackend stub;
    const ImageGray img(4, 2, std::vector<float>{0, 0, 0, 0, 1, 1, 1, 1});
    EXPECT_EQ(infer_scalar(stub, {}, ModelId::View, img), 1.0);
    EXPECT_DOUBLE_EQ(infer_scalar(stub, {}, ModelId::PtxFull, img), 0.5);
    EXPECT_DOUBLE_EQ(infer_scalar(stub, {}, ModelId::PtxPatch, img), 0.5);
    EXPECT_EQ(infer_tube(stub, {}, img).any(), 0.0);
    const auto seg = infer_map(stub, {}, ModelId::PtxSeg, img);
    EXPECT_EQ(seg.at(3, 1), 1.0f);
    EXPECT_EQ(seg.at(0, 0), 0.0f);
    expect_code(ErrorCode::InvalidArgument, [&] { infer_scalar(stub, {}, ModelId::Tube, img); });
    expect_code(ErrorCode::InvalidArgument, [&] { infer_map(stub, {}, ModelId::View, img); });
}

std::map<std::string, OracleRecord> oracle_fixture() {
    std::map<std::string, OracleRecord> m;
    m["pos"] = OracleRecord{true, false, std::nullopt, ViewPosition::PA, PatchTag::LeftBase};
    m["neg"] = OracleRecord{false, false, std::nullopt, ViewPosition::AP, std::nullopt};
    m["lat"] = OracleRecord{true, false, std::nullopt, ViewPosition::Lateral, std::nullopt};
    m["pig"] = OracleRecord{false, true, TubeType::Pigtail, ViewPosition::PA, std::nullopt};
    m["std"] = OracleRecord{true, true, TubeType::Standard, ViewPosition::PA, std::nullopt};
    return m;
}

TEST(OracleBackend, NoiselessAnswers) {
    OracleBackend o(oracle_fixture());
    const ImageGray img(40, 40, 0.5f);
    auto ctx = [](std::string id, std::optional<PatchTag> p = std::nullopt) { return InferenceContext{id, p}; };
    EXPECT_NEAR(infer_scalar(o, ctx("pos"), ModelId::View, img), 0.9, 1e-6);
    EXPECT_NEAR(infer_scalar(o, ctx("lat"), ModelId::View, img), 0.1, 1e-6);
    EXPECT_NEAR(infer_scalar(o, ctx("pos"), ModelId::PtxFull, img), 0.9, 1e-6);
    EXPECT_NEAR(infer_scalar(o, ctx("neg"), ModelId::PtxFull, img), 0.1, 1e-6);
    EXPECT_NEAR(infer_scalar(o, ctx("pos", PatchTag::LeftBase), ModelId::PtxPatch, img), 0.9, 1e-6);
    EXPECT_NEAR(infer_scalar(o, ctx("pos", PatchTag::RightApex), ModelId::PtxPatch, img), 0.1, 1e-6);
    EXPECT_NEAR(infer_scalar(o, ctx("std", PatchTag::RightApex), ModelId::PtxPatch, img), 0.9, 1e-6);

    const auto pig = infer_tube(o, ctx("pig"), img);
    EXPECT_NEAR(pig.standard, 0.1, 1e-6);
    EXPECT_NEAR(pig.pigtail, 0.9, 1e-6);
    const auto st = infer_tube(o, ctx("std"), img);
    EXPECT_NEAR(st.standard, 0.9, 1e-6);
    EXPECT_NEAR(infer_tube(o, ctx("neg"), img).any(), 0.1, 1e-6);

    // Left base: the lower half of the image-right stub lung.
    const auto seg = infer_map(o, ctx("pos"), ModelId::PtxSeg, img);
    const Rect lung = stub_lung_rects(40, 40)[1];
    EXPECT_EQ(seg.at(lung.x0, lung.y1() - 1), 1.0f);
    EXPECT_EQ(seg.at(lung.x0, lung.y0), 0.0f);
    EXPECT_EQ(seg.at(stub_lung_rects(40, 40)[0].x0, lung.y1() - 1), 0.0f);
    EXPECT_EQ(seg_score(infer_map(o, ctx("neg"), ModelId::PtxSeg, img)), 0.0);

    expect_code(ErrorCode::MissingOracle, [&] { o.run(ctx("nobody"), ModelId::View, img); });
}

TEST(OracleBackend, NoiseIsBoundedAndDeterministic) {
    const OracleOptions opts{0.05, 42};
    OracleBackend a(oracle_fixture(), opts), b(oracle_fixture(), opts);
    OracleBackend other_seed(oracle_fixture(), OracleOptions{0.05, 43});
    bool any_differs = false;
    for (const auto& id : {"pos", "neg", "lat", "pig", "std"}) {
        for (ModelId m : kAllModels) {
            for (auto p : {std::optional<PatchTag>{}, std::optional<PatchTag>{PatchTag::LeftApex}}) {
                const InferenceContext ctx{id, p};
                const double n = a.noise(ctx, m);
                EXPECT_LE(std::abs(n), 0.05);
                EXPECT_EQ(n, b.noise(ctx, m));
                any_differs = any_differs || n != other_seed.noise(ctx, m);
            }
        }
    }
    EXPECT_TRUE(any_differs);
    EXPECT_EQ(OracleBackend(oracle_fixture()).noise({"pos", {}}, ModelId::View), 0.0);
    expect_code(ErrorCode::InvalidArgument, [] { OracleBackend(oracle_fixture(), OracleOptions{0.4, 0}); });
}

TEST(MakeBackend, Specs) {
    EXPECT_NE(dynamic_cast<StubBackend*>(make_backend("stub", {}).get()), nullptr);
    EXPECT_NE(dynamic_cast<OracleBackend*>(make_backend("oracle", {}).get()), nullptr);
    EXPECT_NE(dynamic_cast<RemoteBackend*>(make_backend("http://127.0.0.1:1", {}).get()), nullptr);
    expect_code(ErrorCode::InvalidArgument, [] { make_backend("tensorrt", {}); });
}

TEST(RemoteBackend, MatchesLocalStubOverTheWire) {
    StubBackend stub;
    ServerFixture server(stub);
    ASSERT_GT(server.port(), 0);
    RemoteBackend remote(server.url());
    std::mt19937 rng(3);
    const auto img = test::random_image(rng, 12, 9);
    for (ModelId m : kAllModels) {
        const Tensor local = stub.run({}, m, img);
        const Tensor wire = remote.run({}, m, img);
        EXPECT_EQ(wire.shape, local.shape) << to_string(m);
        EXPECT_EQ(wire.data, local.data) << to_string(m);
    }
}

TEST(RemoteBackend, AdversarialOutputsAreCaughtByValidation) {
    const ImageGray img(4, 4, 0.5f);
    {
        FixedBackend nan_backend(Tensor{{1}, {std::numeric_limits<float>::quiet_NaN()}});
        ServerFixture server(nan_backend);
        RemoteBackend remote(server.url());
        expect_code(ErrorCode::ProtocolError, [&] { infer_scalar(remote, {}, ModelId::PtxFull, img); });
    }
    {
        FixedBackend high(Tensor{{1}, {2.0f}});
        ServerFixture server(high);
        RemoteBackend remote(server.url());
        EXPECT_EQ(infer_scalar(remote, {}, ModelId::PtxFull, img), 1.0);
    }
    {
        FixedBackend low(Tensor{{1}, {-1.0f}});
        ServerFixture server(low);
        RemoteBackend remote(server.url());
        EXPECT_EQ(infer_scalar(remote, {}, ModelId::View, img), 0.0);
        expect_code(ErrorCode::ProtocolError, [&] { infer_tube(remote, {}, img); });  // wrong shape
    }
}

TEST(RemoteBackend, StatusMapping) {
    ThrowingBackend failing;
    ServerFixture server(failing);
    RemoteBackend remote(server.url());
    expect_code(ErrorCode::BackendUnavailable, [&] { remote.run({}, ModelId::View, ImageGray(2, 2)); });

    httplib::Client raw("127.0.0.1", server.port());
    auto unknown = make_infer_request(ModelId::View, ImageGray(2, 2));
    unknown["model"] = "ptx_mega";
    auto res = raw.Post("/v1/infer", unknown.dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    res = raw.Post("/v1/infer", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422);
}

TEST(RemoteBackend, UnreachableIsUnavailable) {
    int port = 0;
    {
        StubBackend stub;
        ServerFixture server(stub);
        port = server.port();
    }
    RemoteBackend remote("http://127.0.0.1:" + std::to_string(port), RemoteOptions{1, std::chrono::milliseconds(500)});
    expect_code(ErrorCode::BackendUnavailable, [&] { remote.run({}, ModelId::View, ImageGray(2, 2)); });
}

TEST(RemoteBackend, ConcurrentCallersShareBoundedSlots) {
    StubBackend stub;
    ServerFixture server(stub);
    RemoteBackend remote(server.url(), RemoteOptions{2, std::chrono::seconds(10)});
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int t = 0; t < 6; ++t) {
        threads.emplace_back([&] {
            const ImageGray img(8, 8, 0.25f);
            if (infer_scalar(remote, {}, ModelId::PtxFull, img) == 0.25) ++ok;
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(ok.load(), 6);
}

TEST(RecordingBackend, RecordsCalls) {
    StubBackend stub;
    RecordingBackend rec(stub);
    rec.run({"s1", PatchTag::LeftApex}, ModelId::PtxPatch, ImageGray(5, 3));
    const auto calls = rec.calls();
    ASSERT_EQ(calls.size(), 1u);
    EXPECT_EQ(calls[0].model, ModelId::PtxPatch);
    EXPECT_EQ(calls[0].width, 5);
    EXPECT_EQ(calls[0].height, 3);
    EXPECT_EQ(calls[0].study_id, "s1");
    EXPECT_EQ(calls[0].patch, PatchTag::LeftApex);
}

}  // namespace
}  // namespace ptx
