#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#include "ptx/error.hpp"
#include "ptx/imaging.hpp"
#include "ptx/segpost.hpp"

namespace ptx::test {

template <typename Fn>
void expect_code(ErrorCode code, Fn&& fn) {
    try {
        fn();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

inline std::filesystem::path data_dir() { return PTX_TEST_DATA_DIR; }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("ptx-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void fill_rect(ProbMap& m, const Rect& r, float v) {
    for (int y = r.y0; y < r.y1(); ++y) {
        for (int x = r.x0; x < r.x1(); ++x) m.set(x, y, v);
    }
}

inline ImageGray random_image(std::mt19937& rng, int w, int h) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> p(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (auto& v : p) v = u(rng);
    return ImageGray(w, h, std::move(p));
}

}  // namespace ptx::test
