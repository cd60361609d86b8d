#pragma once
// Independent reference computations for the evaluation module.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "ptx/eval.hpp"
#include "fixtures.hpp"

namespace ptx::test {

/// Exhaustive pair count: (2 * #{p > n} + #{p == n}) / (2 * |P| * |N|).
inline double brute_force_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::uint64_t twice = 0;
    for (double p : pos) {
        for (double n : neg) twice += p > n ? 2 : p == n ? 1 : 0;
    }
    return static_cast<double>(twice) / (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

struct AucInstance {
    std::vector<double> pos;
    std::vector<double> neg;
};

/// Sizes in [1, max_n] per class; about half the instances draw from a
/// small discrete set so that ties are common.
inline AucInstance random_auc_instance(std::mt19937_64& rng, int max_n) {
    std::uniform_int_distribution<int> size(1, max_n);
    const bool discrete = std::bernoulli_distribution(0.5)(rng);
    const int levels = std::uniform_int_distribution<int>(1, 12)(rng);
    std::uniform_int_distribution<int> level(0, levels - 1);
    std::normal_distribution<double> cont(0.0, 1.0);
    const double shift = std::uniform_real_distribution<double>(-1.0, 2.0)(rng);
    AucInstance inst;
    inst.pos.resize(static_cast<std::size_t>(size(rng)));
    inst.neg.resize(static_cast<std::size_t>(size(rng)));
    for (auto& v : inst.pos) v = discrete ? level(rng) / static_cast<double>(levels) + (level(rng) % 2) * 0.1 : cont(rng) + shift;
    for (auto& v : inst.neg) v = discrete ? level(rng) / static_cast<double>(levels) : cont(rng);
    return inst;
}

struct ReportedRow {
    double auc_all;
    double auc_no_tubes;
    double printed_pct;
};

/// (AUC all data, AUC no tubes, printed % change) for the eight rows of the
/// reference comparison table.
inline constexpr ReportedRow kReportedRows[] = {
    {0.895, 0.816, -8.8}, {0.844, 0.787, -6.8}, {0.940, 0.890, -5.3}, {0.941, 0.941, 0.0},
    {0.932, 0.878, -5.8}, {0.921, 0.927, 0.7},  {0.952, 0.953, 0.1},  {0.958, 0.948, -1.0},
};

/// Labels shaped like the reference test set: 1,962 studies, 195 positive,
/// 156 of them with chest tubes and 39 without. The number of negatives with
/// tubes is not reported; `negatives_with_tubes` picks it.
struct StrataFixture {
    std::vector<StudyResult> results;
    std::vector<EvalLabel> labels;
};

inline StrataFixture reference_strata(std::size_t negatives_with_tubes, std::uint64_t seed) {
    constexpr std::size_t kTotal = 1962, kPosTube = 156, kPosNoTube = 39;
    StrataFixture f;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < kTotal; ++i) {
        EvalLabel l;
        if (i < kPosTube) {
            l = {true, true, i % 3 == 0 ? TubeType::Pigtail : TubeType::Standard};
        } else if (i < kPosTube + kPosNoTube) {
            l = {true, false, std::nullopt};
        } else if (i < kPosTube + kPosNoTube + negatives_with_tubes) {
            l = {false, true, TubeType::Standard};
        } else {
            l = {false, false, std::nullopt};
        }
        const double ptx = l.pneumothorax ? 0.4 + 0.6 * u(rng) : 0.6 * u(rng);
        auto r = make_result("R" + std::to_string(i), true, ptx, l.chest_tube ? 0.8 : 0.2);
        f.results.push_back(std::move(r));
        f.labels.push_back(l);
    }
    std::shuffle(f.results.begin(), f.results.end(), rng);
    // Keep labels aligned after the shuffle.
    std::vector<EvalLabel> aligned;
    for (const auto& r : f.results) aligned.push_back(f.labels[std::stoul(r.study_id.substr(1))]);
    f.labels = std::move(aligned);
    return f;
}

}  // namespace ptx::test
