// Microbenchmarks for the hot paths: ranking, resampling, labeling and one
// full study through the oracle backend.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ptx/backends.hpp"
#include "ptx/eval.hpp"
#include "ptx/imaging.hpp"
#include "ptx/pipeline.hpp"
#include "ptx/report_nlp.hpp"
#include "ptx/segpost.hpp"
#include "ptx/synthetic.hpp"

namespace {

void BM_Auc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> pos(n / 10), neg(n - n / 10);
    for (auto& v : pos) v = u(rng) * 0.5 + 0.3;
    for (auto& v : neg) v = u(rng) * 0.7;
    for (auto _ : state) benchmark::DoNotOptimize(ptx::auc(pos, neg));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_Auc)->Arg(2000)->Arg(20000)->Arg(200000);

void BM_ResizeBilinear(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const ptx::ImageGray img = ptx::synthetic_radiograph(side, side);
    for (auto _ : state) benchmark::DoNotOptimize(ptx::resize_bilinear(img, 224, 224));
}
BENCHMARK(BM_ResizeBilinear)->Arg(512)->Arg(2048);

void BM_ConnectedComponents(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    std::mt19937_64 rng(11);
    std::bernoulli_distribution coin(0.45);
    ptx::BinaryMask mask(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) mask.set(x, y, coin(rng));
    for (auto _ : state) benchmark::DoNotOptimize(ptx::connected_components(mask));
}
BENCHMARK(BM_ConnectedComponents)->Arg(224)->Arg(1024);

void BM_RunStudyOracle(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const ptx::ImageGray img = ptx::synthetic_radiograph(side, side);
    ptx::OracleRecord truth;
    truth.pneumothorax = true;
    truth.location = ptx::PatchTag::RightApex;
    ptx::OracleBackend backend({{"s1", truth}});
    const ptx::PipelineConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(ptx::run_study_image("s1", img, backend, cfg));
}
BENCHMARK(BM_RunStudyOracle)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_ClassifyReport(benchmark::State& state) {
    const std::string report =
        "FINDINGS: Lines and tubes are unchanged. Heart size is normal. No focal consolidation. "
        "There is no pleural effusion or pneumothorax. Mild degenerative changes of the spine. "
        "IMPRESSION: No acute cardiopulmonary process. Small right apical pneumothorax cannot be excluded.";
    for (auto _ : state) benchmark::DoNotOptimize(ptx::classify_report(report));
    state.SetBytesProcessed(state.iterations() * static_cast<long>(report.size()));
}
BENCHMARK(BM_ClassifyReport);

}  // namespace

// The packaged benchmark_main archive carries LTO bytecode from another
// compiler build, so main comes from the macro instead.
BENCHMARK_MAIN();
