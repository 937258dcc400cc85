#include <benchmark/benchmark.h>

#include "dlearn/dgp.hpp"
#include "dlearn/harness.hpp"
#include "dlearn/linmod.hpp"
#include "dlearn/residvar.hpp"
#include "dlearn/stabilizer.hpp"

namespace {

dlearn::LabeledDataset make_data(int scenario_id, int n, int p) {
    return dlearn::generate(dlearn::scenario(scenario_id), n, p, 42);
}

void BM_WlsFit(benchmark::State& state) {
    auto labeled = make_data(2, static_cast<int>(state.range(0)), 10);
    const auto& d = labeled.data;
    dlearn::Vector y = 2.0 * d.R.cwiseProduct(d.A.cast<double>());
    dlearn::Vector w = d.pi.cwiseInverse();
    for (auto _ : state) {
        auto fit = dlearn::fit_wls(d.X.values, y, w);
        benchmark::DoNotOptimize(fit.coefficients);
    }
}
BENCHMARK(BM_WlsFit)->Arg(200)->Arg(1000);

void BM_LassoCvPath(benchmark::State& state) {
    auto labeled = make_data(2, static_cast<int>(state.range(0)), 30);
    const auto& d = labeled.data;
    for (auto _ : state) {
        auto model = dlearn::fit_dlearning(d, dlearn::Regularization::lasso_cv());
        benchmark::DoNotOptimize(model.beta);
    }
}
BENCHMARK(BM_LassoCvPath)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
    auto labeled = make_data(4, 200, 4);
    auto base = dlearn::fit_dlearning(labeled.data, dlearn::Regularization::lasso_cv());
    auto sq = dlearn::squared_residuals(labeled.data, base);
    auto features = dlearn::build_variance_features(labeled.data);
    dlearn::ForestParams params;
    params.n_trees = static_cast<int>(state.range(0));
    for (auto _ : state) {
        dlearn::RandomForest forest;
        forest.params = params;
        forest.fit(features, sq, 7);
        benchmark::DoNotOptimize(forest.predict(features.row(0)));
    }
}
BENCHMARK(BM_ForestFit)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Stabilize(benchmark::State& state) {
    auto labeled = make_data(2, 200, 10);
    dlearn::ResidvarConfig rv;
    rv.seed = 9;
    for (auto _ : state) {
        auto model = dlearn::stabilize(labeled.data, dlearn::RuleKind::D, rv,
                                       dlearn::Regularization::lasso_cv());
        benchmark::DoNotOptimize(model.beta);
    }
}
BENCHMARK(BM_Stabilize)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
