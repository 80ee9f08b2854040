// OpenMP kernels against their serial references.

#include "satnn/datasets.hpp"
#include "satnn/random.hpp"
#include "satnn/runtime.hpp"

#include <benchmark/benchmark.h>

using namespace satnn;

namespace {

TrainedModel random_model(int dim, int hidden) {
    Rng rng(1);
    TrainedModel m;
    m.net.input_dim = dim;
    m.net.hidden = {hidden};
    m.values.layers.resize(2);
    for (int n = 0; n < hidden; ++n) {
        std::vector<std::int64_t> w;
        for (int i = 0; i < dim; ++i) w.push_back(static_cast<std::int64_t>(uniform_below(rng, 3)) - 1);
        m.values.layers[0].weights.push_back(std::move(w));
        m.values.layers[0].biases.push_back(0);
    }
    m.values.layers[1].weights = {std::vector<std::int64_t>(static_cast<std::size_t>(hidden), 1)};
    m.values.layers[1].biases = {-3};
    return m;
}

const Dataset& parity16() {
    static const Dataset ds = gen_parity(16, default_parity16_positions(), std::nullopt, 0);
    return ds;
}

void BM_accuracy(benchmark::State& state) {
    const TrainedModel m = random_model(16, 10);
    for (auto _ : state) benchmark::DoNotOptimize(accuracy(m, parity16(), AccuracyMode::Plain));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * parity16().size()));
}

void BM_accuracy_serial(benchmark::State& state) {
    const TrainedModel m = random_model(16, 10);
    for (auto _ : state) benchmark::DoNotOptimize(accuracy_serial(m, parity16(), AccuracyMode::Plain));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * parity16().size()));
}

struct OracleCase {
    NetworkSpec net;
    Hyperparams hp;
    std::vector<Example> batch;

    OracleCase() {
        net.input_dim = 2;
        net.hidden = {1};
        hp.num_bits = 3;
        hp.slack_bits = 5;
        hp.product_magnitude_bits = 4;
        hp.cost_bits = 1;
        batch = {{{1, 0}, 1}, {{0, 1}, 1}, {{1, 1}, -1}, {{0, 0}, -1}};
    }
};

void BM_oracle(benchmark::State& state) {
    const OracleCase c;
    for (auto _ : state) benchmark::DoNotOptimize(exhaustive_train_oracle(c.net, c.batch, c.hp).sat);
}

void BM_oracle_serial(benchmark::State& state) {
    const OracleCase c;
    for (auto _ : state) benchmark::DoNotOptimize(exhaustive_train_oracle_serial(c.net, c.batch, c.hp).sat);
}

} // namespace

BENCHMARK(BM_accuracy)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_accuracy_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_oracle)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_oracle_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
