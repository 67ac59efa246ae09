#include <benchmark/benchmark.h>

#include <random>

#include "tsem/model.hpp"
#include "tsem/ops.hpp"

using namespace tsem;

namespace {

TensorPtr random_tensor(std::vector<int> shape, std::uint64_t seed) {
    auto t = Tensor::zeros(shape);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    for (auto& v : t->data) v = dist(rng);
    return t;
}

void BM_Conv2dForward(benchmark::State& state) {
    int f = static_cast<int>(state.range(0));
    auto x = random_tensor({1, 3, 315}, 1);
    auto k = random_tensor({f, 1, 1, 63}, 2);
    for (auto _ : state) {
        auto y = conv2d_forward(nullptr, x, k, 0, 31, 1, 1);
        benchmark::DoNotOptimize(y->data.data());
    }
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(16);

void BM_LstmForward(benchmark::State& state) {
    int h = static_cast<int>(state.range(0));
    auto x = random_tensor({315, 3}, 3);
    LstmParams params{random_tensor({4 * h, 3 + h}, 4), random_tensor({4 * h}, 5), h};
    for (auto _ : state) {
        auto out = lstm_forward(nullptr, x, params);
        benchmark::DoNotOptimize(out.final_hidden->data.data());
    }
}
BENCHMARK(BM_LstmForward)->Arg(32)->Arg(63);

void BM_TsemForwardUWaveShape(benchmark::State& state) {
    ModelConfig cfg;
    cfg.n_features = 3;
    cfg.seq_length = 315;
    cfg.n_classes = 8;
    cfg.arch = Arch::Tsem;
    cfg.seed = 7;
    auto model = Model::build(cfg);
    auto x = random_tensor({3, 315}, 8);
    for (auto _ : state) {
        auto res = model.forward(x, nullptr);
        benchmark::DoNotOptimize(res.probs->data.data());
    }
}
BENCHMARK(BM_TsemForwardUWaveShape);

void BM_TsemTrainStep(benchmark::State& state) {
    ModelConfig cfg;
    cfg.n_features = 3;
    cfg.seq_length = 64;
    cfg.n_classes = 6;
    cfg.arch = Arch::Tsem;
    cfg.seed = 7;
    auto model = Model::build(cfg);
    auto x = random_tensor({3, 64}, 9);
    for (auto _ : state) {
        Tape tape;
        auto res = model.forward(x, &tape, {.train_mode = true});
        auto loss = cross_entropy_loss(&tape, res.logits, {2});
        tape.backward(loss);
        benchmark::DoNotOptimize(loss->data.data());
        for (auto& p : model.parameters()) p->zero_grad();
    }
}
BENCHMARK(BM_TsemTrainStep);

}  // namespace

BENCHMARK_MAIN();
