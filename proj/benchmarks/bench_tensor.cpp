#include <benchmark/benchmark.h>

#include "drivegen/rng.hpp"
#include "drivegen/tensor.hpp"

using drivegen::RngStream;
using drivegen::nn::Tensor;
namespace nn = drivegen::nn;

namespace {

Tensor random_tensor(int rows, int cols, uint64_t seed, bool rg = false) {
    RngStream rng(seed);
    std::vector<double> v(static_cast<size_t>(rows) * cols);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor(rows, cols, std::move(v), rg);
}

void BM_Matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Tensor a = random_tensor(n, n, 1);
    Tensor b = random_tensor(n, n, 2);
    for (auto _ : state) {
        Tensor c = nn::matmul(a, b);
        benchmark::DoNotOptimize(c.values().data());
    }
    state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_MatmulBackward(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Tensor a = random_tensor(n, n, 1, true);
    Tensor b = random_tensor(n, n, 2, true);
    for (auto _ : state) {
        Tensor loss = nn::sum(nn::matmul(a, b));
        nn::backward(loss);
        a.zero_grad();
        b.zero_grad();
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(128);

void BM_SoftmaxRows(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Tensor a = random_tensor(n, n, 3);
    for (auto _ : state) {
        Tensor s = nn::softmax_rows(a);
        benchmark::DoNotOptimize(s.values().data());
    }
}
BENCHMARK(BM_SoftmaxRows)->Arg(64)->Arg(256);

void BM_LayerNorm(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Tensor x = random_tensor(n, 64, 4);
    Tensor gamma = Tensor::full(1, 64, 1.0);
    Tensor beta = Tensor::zeros(1, 64);
    for (auto _ : state) {
        Tensor y = nn::layer_norm_rows(x, gamma, beta);
        benchmark::DoNotOptimize(y.values().data());
    }
}
BENCHMARK(BM_LayerNorm)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
