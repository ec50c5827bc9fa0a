// Serial reference vs OpenMP kernels on a two-moons batch.

#include <benchmark/benchmark.h>

#include "leaware/domains.hpp"
#include "leaware/kernels.hpp"

namespace {

struct Fixture {
  leaware::ModelSpec spec{{2, 64, 64, 2}, leaware::Activation::tanh,
                          leaware::OutputKind::softmax_cross_entropy};
  leaware::ParamVector params;
  leaware::Batch batch;

  explicit Fixture(std::size_t n) {
    params = leaware::init_params(spec, 1);
    batch = leaware::make_batch(leaware::gen_two_moons(n, 0.1, 2));
  }
};

void BM_grad_reference(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(leaware::reference::data_loss_and_grad(f.spec, f.params, f.batch));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_grad_omp(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(leaware::kernels::data_loss_and_grad(f.spec, f.params, f.batch));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_forward_reference(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(leaware::reference::forward(f.spec, f.params, f.batch.inputs));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_forward_omp(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(leaware::kernels::forward(f.spec, f.params, f.batch.inputs));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_grad_reference)->Arg(32)->Arg(512)->Arg(4096);
BENCHMARK(BM_grad_omp)->Arg(32)->Arg(512)->Arg(4096);
BENCHMARK(BM_forward_reference)->Arg(32)->Arg(512)->Arg(4096);
BENCHMARK(BM_forward_omp)->Arg(32)->Arg(512)->Arg(4096);

BENCHMARK_MAIN();
