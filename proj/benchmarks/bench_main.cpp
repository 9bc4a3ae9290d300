#include <benchmark/benchmark.h>

#include "greensurrogate/greensolver.hpp"
#include "greensurrogate/operator.hpp"
#include "greensurrogate/source.hpp"
#include "greensurrogate/unet.hpp"

using namespace gsurr;

namespace {

const RectDomain kSquare{-1.0, -1.0, 2.0, 2.0};

UNetConfig net(int c1, int depth, int n) {
  UNetConfig c;
  c.first_channels = c1;
  c.depth = depth;
  c.n = c.m = n;
  return c;
}

void BM_JacobiSweep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Grid g = build_grid(kSquare, n, n);
  const StencilCoeffs s = assemble_stencil(g, rd1_coefficients());
  const Field rho = gaussian_source(g, {0.1, 0.2}, 2.0 * g.h1());
  Field a(g), b(g);
  for (auto _ : state) {
    jacobi_sweep(s, a.values(), rho.values(), b.values());
    std::swap(a, b);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.interior_size()));
}
BENCHMARK(BM_JacobiSweep)->Arg(32)->Arg(64)->Arg(128);

void BM_DirectGreen(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ReferenceProvider rp(build_grid(kSquare, n, n), laplace_coefficients(), SourceConfig{},
                             {ReferenceSolver::direct});
  for (auto _ : state) benchmark::DoNotOptimize(rp.green({0.0, 0.0}));
}
BENCHMARK(BM_DirectGreen)->Arg(32)->Arg(64);

void BM_UNetForward(benchmark::State& state) {
  const UNetConfig c = net(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
                           static_cast<int>(state.range(2)));
  const UNet unet(c);
  const UNetParams p = init_unet(c, 1);
  const InputTensor in = build_input(build_grid(kSquare, c.n, c.m), {0.0, 0.0}, InputVariant::rho, SourceConfig{});
  auto ws = unet.make_workspace();
  for (auto _ : state) benchmark::DoNotOptimize(unet.forward(p, in, *ws));
}
BENCHMARK(BM_UNetForward)->Args({8, 3, 32})->Args({32, 4, 64})->Unit(benchmark::kMillisecond);

void BM_UNetForwardBackward(benchmark::State& state) {
  const UNetConfig c = net(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
                           static_cast<int>(state.range(2)));
  const UNet unet(c);
  const UNetParams p = init_unet(c, 1);
  const InputTensor in = build_input(build_grid(kSquare, c.n, c.m), {0.0, 0.0}, InputVariant::rho, SourceConfig{});
  auto ws = unet.make_workspace();
  std::vector<double> grad(p.values.size());
  for (auto _ : state) {
    const Field out = unet.forward(p, in, *ws);
    unet.backward(p, *ws, out, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_UNetForwardBackward)->Args({8, 3, 32})->Args({32, 4, 64})->Unit(benchmark::kMillisecond);

void BM_SolveBvp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const BVP bvp = named_case("poisson-cos");
  const ReferenceProvider rp(build_grid(kSquare, n, n), bvp.coeffs, solver_source_config(),
                             {ReferenceSolver::direct});
  for (auto _ : state) benchmark::DoNotOptimize(solve_bvp(rp, bvp));
}
BENCHMARK(BM_SolveBvp)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
