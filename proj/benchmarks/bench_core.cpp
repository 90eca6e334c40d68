// Microbenchmarks for the hot paths: Gram assembly, the high-precision
// smallest-eigenvalue solve, closed-loop modal setup/propagation and one
// integrating-factor step. Run with --benchmark_filter=... to narrow down.
#include "heatctl/basis.hpp"
#include "heatctl/experiment.hpp"
#include "heatctl/feedback.hpp"
#include "heatctl/gram.hpp"
#include "heatctl/integrate.hpp"
#include "heatctl/rng.hpp"

#include <benchmark/benchmark.h>

#include <numbers>

namespace {

using namespace heatctl;

const Domain& desk_domain() {
  static const Domain d = make_domain({std::numbers::pi});
  return d;
}

const Region& desk_omega() {
  static const Region r = make_region(desk_domain(), {1.0}, {2.0});
  return r;
}

void BM_GramAssembly(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const Basis basis = make_basis(desk_domain(), 4 * N);
  for (auto _ : state) {
    Matrix G = gram_matrix(basis, desk_omega(), N);
    benchmark::DoNotOptimize(G.data());
  }
}
BENCHMARK(BM_GramAssembly)->Arg(16)->Arg(64)->Arg(256);

void BM_MinEigHighPrecision(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const Basis basis = make_basis(desk_domain(), 128);
  for (auto _ : state) {
    MinEig e = min_eig_observed(basis, desk_omega(), N);
    benchmark::DoNotOptimize(e.log_value);
  }
}
BENCHMARK(BM_MinEigHighPrecision)->Arg(10)->Arg(30)->Arg(50)
    ->Unit(benchmark::kMillisecond);

void BM_ModalPieceBuild(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const Basis basis = make_basis(desk_domain(), M);
  const FeedbackParams p = make_params(100.0, 1.0, 2.0, basis);
  const Matrix G = gram_matrix(basis, desk_omega(), p.N);
  for (auto _ : state) {
    ModalPiece piece = build_modal_piece(basis, G, p);
    benchmark::DoNotOptimize(piece.theta.data());
  }
}
BENCHMARK(BM_ModalPieceBuild)->Arg(64)->Arg(256)->Arg(1024);

void BM_ModalPropagate(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const Basis basis = make_basis(desk_domain(), M);
  const FeedbackParams p = make_params(100.0, 1.0, 2.0, basis);
  const Matrix G = gram_matrix(basis, desk_omega(), p.N);
  const ModalPiece piece = build_modal_piece(basis, G, p);
  const Vector y0 = Rng(1).unit_vector(M);
  for (auto _ : state) {
    Vector y = modal_propagate(piece, y0, 0.25);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_ModalPropagate)->Arg(64)->Arg(256)->Arg(1024);

void BM_IntegratorStep(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const Basis basis = make_basis(desk_domain(), M);
  const FeedbackParams p = make_params(10.0, 1.0, 2.0, basis);
  const Matrix G = gram_matrix(basis, desk_omega(), p.N);
  const Vector y0 = Rng(1).unit_vector(M);
  for (auto _ : state) {
    Vector y = step_linear(basis, G, p, y0, 1e-5, 1e-6);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_IntegratorStep)->Arg(64)->Arg(256)->Arg(1024);

} // namespace

int main(int argc, char** argv) {
  heatctl::pin_blas_threads();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  return 0;
}
