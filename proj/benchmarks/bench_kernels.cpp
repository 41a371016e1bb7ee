// Microbenchmarks for the hot kernels: both interaction routes across path
// lengths, the attention stack, and the walk sampler.
#include <benchmark/benchmark.h>

#include "hinge/attention.hpp"
#include "hinge/interaction.hpp"
#include "hinge/sampler.hpp"

using namespace hinge;

namespace {

Tensor rand_tensor(Shape s, Rng& rng) {
  Tensor t(s);
  for (size_t k = 0; k < t.size(); ++k) t.at(k) = rng.next_symmetric();
  return t;
}

void bench_interact(benchmark::State& state, ConvRoute route) {
  const uint32_t len = static_cast<uint32_t>(state.range(0));
  const uint32_t rows = 256, dim = 64;
  Rng rng = Rng::keyed({99, len});
  Tensor s = rand_tensor(Shape::cube(rows, len, dim), rng);
  Tensor t = rand_tensor(Shape::cube(rows, len, dim), rng);
  ParameterStore store;
  GradBuffer grads(store);
  for (auto _ : state) {
    Tape tape(store, grads);
    Value y = interact(tape, tape.constant(s), tape.constant(t), route, false);
    benchmark::DoNotOptimize(tape.value(y).data());
  }
  state.SetItemsProcessed(state.iterations() * rows * (2 * len - 1) * dim);
}

void conv_naive(benchmark::State& state) { bench_interact(state, ConvRoute::naive); }
void conv_fft(benchmark::State& state) { bench_interact(state, ConvRoute::fft); }

void attention_stack(benchmark::State& state) {
  const uint32_t rows = static_cast<uint32_t>(state.range(0));
  const uint32_t dim = 64, positions = 7;
  Rng rng = Rng::keyed({98});
  ParameterStore store;
  auto ep = ElementAttentionParams::create(store, "elem", dim, 3, rng);
  auto pp = PathAttentionParams::create(store, "path", dim, rng);
  Tensor h = rand_tensor(Shape::cube(rows, positions, dim), rng);
  GradBuffer grads(store);
  for (auto _ : state) {
    Tape tape(store, grads);
    Value z = element_attention(tape, tape.constant(h), ep, 0.2f, Nonlinearity::elu);
    PathAttentionOut out = path_attention(tape, z, pp, 0.2f, Nonlinearity::elu);
    benchmark::DoNotOptimize(tape.value(out.mixed).data());
  }
}

void walk_sampler(benchmark::State& state) {
  HeteroGraph g;
  TypeId u = g.add_type("user", 'U', 500);
  TypeId i = g.add_type("item", 'I', 800);
  RelationId ui = g.add_relation("likes", u, i, "liked-by");
  Rng wiring = Rng::keyed({97});
  for (uint32_t a = 0; a < 500; ++a)
    for (int k = 0; k < 20; ++k) g.add_edge({u, a}, {i, wiring.next_index(800)}, ui);
  g.freeze();
  Metapath mp = g.parse_metapath("UIUI");
  Rng rng = Rng::keyed({96});
  uint32_t anchor = 0;
  for (auto _ : state) {
    PathBatch b = sample_paths(g, {u, anchor}, mp, 16, rng);
    benchmark::DoNotOptimize(b.ids.data());
    anchor = (anchor + 1) % 500;
  }
  state.SetItemsProcessed(state.iterations() * 16 * 4);
}

}  // namespace

BENCHMARK(conv_naive)->Arg(4)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(conv_fft)->Arg(4)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(attention_stack)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(walk_sampler)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
