#include <benchmark/benchmark.h>

#include <random>

#include "bnn/engine.hpp"
#include "bnn/mapper.hpp"
#include "bnn/modelio.hpp"

using namespace bnn;

namespace {

BinaryTensor random_bits(std::size_t n, std::mt19937_64& rng) {
  std::vector<Word> words(words_for(n));
  for (auto& w : words) w = rng();
  return BinaryTensor({n}, std::move(words));
}

const ModelSpec& fashion() {
  static const ModelSpec m = export_synthetic_model(Architecture::Fashion, 7);
  return m;
}

const PreparedModel& prepared() {
  static const PreparedModel m(fashion());
  return m;
}

// Layer inputs for one batch of the fashion model.
std::vector<Activation> trace(std::size_t batch) {
  const Dataset d = synthetic_dataset(fashion().input, batch, fashion().num_classes, 1);
  std::vector<Activation> acts{input_activation(fashion(), d.images)};
  for (const auto& l : prepared().layers()) acts.push_back(reference_forward(l, acts.back()));
  return acts;
}

void BM_XnorDot(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const BinaryTensor a = random_bits(n, rng), b = random_bits(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(xnor_popcount_dot(whole(a), whole(b)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_XnorDot)->Arg(64)->Arg(576)->Arg(3136);

// Reference path of a single layer; arg 0 is the layer index, arg 1 the batch.
void BM_ReferenceLayer(benchmark::State& state) {
  const auto layer = static_cast<std::size_t>(state.range(0));
  const auto acts = trace(static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(reference_forward(prepared().layers()[layer], acts[layer]));
  state.SetLabel(std::string(to_string(fashion().layers[layer].kind)));
}
BENCHMARK(BM_ReferenceLayer)->ArgsProduct({{0, 1, 2, 3, 4, 7, 9}, {1, 8}})->Unit(benchmark::kMicrosecond);

// Second conv layer under each configuration, including staging overhead.
void BM_ConvBinConfig(benchmark::State& state) {
  const ParallelConfig c = kAllConfigs[static_cast<std::size_t>(state.range(0))];
  const auto acts = trace(static_cast<std::size_t>(state.range(1)));
  Engine engine;
  for (auto _ : state) benchmark::DoNotOptimize(engine.execute_layer(prepared().layers()[3], acts[3], c));
  state.SetLabel(std::string(to_string(c)));
}
BENCHMARK(BM_ConvBinConfig)
    ->ArgsProduct({{0, 1, 2, 3, 4, 5, 6, 7}, {1, 8}})
    ->Unit(benchmark::kMicrosecond)
    ->UseRealTime();

void BM_Inference(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const Dataset d = synthetic_dataset(fashion().input, batch, fashion().num_classes, 2);
  for (auto _ : state) benchmark::DoNotOptimize(reference_infer(prepared(), d.images));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Inference)->RangeMultiplier(4)->Range(1, 64)->Unit(benchmark::kMillisecond);

void BM_SelectPlan(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto& kinds_src = fashion().layers;
  std::vector<LayerKind> kinds;
  for (const auto& l : kinds_src) kinds.push_back(l.kind);
  ProfileTable t;
  t.metadata.configs.assign(kAllConfigs.begin(), kAllConfigs.end());
  t.metadata.batch_sizes = batch_sweep(0, 7);
  for (std::size_t b : t.metadata.batch_sizes)
    for (std::size_t l = 0; l < kinds.size(); ++l)
      for (ParallelConfig c : kAllConfigs)
        if (is_applicable(kinds[l], c))
          t.entries[{l, c, b}] = ProfileEntry{static_cast<std::int64_t>(rng() % 1000),
                                              static_cast<std::int64_t>(rng() % 100000), 1, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(select_plan(t, kinds));
}
BENCHMARK(BM_SelectPlan);

}  // namespace

BENCHMARK_MAIN();
