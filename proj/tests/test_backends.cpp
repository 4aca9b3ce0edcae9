#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <random>

#include "bnn/engine.hpp"
#include "bnn/modelio.hpp"
#include "bnn/partition.hpp"
#include "support/errors.hpp"
#include "support/models.hpp"

using namespace bnn;

namespace {

LayerSpec conv_layer(std::size_t c, std::size_t h, std::size_t k) {
  LayerSpec l;
  l.kind = LayerKind::ConvBin;
  l.in_shape = Shape::image(c, h, h);
  l.out_shape = Shape::image(k, h, h);
  l.out_channels = k;
  return l;
}

LayerSpec fc_layer(std::size_t l_in, std::size_t m) {
  LayerSpec l;
  l.kind = LayerKind::FcBin;
  l.in_shape = Shape::vector(l_in);
  l.out_shape = Shape::vector(m);
  return l;
}

std::map<std::size_t, std::size_t> per_worker(const std::vector<WorkItem>& items) {
  std::map<std::size_t, std::size_t> n;
  for (const auto& it : items) ++n[it.worker];
  return n;
}

/// Inputs to every layer of `m` on the reference path.
std::vector<Activation> reference_inputs(const PreparedModel& m, const IntTensor& batch) {
  std::vector<Activation> ins{input_activation(m.spec(), batch)};
  for (const auto& l : m.layers()) ins.push_back(reference_forward(l, ins.back()));
  return ins;
}

}  // namespace

TEST(Partition, WindowRowsOnConv) {
  const auto items = partition_work(conv_layer(8, 16, 8), ParallelConfig::Y, 1, 4);
  ASSERT_EQ(items.size(), 16u);
  for (const auto& [w, n] : per_worker(items)) EXPECT_EQ(n, 4u) << "worker " << w;
  EXPECT_FALSE(coverage_check(items, output_space(conv_layer(8, 16, 8), 1)).has_value());
}

TEST(Partition, NeuronItemsOnFc) {
  const auto items = partition_work(fc_layer(256, 1024), ParallelConfig::Z, 1, 8);
  EXPECT_EQ(items.size(), 1024u);
  EXPECT_FALSE(coverage_check(items, output_space(fc_layer(256, 1024), 1)).has_value());
}

TEST(Partition, ProductOfAxes) {
  const LayerSpec l = conv_layer(64, 16, 64);
  EXPECT_EQ(partition_work(l, ParallelConfig::XYZ, 8, 4).size(), 8u * 16 * 64);
  EXPECT_EQ(partition_work(l, ParallelConfig::X, 8, 4).size(), 8u);
  EXPECT_EQ(partition_work(l, ParallelConfig::XY, 8, 4).size(), 8u * 16);
  EXPECT_EQ(partition_work(l, ParallelConfig::YZ, 8, 4).size(), 16u * 64);
  EXPECT_EQ(partition_work(l, ParallelConfig::XYZ, 8, 4, {4, 64}).size(), 8u * 4 * 64);
  // Y on a 1-D layer cuts neuron bands; Z is finer and wins in YZ.
  EXPECT_EQ(partition_work(fc_layer(64, 1024), ParallelConfig::Y, 1, 1).size(), 16u);
  EXPECT_EQ(partition_work(fc_layer(64, 1000), ParallelConfig::Y, 1, 1).size(), 16u);
  EXPECT_EQ(partition_work(fc_layer(64, 1024), ParallelConfig::YZ, 2, 1).size(), 1024u);
  EXPECT_EQ(partition_work(fc_layer(64, 1024), ParallelConfig::XY, 2, 1).size(), 32u);
}

TEST(Partition, RoundRobinNumbering) {
  const auto items = partition_work(conv_layer(1, 4, 2), ParallelConfig::XYZ, 2, 3);
  ASSERT_EQ(items.size(), 16u);
  for (std::size_t i = 0; i < items.size(); ++i) EXPECT_EQ(items[i].worker, i % 3);
  EXPECT_EQ(items[0].box, (Box{0, 1, 0, 1, 0, 1}));
  EXPECT_EQ(items[1].box, (Box{0, 1, 0, 1, 1, 2}));
  EXPECT_EQ(items[2].box, (Box{0, 1, 1, 2, 0, 1}));
  EXPECT_EQ(items[8].box, (Box{1, 2, 0, 1, 0, 1}));
}

TEST(Partition, EveryConfigCoversExactly) {
  const ModelSpec m = testmodels::tiny(4);
  for (const auto& l : m.layers) {
    for (ParallelConfig c : kAllConfigs) {
      if (c == ParallelConfig::CPU || !is_applicable(l.kind, c)) continue;
      for (std::size_t b : {1u, 3u, 8u}) {
        for (std::size_t wr : {1u, 3u}) {
          const auto items = partition_work(l, c, b, 4, {wr, 5});
          EXPECT_FALSE(coverage_check(items, output_space(l, b)).has_value())
              << to_string(l.kind) << ' ' << to_string(c) << " b=" << b;
        }
      }
    }
  }
}

TEST(Partition, NotApplicable) {
  LayerSpec flat;
  flat.kind = LayerKind::Flatten;
  flat.in_shape = Shape::image(2, 2, 2);
  flat.out_shape = Shape::vector(8);
  EXPECT_EQ(code_of([&] { partition_work(flat, ParallelConfig::X, 1, 1); }), ErrorCode::ConfigNotApplicable);
  EXPECT_EQ(code_of([&] { partition_work(conv_layer(1, 4, 1), ParallelConfig::CPU, 1, 1); }),
            ErrorCode::ConfigNotApplicable);
}

TEST(Coverage, DetectsOverlapGapAndRange) {
  const OutputSpace space{1, 2, 2};
  std::vector<WorkItem> items{{{0, 1, 0, 1, 0, 2}, 0}, {{0, 1, 1, 2, 0, 2}, 1}};
  EXPECT_FALSE(coverage_check(items, space).has_value());

  auto dup = items;
  dup.push_back({{0, 1, 1, 2, 1, 2}, 0});
  const auto o = coverage_check(dup, space);
  ASSERT_TRUE(o.has_value());
  EXPECT_EQ(o->kind, CoverageViolation::Kind::Overlap);
  EXPECT_EQ(o->index, 3u);

  auto gap = items;
  gap[1].box.c1 = 1;
  const auto g = coverage_check(gap, space);
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(g->kind, CoverageViolation::Kind::Gap);
  EXPECT_EQ(g->index, 3u);

  auto out = items;
  out.push_back({{0, 1, 0, 3, 0, 1}, 0});
  EXPECT_EQ(coverage_check(out, space)->kind, CoverageViolation::Kind::OutOfRange);
}

TEST(WorkerPool, RunsEveryWorkerAndRethrows) {
  WorkerPool pool(4);
  EXPECT_EQ(pool.size(), 4u);
  std::atomic<int> mask{0};
  pool.run([&](std::size_t w) { mask |= 1 << w; });
  EXPECT_EQ(mask.load(), 0b1111);
  EXPECT_THROW(pool.run([](std::size_t w) {
                 if (w == 2) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  int calls = 0;
  WorkerPool one(1);
  for (int i = 0; i < 100; ++i) one.run([&](std::size_t) { ++calls; });
  EXPECT_EQ(calls, 100);
}

TEST(Engine, EveryConfigMatchesReferenceOnTinyModels) {
  std::mt19937_64 rng(21);
  for (std::uint64_t seed : {1u, 2u}) {
    const PreparedModel m(testmodels::tiny(seed, 3, 8));
    for (std::size_t B : {1u, 2u, 4u, 8u}) {
      const auto ins = reference_inputs(m, oracle::random_pixels({B, 3, 8, 8}, rng));
      for (std::size_t P : {1u, 2u, 4u}) {
        for (std::size_t wr : {1u, 3u}) {
          Engine engine(EngineConfig{P, wr, 16, wr == 3});
          for (std::size_t i = 0; i < m.layers().size(); ++i) {
            for (ParallelConfig c : kAllConfigs) {
              if (!is_applicable(m.layers()[i].spec->kind, c)) continue;
              const TimedResult r = engine.execute_layer(m.layers()[i], ins[i], c);
              ASSERT_EQ(r.output, ins[i + 1]) << "layer " << i + 1 << ' ' << to_string(c) << " B=" << B << " P=" << P;
            }
          }
        }
      }
    }
  }
}

TEST(Engine, WideConvUnderXyz) {
  std::mt19937_64 rng(5);
  ModelSpec m = testmodels::Chain({1, 16, 16}, 3).conv(64).step().conv(64).pool().step().flatten().fc(10, true).build();
  const PreparedModel pm(m);
  const auto ins = reference_inputs(pm, oracle::random_pixels({8, 1, 16, 16}, rng));
  Engine engine(EngineConfig{4});
  EXPECT_EQ(engine.execute_layer(pm.layers()[2], ins[2], ParallelConfig::XYZ).output, ins[3]);
}

TEST(Engine, PlannedInferenceMatchesReference) {
  std::mt19937_64 rng(6);
  const PreparedModel m(testmodels::tiny(9));
  const IntTensor batch = oracle::random_pixels({5, 2, 8, 8}, rng);
  const InferenceResult ref = reference_infer(m, batch);
  Engine engine(EngineConfig{3});
  std::vector<ParallelConfig> plan;
  for (const auto& l : m.layers()) {
    plan.push_back(is_applicable(l.spec->kind, ParallelConfig::XZ) ? kAllConfigs[1 + rng() % 7] : ParallelConfig::CPU);
  }
  const PlannedInference r = engine.infer(m, plan, batch);
  EXPECT_EQ(r.result.logits, ref.logits);
  EXPECT_EQ(r.result.predictions, ref.predictions);
  EXPECT_EQ(r.layers.size(), plan.size());
  plan.pop_back();
  EXPECT_EQ(code_of([&] { engine.infer(m, plan, batch); }), ErrorCode::InvalidArgument);
}

TEST(Engine, TimingSplitWithInjectedClock) {
  std::int64_t now = 0;
  Engine engine(EngineConfig{2}, [&] { return now += 10; });
  const PreparedModel m(testmodels::tiny(1));
  std::mt19937_64 rng(1);
  const auto ins = reference_inputs(m, oracle::random_pixels({1, 2, 8, 8}, rng));

  const TimedResult cpu = engine.execute_layer(m.layers()[1], ins[1], ParallelConfig::CPU);
  EXPECT_EQ(cpu.overhead_ns, 0);
  EXPECT_EQ(cpu.compute_ns, 10);
  const TimedResult par = engine.execute_layer(m.layers()[1], ins[1], ParallelConfig::Z);
  EXPECT_EQ(par.overhead_ns, 20);
  EXPECT_EQ(par.compute_ns, 10);
}

TEST(Engine, RealClockOverheadOnEveryParallelCall) {
  const PreparedModel m(testmodels::tiny(1));
  std::mt19937_64 rng(1);
  const auto ins = reference_inputs(m, oracle::random_pixels({2, 2, 8, 8}, rng));
  Engine engine(EngineConfig{2});
  for (std::size_t i = 0; i < m.layers().size(); ++i) {
    for (ParallelConfig c : kAllConfigs) {
      if (c == ParallelConfig::CPU || !is_applicable(m.layers()[i].spec->kind, c)) continue;
      const TimedResult r = engine.execute_layer(m.layers()[i], ins[i], c);
      EXPECT_GT(r.overhead_ns, 0);
      EXPECT_GE(r.compute_ns, 0);
    }
  }
}

TEST(Engine, Errors) {
  const PreparedModel m(testmodels::tiny(1));
  std::mt19937_64 rng(1);
  const auto ins = reference_inputs(m, oracle::random_pixels({1, 2, 8, 8}, rng));
  Engine engine(EngineConfig{1});
  EXPECT_EQ(code_of([&] { engine.execute_layer(m.layers()[5], ins[5], ParallelConfig::X); }),
            ErrorCode::ConfigNotApplicable);
  EXPECT_EQ(code_of([&] { engine.execute_layer(m.layers()[2], ins[0], ParallelConfig::X); }),
            ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([] { Engine(EngineConfig{1, 0}); }), ErrorCode::InvalidArgument);
}
