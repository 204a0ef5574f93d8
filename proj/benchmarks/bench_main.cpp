#include <benchmark/benchmark.h>

#include "cce/backends/mock_backends.hpp"
#include "cce/formula/knowledge_base.hpp"
#include "cce/keyframe/schedule.hpp"
#include "cce/pipeline/pipeline.hpp"
#include "test_support.hpp"

using namespace cce;

namespace {

void BM_FormulaEvaluate(benchmark::State& state) {
  const auto kb = formula::KnowledgeBase::load(cce_test::data_dir() / "kb.json");
  const auto cases = cce_test::formula_oracle_cases();
  for (auto _ : state)
    for (const auto& c : cases) benchmark::DoNotOptimize(kb.find(c.formula_id)->evaluate(c.bindings).value);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cases.size()));
}
BENCHMARK(BM_FormulaEvaluate);

void BM_DetectBoundaries(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<event::ParameterTrajectory> ts;
  for (int i = 0; i < 64; ++i) ts.push_back(cce_test::random_trajectory(rng));
  for (auto _ : state)
    for (const auto& t : ts) benchmark::DoNotOptimize(event::detect_boundaries(t, 0.2, 2));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(ts.size()));
}
BENCHMARK(BM_DetectBoundaries);

void BM_SceneChain(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto chain = cce_test::random_scene_chain(rng);
  for (auto _ : state) {
    scene::SceneGraph g = chain.graph;
    for (std::size_t t = 1; t < chain.conditions.size(); ++t)
      g = scene::apply_delta(
          g, scene::derive_delta(g, chain.conditions[t], chain.rules, nullptr, {"", &chain.conditions[t - 1]}));
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_SceneChain);

void BM_BuildSchedule(benchmark::State& state) {
  backends::MockImageEditor editor;
  backends::MockLatentEncoder encoder(static_cast<std::size_t>(state.range(0)));
  backends::ImageStore store;
  keyframe::EditOperator op;
  op.magnitude = 0.5;
  op.bounds = {0.0, 1.0};
  const auto frames = keyframe::synthesize_keyframes(4, {op, op, op}, "a box", editor, store, {320, 180, 1});
  keyframe::ScheduleOptions opts;
  opts.sigma = 0.5;
  for (auto _ : state)
    benchmark::DoNotOptimize(keyframe::build_schedule(frames, {{1.0}, {2.0}, {3.0}}, encoder, store, opts));
}
BENCHMARK(BM_BuildSchedule)->Arg(48)->Arg(768)->Arg(4800);

void BM_PipelineRun(benchmark::State& state) {
  const auto res = pipeline::Resources::load(cce_test::data_dir());
  pipeline::RunConfig c;
  c.input_description = "A glass ball is dropped into a tank of water and sinks to the bottom.";
  c.seed = 7;
  c.data_dir = cce_test::data_dir();
  c.width = static_cast<int>(state.range(0));
  c.height = static_cast<int>(state.range(0) * 9 / 16);
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::run_config(c, res));
}
BENCHMARK(BM_PipelineRun)->Arg(320)->Arg(1360)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
