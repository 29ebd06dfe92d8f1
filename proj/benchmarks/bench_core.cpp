#include <benchmark/benchmark.h>

#include <memory>

#include "sketcher/canvas.hpp"
#include "sketcher/dsl.hpp"
#include "sketcher/mcts.hpp"
#include "sketcher/raster.hpp"

namespace {

const char* kBlock =
    "create_point p1 0.2 0.2 red\n"
    "create_line l1 0.2 0.2 0.8 0.8 blue\n"
    "create_circle c1 0.5 0.5 0.1 green\n"
    "create_arrow a1 0.3 0.3 0.7 0.7 purple\n"
    "translate l1 0.1 0.1\n"
    "rotate l1 45 0.5 0.5\n";

void BM_ParseScript(benchmark::State& state) {
  for (auto _ : state) {
    auto result = sketcher::parse_script(kBlock);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_ParseScript);

void BM_Canonicalize(benchmark::State& state) {
  auto script = *sketcher::parse_script(kBlock).script;
  for (auto _ : state) {
    auto text = sketcher::canonicalize(script);
    benchmark::DoNotOptimize(text);
  }
}
BENCHMARK(BM_Canonicalize);

void BM_Rasterize800x600(benchmark::State& state) {
  auto base = std::make_shared<sketcher::Image>(800, 600);
  sketcher::Canvas canvas(base);
  auto script = *sketcher::parse_script(kBlock).script;
  canvas = *sketcher::apply(canvas, script).canvas;
  for (auto _ : state) {
    auto image = sketcher::rasterize(canvas);
    benchmark::DoNotOptimize(image);
  }
}
BENCHMARK(BM_Rasterize800x600);

void BM_EntitySignature(benchmark::State& state) {
  auto base = std::make_shared<sketcher::Image>(800, 600);
  sketcher::Canvas canvas(base);
  auto script = *sketcher::parse_script(kBlock).script;
  canvas = *sketcher::apply(canvas, script).canvas;
  for (auto _ : state) {
    auto sig = sketcher::entity_signature(canvas);
    benchmark::DoNotOptimize(sig);
  }
}
BENCHMARK(BM_EntitySignature);

void BM_UcbSelect(benchmark::State& state) {
  sketcher::SearchConfig config;
  sketcher::SearchTree tree("q", "g", nullptr, {sketcher::Message::text(sketcher::Role::User, "q")});
  // A deep chain with fan-out keeps selection honest.
  sketcher::SearchNode* cur = &tree.root();
  for (int depth = 0; depth < 6; ++depth) {
    sketcher::SearchNode* next = nullptr;
    for (int c = 0; c < 3; ++c) {
      auto& child = tree.add_child(*cur);
      child.q = c;
      child.visits = c + 1;
      if (!next) next = &child;
    }
    cur->full = true;
    cur = next;
  }
  for (auto _ : state) {
    auto& node = sketcher::select(tree.root(), config);
    benchmark::DoNotOptimize(&node);
  }
}
BENCHMARK(BM_UcbSelect);

}  // namespace

BENCHMARK_MAIN();
