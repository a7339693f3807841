#include <benchmark/benchmark.h>

#include <vector>

#include "netsumm/eval.hpp"
#include "netsumm/layout.hpp"
#include "netsumm/netgraph.hpp"
#include "netsumm/qlearn.hpp"

using namespace netsumm;

namespace {

Corpus make_corpus(std::size_t docs) {
  SyntheticParams p;
  p.n_relevant = docs / 4;
  p.n_irrelevant = docs - p.n_relevant;
  Rng rng(1);
  return generate_synthetic_corpus(p, rng).corpus;
}

void BM_tfidf_graph(benchmark::State& state) {
  const auto corpus = make_corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto g = build_document_graph(corpus);
    benchmark::DoNotOptimize(g);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_tfidf_graph)->Arg(40)->Arg(160)->Arg(640);

void BM_f_prob(benchmark::State& state) {
  const auto g = build_document_graph(make_corpus(static_cast<std::size_t>(state.range(0))));
  Rng rng(2);
  const auto a = random_assignment(g.size(), 4, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(f_prob(g, a));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_f_prob)->Arg(40)->Arg(160)->Arg(640);

void BM_q_forward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const QModel model(n, 4, Hyperparameters{}, 3);
  Rng rng(3);
  const auto s = encode_state(random_assignment(n, 4, rng));
  for (auto _ : state) {
    auto q = q_forward(model, s);
    benchmark::DoNotOptimize(q);
  }
}
BENCHMARK(BM_q_forward)->Arg(40)->Arg(160);

void BM_td_update(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  QModel model(n, 4, Hyperparameters{}, 4);
  MomentumSgd optimizer(model);
  Rng rng(4);
  std::vector<Transition> batch;
  for (int i = 0; i < 16; ++i) {
    auto s = random_assignment(n, 4, rng);
    const auto node = rng.uniform_index(n);
    const Action valid{node, (s.labels[node] + 1) % 4};
    auto next = transition(s, valid);
    batch.push_back({s, valid, -1.0, next, false});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(td_update(model, optimizer, batch));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_td_update)->Arg(40)->Arg(160);

void BM_force_layout(benchmark::State& state) {
  const auto g = build_document_graph(make_corpus(static_cast<std::size_t>(state.range(0))));
  ForceConfig cfg;
  cfg.seed = 5;
  for (auto _ : state) {
    auto p = force_layout(g, cfg);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_force_layout)->Arg(40)->Arg(160);

}  // namespace

BENCHMARK_MAIN();
