#include <benchmark/benchmark.h>

#include "vocemo/hmm.hpp"
#include "vocemo/rng.hpp"

namespace {

vocemo::Matrix random_obs(std::size_t t, std::size_t d, std::uint64_t seed) {
    vocemo::rng::Engine g(seed);
    vocemo::Matrix m(t, d);
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < d; ++j) m(i, j) = vocemo::rng::normal(g);
    }
    return m;
}

std::vector<vocemo::Matrix> random_set(std::size_t n, std::size_t t, std::size_t d) {
    std::vector<vocemo::Matrix> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(random_obs(t, d, 100 + i));
    return v;
}

void BM_LogForward(benchmark::State& state) {
    auto seqs = random_set(1, 100, 29);
    vocemo::Hmm h = vocemo::flat_start(seqs, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(vocemo::log_forward(h, seqs[0]));
    }
}
BENCHMARK(BM_LogForward);

void BM_Viterbi(benchmark::State& state) {
    auto seqs = random_set(1, 100, 29);
    vocemo::Hmm h = vocemo::flat_start(seqs, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(vocemo::viterbi(h, seqs[0]));
    }
}
BENCHMARK(BM_Viterbi);

void BM_BaumWelch(benchmark::State& state) {
    auto seqs = random_set(20, 100, 29);
    vocemo::Hmm h = vocemo::flat_start(seqs, 3);
    vocemo::TrainOptions opts;
    opts.max_iters = static_cast<int>(state.range(0));
    opts.rel_tol = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(vocemo::baum_welch(h, seqs, opts));
    }
}
BENCHMARK(BM_BaumWelch)->Arg(1)->Arg(5);

}  // namespace
