#include <benchmark/benchmark.h>

#include "vocemo/features.hpp"
#include "vocemo/generator.hpp"

namespace {

vocemo::Utterance probe_utterance() {
    vocemo::SubjectProfile p = vocemo::make_subject("s01", 7, 11);
    return vocemo::render_utterance(p, vocemo::EmotionAnchor::neutral, 1.0, 12345);
}

void BM_ExtractFeatures(benchmark::State& state) {
    vocemo::Utterance u = probe_utterance();
    vocemo::FrameConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(vocemo::extract_features(u, cfg));
    }
}
BENCHMARK(BM_ExtractFeatures);

void BM_PowerSpectrum(benchmark::State& state) {
    vocemo::Utterance u = probe_utterance();
    std::vector<double> frame(u.samples.begin(), u.samples.begin() + 400);
    for (auto _ : state) {
        benchmark::DoNotOptimize(vocemo::power_spectrum(frame, 512));
    }
}
BENCHMARK(BM_PowerSpectrum);

void BM_PitchFrame(benchmark::State& state) {
    vocemo::Utterance u = probe_utterance();
    std::vector<double> frame(u.samples.begin() + 1600, u.samples.begin() + 2000);
    vocemo::FrameConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(vocemo::pitch_f0(frame, cfg, u.sample_rate));
    }
}
BENCHMARK(BM_PitchFrame);

void BM_RenderUtterance(benchmark::State& state) {
    vocemo::SubjectProfile p = vocemo::make_subject("s01", 7, 11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            vocemo::render_utterance(p, vocemo::EmotionAnchor::happiness, 1.0, 99));
    }
}
BENCHMARK(BM_RenderUtterance);

}  // namespace
