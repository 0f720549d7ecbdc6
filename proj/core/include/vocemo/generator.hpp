#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "vocemo/audio_io.hpp"
#include "vocemo/corpus.hpp"
#include "vocemo/fuzzy_emotion.hpp"

namespace vocemo {

/// Per-subject voice parameters for the synthesizer.
struct SubjectProfile {
    std::string subject_id;
    int age = 7;                // 5..9
    double base_f0_hz = 300.0;  // stays inside [250, 400]
    double base_tempo_sps = 3.0;  // syllable bursts per second
    double base_energy_db = 0.0;  // relative level offset
};

/// Deterministic profile draw; base F0 falls with age.
SubjectProfile make_subject(const std::string& id, int age, std::uint64_t seed);

/// How one emotion anchor bends the synthesis parameters.
struct EmotionAcoustics {
    double f0_mean_mult = 1.0;
    double f0_range_mult = 1.0;
    double energy_db = 0.0;
    double tempo_mult = 1.0;
    double f0_jitter = 0.01;   // per-period relative F0 perturbation
    double shimmer = 0.04;     // per-period relative amplitude perturbation
    double breathiness = 0.05;  // aspiration noise mixed into the source
};

using AcousticsTable = std::array<EmotionAcoustics, kNumAnchors>;

/// Moderate separation: classes overlap acoustically, as natural speech does.
AcousticsTable default_acoustics();
/// Extreme separation for pipeline sanity runs: classes barely overlap.
AcousticsTable boosted_acoustics();
/// Preset lookup by name {"default", "boosted"}. Throws ConfigError.
AcousticsTable acoustics_by_name(const std::string& preset);

/// Source-filter synthesis of one utterance: sawtooth source on an F0
/// contour, two fixed formant resonators, syllable-burst envelope, and
/// additive noise at 20 dB SNR. duration_s must lie in [0.5, 2.0].
Utterance render_utterance(const SubjectProfile& profile, EmotionAnchor anchor,
                           double duration_s, std::uint64_t seed,
                           const AcousticsTable& table = default_acoustics());

/// k expert labels for a true anchor: each is a triangular number whose
/// centroid sits within 0.3 of the anchor coordinate (or, with probability
/// p_disagree, of an adjacent anchor's coordinate). Nothing is merged.
LabelSet simulate_annotators(EmotionAnchor anchor, int k_experts, double p_disagree,
                             std::uint64_t seed);

struct GeneratorConfig {
    std::size_t n_utterances = 100;
    int n_subjects = 10;
    int k_experts = 3;
    double p_disagree = 0.15;
    std::uint64_t seed = 0;
    std::array<double, 3> step_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};
    DistributionTargets targets = DistributionTargets::defaults();
    std::string acoustics = "default";
    double duration_min_s = 0.7;
    double duration_max_s = 1.3;

    void validate() const;  // throws ConfigError
};

/// Pretty-printed JSON mirror of the config, trailing newline included.
std::string generator_config_to_json(const GeneratorConfig& cfg);
/// Parses the JSON mirror; missing keys keep their defaults. Throws ConfigError.
GeneratorConfig generator_config_from_json(const std::string& json_text);

/// Renders a full corpus under out_dir (wav/, manifest.jsonl,
/// generator_config.json) and returns it. Deterministic given cfg.seed.
Corpus synth_corpus(const GeneratorConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace vocemo
