#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vocemo/fuzzy_emotion.hpp"

namespace vocemo {

/// Therapy stage an utterance was captured in.
enum class TherapeuticStep { evaluation_exercises = 0, phonematic_hearing, pronunciation_3d };

inline constexpr int kNumSteps = 3;

std::array<TherapeuticStep, kNumSteps> all_steps();
std::string_view step_name(TherapeuticStep s);
TherapeuticStep step_from_name(std::string_view name);  // throws ConfigError

struct UtteranceRecord {
    std::string id;
    std::string subject_id;
    int subject_age = 0;  // 5..9
    TherapeuticStep step = TherapeuticStep::evaluation_exercises;
    std::string audio_path;  // relative to the corpus root
    double duration_s = 0.0;
    LabelSet labels;  // non-empty, stored unmerged

    bool operator==(const UtteranceRecord&) const = default;
};

struct Corpus {
    std::filesystem::path root;  // directory the audio paths are relative to
    std::vector<UtteranceRecord> records;
};

/// Writes one JSON object per record (JSONL). Throws IoFailure.
void save_manifest(const Corpus& c, const std::filesystem::path& path);

/// Reads a JSONL manifest; the corpus root is the manifest's directory.
/// Malformed lines raise MalformedManifest naming the line number; with
/// verify_audio set, a missing WAV raises MissingAudio.
Corpus load_manifest(const std::filesystem::path& path, bool verify_audio = true);

struct ValenceProportions {
    double negative = 0.0;
    double neutral = 0.0;
    double positive = 0.0;
};

struct CorpusStats {
    ValenceProportions overall;
    std::map<TherapeuticStep, ValenceProportions> per_step;
    std::map<TherapeuticStep, std::size_t> step_counts;
    std::size_t total = 0;
};

/// Valence-group proportions per step and overall. Each record is counted
/// under its FIRST stored label's crisp group, which keeps the figures
/// deterministic under multi-expert labels. Throws EmptyCorpus.
CorpusStats corpus_stats(const Corpus& c);

enum class SplitMode { speaker_dependent, speaker_independent };

struct SplitResult {
    Corpus train;
    Corpus test;
};

/// Deterministic train/test partition. speaker_dependent stratifies the
/// record split by step; speaker_independent holds out whole subjects
/// (round(test_fraction * n_subjects), at least one). test_fraction must
/// lie strictly inside (0,1).
SplitResult split_corpus(const Corpus& c, SplitMode mode, double test_fraction,
                         std::uint64_t seed);

/// Target (negative, neutral, positive) proportions, overall and per step.
/// Rows are renormalized to sum to exactly 1.
struct DistributionTargets {
    std::array<double, 3> overall{};
    std::map<TherapeuticStep, std::array<double, 3>> per_step;

    static DistributionTargets defaults();
    void normalize();  // throws ConfigError on non-positive rows
};

}  // namespace vocemo
