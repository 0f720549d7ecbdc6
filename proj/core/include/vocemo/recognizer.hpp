#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vocemo/corpus.hpp"
#include "vocemo/features.hpp"
#include "vocemo/fuzzy_emotion.hpp"
#include "vocemo/hmm.hpp"

namespace vocemo {

inline constexpr int kBankFormatVersion = 1;

struct TrainConfig {
    int n_states = 3;
    TrainOptions em{};
    int min_per_class = 5;
    FrameConfig frame{};
    std::uint64_t seed = 0;  // provenance only; training itself is deterministic
};

struct TrainMetadata {
    std::uint64_t corpus_hash = 0;
    std::uint64_t seed = 0;
    std::array<int, kNumAnchors> iterations{};  // EM iterations per anchor
    std::array<std::size_t, kNumAnchors> train_counts{};
    std::size_t n_excluded = 0;  // ambiguous records left out of training
};

struct ModelBank {
    std::array<Hmm, kNumAnchors> models;  // indexed by EmotionAnchor
    FrameConfig frame;
    std::array<double, kNumAnchors> log_priors{};  // empirical training proportions
    TrainMetadata meta;

    /// All five models present with a shared dimension, priors summing to 1.
    void validate() const;  // throws MalformedModel / Degenerate
};

/// FNV-1a over the serialized manifest records; provenance only.
std::uint64_t corpus_hash(const Corpus& c);

/// One left-to-right HMM per anchor, trained on that anchor's unambiguous
/// records (all stored labels sharing one crisp anchor). Ambiguous records
/// are excluded and counted in the metadata. Throws InsufficientData naming
/// the anchor that falls under cfg.min_per_class.
ModelBank train_bank(const Corpus& c, const TrainConfig& cfg = {});

enum class PriorMode { uniform, empirical };

/// softmax over per-anchor avg_loglik, plus log-priors in empirical mode.
std::array<double, kNumAnchors> classify_posterior(const ModelBank& bank, const Utterance& u,
                                                   PriorMode prior = PriorMode::uniform);

/// from_posterior over classify_posterior.
FuzzyEmotionState recognize(const ModelBank& bank, const Utterance& u,
                            PriorMode prior = PriorMode::uniform);

struct EvalReport {
    // confusion[true][predicted], true class = crisp anchor of the first label
    std::array<std::array<std::size_t, kNumAnchors>, kNumAnchors> confusion{};
    double accuracy_5 = 0.0;
    double accuracy_valence = 0.0;
    double accuracy_within_one = 0.0;  // |pred coord - true coord| <= 1
    double fuzzy_match_rate = 0.0;     // label_match over full LabelSets
    std::array<std::size_t, kNumAnchors> per_class_counts{};
    std::string split;                  // descriptor, filled by the caller
    double theta = kDefaultTheta;
    std::vector<std::uint64_t> seeds;  // provenance, filled by the caller
};

EvalReport evaluate(const ModelBank& bank, const Corpus& test, double theta = kDefaultTheta,
                    PriorMode prior = PriorMode::uniform);

/// Canonical JSON rendering (stable key order, deterministic bytes).
std::string eval_report_json(const EvalReport& r);

/// Long-format confusion dump: true,predicted,count.
std::string confusion_csv(const EvalReport& r);

/// Single versioned JSON document; probabilities are stored in the linear
/// domain so structural zeros survive the round trip.
void save_bank(const ModelBank& bank, const std::filesystem::path& path);
ModelBank load_bank(const std::filesystem::path& path);  // VersionMismatch / MalformedModel

}  // namespace vocemo
