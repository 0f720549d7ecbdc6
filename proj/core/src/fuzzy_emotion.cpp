#include "vocemo/fuzzy_emotion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vocemo/errors.hpp"

namespace vocemo {

namespace {

constexpr std::array<std::string_view, kNumAnchors> kAnchorNames = {
    "nervousness", "tenseness", "neutral", "contentment", "happiness"};

constexpr double kSimilarityStep = 1e-3;

}  // namespace

std::array<EmotionAnchor, kNumAnchors> all_anchors() {
    return {EmotionAnchor::nervousness, EmotionAnchor::tenseness, EmotionAnchor::neutral,
            EmotionAnchor::contentment, EmotionAnchor::happiness};
}

double anchor_coordinate(EmotionAnchor a) { return static_cast<double>(static_cast<int>(a)) - 2.0; }

std::string_view anchor_name(EmotionAnchor a) { return kAnchorNames[static_cast<std::size_t>(a)]; }

EmotionAnchor anchor_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kAnchorNames.size(); ++i)
        if (kAnchorNames[i] == name) return static_cast<EmotionAnchor>(i);
    throw ConfigError("unknown emotion anchor '" + std::string(name) + "'");
}

ValenceGroup group_of(EmotionAnchor a) {
    const double c = anchor_coordinate(a);
    if (c < 0.0) return ValenceGroup::negative;
    if (c > 0.0) return ValenceGroup::positive;
    return ValenceGroup::neutral;
}

std::string_view group_name(ValenceGroup g) {
    switch (g) {
        case ValenceGroup::negative: return "negative";
        case ValenceGroup::neutral: return "neutral";
        default: return "positive";
    }
}

FuzzyEmotionState::FuzzyEmotionState(double a, double b, double c) : a_(a), b_(b), c_(c) {
    if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(c)))
        throw ConfigError("fuzzy number with non-finite corner");
    if (!(a <= b && b <= c))
        throw ConfigError("fuzzy number needs a <= b <= c");
    if (a < kValenceMin || c > kValenceMax)
        throw ConfigError("fuzzy number outside the valence axis [-2,2]");
}

double membership(const FuzzyEmotionState& s, double x) {
    if (x < s.a() || x > s.c()) return 0.0;
    if (x == s.b()) return 1.0;
    if (x < s.b()) {
        if (s.b() == s.a()) return 1.0;  // vertical left edge
        return (x - s.a()) / (s.b() - s.a());
    }
    if (s.c() == s.b()) return 1.0;  // vertical right edge
    return (s.c() - x) / (s.c() - s.b());
}

double centroid(const FuzzyEmotionState& s) { return (s.a() + s.b() + s.c()) / 3.0; }

EmotionAnchor crisp_label(const FuzzyEmotionState& s) {
    const double x = centroid(s);
    EmotionAnchor best = EmotionAnchor::neutral;
    double best_dist = std::abs(x - anchor_coordinate(best));
    for (EmotionAnchor a : all_anchors()) {
        if (a == EmotionAnchor::neutral) continue;
        const double d = std::abs(x - anchor_coordinate(a));
        // strict improvement only: neutral was seeded first, and the scan
        // order is ascending coordinate, so ties keep the earlier winner
        if (d < best_dist) {
            best = a;
            best_dist = d;
        }
    }
    return best;
}

ValenceGroup valence_group_of(const FuzzyEmotionState& s) { return group_of(crisp_label(s)); }

FuzzyEmotionState from_posterior(std::span<const double> p) {
    if (p.size() != static_cast<std::size_t>(kNumAnchors))
        throw NotNormalized("posterior must have 5 entries");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw NotNormalized("posterior entries must be non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw NotNormalized("posterior must sum to 1");

    double mean = 0.0;
    for (int i = 0; i < kNumAnchors; ++i)
        mean += p[static_cast<std::size_t>(i)] * anchor_coordinate(static_cast<EmotionAnchor>(i));
    double var = 0.0;
    for (int i = 0; i < kNumAnchors; ++i) {
        const double d = anchor_coordinate(static_cast<EmotionAnchor>(i)) - mean;
        var += p[static_cast<std::size_t>(i)] * d * d;
    }
    const double spread = std::max(kMinSpread, 2.0 * std::sqrt(var));
    return {std::clamp(mean - spread, kValenceMin, kValenceMax), mean,
            std::clamp(mean + spread, kValenceMin, kValenceMax)};
}

double similarity(const FuzzyEmotionState& s1, const FuzzyEmotionState& s2) {
    const auto steps = static_cast<std::size_t>(
        std::llround((kValenceMax - kValenceMin) / kSimilarityStep));
    double int_min = 0.0;
    double int_max = 0.0;
    double prev_min = std::min(membership(s1, kValenceMin), membership(s2, kValenceMin));
    double prev_max = std::max(membership(s1, kValenceMin), membership(s2, kValenceMin));
    for (std::size_t i = 1; i <= steps; ++i) {
        const double x = kValenceMin + kSimilarityStep * static_cast<double>(i);
        const double m1 = membership(s1, x);
        const double m2 = membership(s2, x);
        const double cur_min = std::min(m1, m2);
        const double cur_max = std::max(m1, m2);
        int_min += 0.5 * (prev_min + cur_min) * kSimilarityStep;
        int_max += 0.5 * (prev_max + cur_max) * kSimilarityStep;
        prev_min = cur_min;
        prev_max = cur_max;
    }
    if (int_max <= 0.0) {
        // both degenerate points: identical ones count as a full match
        return s1.b() == s2.b() ? 1.0 : 0.0;
    }
    return int_min / int_max;
}

bool label_match(const FuzzyEmotionState& pred, const LabelSet& labels, double theta) {
    if (labels.empty()) throw EmptyLabelSet("label set is empty");
    double best = 0.0;
    for (const auto& label : labels) best = std::max(best, similarity(pred, label));
    return best >= theta;
}

}  // namespace vocemo
