#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace vocemo {

/// The five ordered emotion anchors, at fixed integer coordinates on the
/// valence axis: nervousness -2, tenseness -1, neutral 0, contentment +1,
/// happiness +2.
enum class EmotionAnchor { nervousness = 0, tenseness, neutral, contentment, happiness };

inline constexpr int kNumAnchors = 5;
inline constexpr double kValenceMin = -2.0;
inline constexpr double kValenceMax = 2.0;

std::array<EmotionAnchor, kNumAnchors> all_anchors();
double anchor_coordinate(EmotionAnchor a);
std::string_view anchor_name(EmotionAnchor a);
EmotionAnchor anchor_from_name(std::string_view name);  // throws ConfigError

enum class ValenceGroup { negative = 0, neutral, positive };
ValenceGroup group_of(EmotionAnchor a);
std::string_view group_name(ValenceGroup g);

/// Triangular fuzzy number on the valence axis: feet a and c, peak b,
/// with -2 <= a <= b <= c <= 2 enforced at construction.
class FuzzyEmotionState {
public:
    FuzzyEmotionState(double a, double b, double c);
    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    bool operator==(const FuzzyEmotionState&) const = default;

private:
    double a_, b_, c_;
};

/// Degree of membership of valence x: 0 outside [a,c], 1 at b, linear on
/// the flanks. Degenerate flanks act as vertical edges.
double membership(const FuzzyEmotionState& s, double x);

/// Defuzzified value, (a+b+c)/3.
double centroid(const FuzzyEmotionState& s);

/// The anchor nearest to the centroid; exact distance ties resolve toward
/// neutral first, then toward the lower coordinate.
EmotionAnchor crisp_label(const FuzzyEmotionState& s);

ValenceGroup valence_group_of(const FuzzyEmotionState& s);

inline constexpr double kMinSpread = 0.25;

/// Maps a 5-way posterior (anchor order) to a triangular number: peak at the
/// posterior mean of the coordinates, feet at +-max(kMinSpread, 2 std),
/// clamped to the axis. Throws NotNormalized unless the entries are
/// non-negative and sum to 1 within 1e-9.
FuzzyEmotionState from_posterior(std::span<const double> p);

/// Area Jaccard of the two membership functions, trapezoidal integration at
/// step 1e-3 over [-2,2]. Two identical point numbers compare as 1.
double similarity(const FuzzyEmotionState& s1, const FuzzyEmotionState& s2);

/// One utterance's stored expert labels, kept unmerged.
using LabelSet = std::vector<FuzzyEmotionState>;

inline constexpr double kDefaultTheta = 0.4;

/// True when some stored label is at least theta-similar to the prediction.
/// Throws EmptyLabelSet for an empty set.
bool label_match(const FuzzyEmotionState& pred, const LabelSet& labels,
                 double theta = kDefaultTheta);

}  // namespace vocemo
