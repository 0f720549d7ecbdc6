#pragma once

#include <span>
#include <vector>

#include "vocemo/audio_io.hpp"
#include "vocemo/matrix.hpp"

namespace vocemo {

/// Front-end configuration. Defaults give 25 ms frames with a 10 ms hop,
/// a 26-band mel filterbank and 13 cepstral coefficients at 16 kHz. The
/// pitch range is set for child voices.
struct FrameConfig {
    int frame_len = 400;   // samples (25 ms)
    int hop = 160;         // samples (10 ms)
    double preemph = 0.97;
    int n_fft = 512;       // power of two, >= frame_len
    int n_mels = 26;
    int n_mfcc = 13;
    double fmin = 0.0;     // Hz, filterbank low edge
    double fmax = 8000.0;  // Hz, filterbank high edge
    double pitch_fmin = 100.0;
    double pitch_fmax = 600.0;
    double voicing_threshold = 0.3;

    /// Throws ConfigError when a field combination is unusable.
    void validate(int sample_rate) const;

    bool operator==(const FrameConfig&) const = default;
};

// Feature layout: [13 mfcc | 13 delta-mfcc | log-energy | f0 semitones | voiced]
inline constexpr int kFeatureDim = 29;
inline constexpr int kColMfcc = 0;
inline constexpr int kColDelta = 13;
inline constexpr int kColLogEnergy = 26;
inline constexpr int kColF0 = 27;
inline constexpr int kColVoiced = 28;
// Per-utterance mean/variance normalization covers the cepstra and the
// log-energy; the f0 column stays raw so that unvoiced frames keep an
// exact zero, and the voicing flag stays binary.
inline constexpr int kCmvnCols = 27;

struct FeatureMatrix {
    Matrix mat;  // frames x kFeatureDim
    FrameConfig config;
    std::size_t frame_count() const { return mat.rows(); }
};

/// y[0] = x[0]; y[n] = x[n] - alpha * x[n-1].
std::vector<double> pre_emphasis(std::span<const double> signal, double alpha);

/// Slices the signal into hop-spaced frames of frame_len samples and applies
/// a Hamming window. Frame k covers [k*hop, k*hop + frame_len); the count is
/// floor((len - frame_len)/hop) + 1. Throws TooShort for signals shorter
/// than one frame.
Matrix frame_and_window(std::span<const double> signal, const FrameConfig& cfg);

/// |DFT|^2 / n_fft over bins 0..n_fft/2. The frame is zero-padded to n_fft,
/// which must be a power of two.
std::vector<double> power_spectrum(std::span<const double> frame, int n_fft);

/// mel(f) = 2595 log10(1 + f/700) and its inverse.
double mel_scale(double hz);
double mel_inverse(double mel);

/// Triangular filter weights, n_mels x (n_fft/2 + 1). Centers are uniform on
/// the mel axis between mel(fmin) and mel(fmax); triangles are unnormalized,
/// so adjacent filters sum to one between the first and last center.
Matrix make_mel_filters(const FrameConfig& cfg, int sample_rate);

/// ln(max(filter . power, 1e-10)) per filter.
std::vector<double> mel_filterbank(std::span<const double> power, const Matrix& filters);
std::vector<double> mel_filterbank(std::span<const double> power, const FrameConfig& cfg,
                                   int sample_rate);

/// Orthonormal DCT-II of the log-mel vector, first n_mfcc coefficients.
std::vector<double> mfcc_frame(std::span<const double> log_mels, int n_mfcc);

/// Regression deltas with +-window context and replicated edges.
Matrix deltas(const Matrix& m, int window = 2);

struct PitchResult {
    double f0_hz = 0.0;  // 0 when unvoiced
    bool voiced = false;
};

/// Normalized autocorrelation peak over the configured lag range, with
/// parabolic refinement. Expects an unwindowed frame.
PitchResult pitch_f0(std::span<const double> frame, const FrameConfig& cfg, int sample_rate);

/// ln(max(sum x^2, 1e-10)).
double log_energy(std::span<const double> frame);

/// Full front end: per frame 13 MFCC (pre-emphasized, windowed path),
/// 13 deltas, log-energy, f0 in semitones re 440 Hz (0 when unvoiced) and a
/// voicing flag, then per-utterance CMVN over the first kCmvnCols columns.
/// Pitch and energy are measured on the raw rectangular frames.
FeatureMatrix extract_features(const Utterance& u, const FrameConfig& cfg = {});

}  // namespace vocemo
