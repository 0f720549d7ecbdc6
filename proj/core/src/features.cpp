#include "vocemo/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "vocemo/errors.hpp"

namespace vocemo {

namespace {

constexpr double kLogFloor = 1e-10;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 complex FFT, in place. n is a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace

void FrameConfig::validate(int sample_rate) const {
    if (frame_len <= 0 || hop <= 0 || hop > frame_len)
        throw ConfigError("need 0 < hop <= frame_len");
    if (frame_len > n_fft) throw ConfigError("frame_len must not exceed n_fft");
    if (!is_power_of_two(n_fft)) throw ConfigError("n_fft must be a power of two");
    if (preemph < 0.0 || preemph >= 1.0) throw ConfigError("preemph must be in [0,1)");
    if (n_mels <= 1 || n_mfcc <= 0 || n_mfcc > n_mels)
        throw ConfigError("need 1 < n_mels and 0 < n_mfcc <= n_mels");
    if (!(fmin < fmax) || fmax > sample_rate / 2.0)
        throw ConfigError("need fmin < fmax <= sample_rate/2");
    if (!(pitch_fmin < pitch_fmax) || pitch_fmin <= 0.0)
        throw ConfigError("need 0 < pitch_fmin < pitch_fmax");
}

std::vector<double> pre_emphasis(std::span<const double> signal, double alpha) {
    std::vector<double> out(signal.size());
    if (signal.empty()) return out;
    out[0] = signal[0];
    for (std::size_t n = 1; n < signal.size(); ++n)
        out[n] = signal[n] - alpha * signal[n - 1];
    return out;
}

Matrix frame_and_window(std::span<const double> signal, const FrameConfig& cfg) {
    const std::size_t flen = static_cast<std::size_t>(cfg.frame_len);
    if (signal.size() < flen)
        throw TooShort("signal of " + std::to_string(signal.size()) +
                       " samples is shorter than one frame (" + std::to_string(cfg.frame_len) + ")");
    const std::size_t count = (signal.size() - flen) / static_cast<std::size_t>(cfg.hop) + 1;

    std::vector<double> window(flen);
    for (std::size_t n = 0; n < flen; ++n)
        window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                           static_cast<double>(flen - 1));

    Matrix frames(count, flen);
    for (std::size_t k = 0; k < count; ++k) {
        const double* src = signal.data() + k * static_cast<std::size_t>(cfg.hop);
        for (std::size_t n = 0; n < flen; ++n) frames(k, n) = src[n] * window[n];
    }
    return frames;
}

std::vector<double> power_spectrum(std::span<const double> frame, int n_fft) {
    if (static_cast<int>(frame.size()) > n_fft)
        throw ConfigError("frame longer than n_fft");
    if (!is_power_of_two(n_fft)) throw ConfigError("n_fft must be a power of two");
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft), {0.0, 0.0});
    for (std::size_t n = 0; n < frame.size(); ++n) buf[n] = frame[n];
    fft_inplace(buf);
    std::vector<double> power(static_cast<std::size_t>(n_fft / 2 + 1));
    for (std::size_t k = 0; k < power.size(); ++k)
        power[k] = std::norm(buf[k]) / static_cast<double>(n_fft);
    return power;
}

double mel_scale(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_inverse(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix make_mel_filters(const FrameConfig& cfg, int sample_rate) {
    const std::size_t n_bins = static_cast<std::size_t>(cfg.n_fft / 2 + 1);
    const double mel_lo = mel_scale(cfg.fmin);
    const double mel_hi = mel_scale(cfg.fmax);
    // n_mels + 2 uniformly spaced mel points: edges and centers
    std::vector<double> mel_pts(static_cast<std::size_t>(cfg.n_mels) + 2);
    for (std::size_t i = 0; i < mel_pts.size(); ++i)
        mel_pts[i] = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                  static_cast<double>(cfg.n_mels + 1);

    Matrix filters(static_cast<std::size_t>(cfg.n_mels), n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double hz = static_cast<double>(k) * sample_rate / cfg.n_fft;
        const double mel_k = mel_scale(hz);
        for (int m = 1; m <= cfg.n_mels; ++m) {
            const double left = mel_pts[static_cast<std::size_t>(m) - 1];
            const double center = mel_pts[static_cast<std::size_t>(m)];
            const double right = mel_pts[static_cast<std::size_t>(m) + 1];
            double w = 0.0;
            if (mel_k >= left && mel_k <= center && center > left)
                w = (mel_k - left) / (center - left);
            else if (mel_k > center && mel_k <= right && right > center)
                w = (right - mel_k) / (right - center);
            filters(static_cast<std::size_t>(m) - 1, k) = w;
        }
    }
    return filters;
}

std::vector<double> mel_filterbank(std::span<const double> power, const Matrix& filters) {
    std::vector<double> out(filters.rows());
    for (std::size_t m = 0; m < filters.rows(); ++m) {
        double acc = 0.0;
        const auto w = filters.row(m);
        for (std::size_t k = 0; k < power.size() && k < w.size(); ++k) acc += w[k] * power[k];
        out[m] = std::log(std::max(acc, kLogFloor));
    }
    return out;
}

std::vector<double> mel_filterbank(std::span<const double> power, const FrameConfig& cfg,
                                   int sample_rate) {
    return mel_filterbank(power, make_mel_filters(cfg, sample_rate));
}

std::vector<double> mfcc_frame(std::span<const double> log_mels, int n_mfcc) {
    const std::size_t n = log_mels.size();
    std::vector<double> out(static_cast<std::size_t>(n_mfcc), 0.0);
    for (int k = 0; k < n_mfcc; ++k) {
        double acc = 0.0;
        for (std::size_t m = 0; m < n; ++m)
            acc += log_mels[m] * std::cos(std::numbers::pi * k * (2.0 * static_cast<double>(m) + 1.0) /
                                          (2.0 * static_cast<double>(n)));
        const double norm = (k == 0) ? std::sqrt(1.0 / static_cast<double>(n))
                                     : std::sqrt(2.0 / static_cast<double>(n));
        out[static_cast<std::size_t>(k)] = acc * norm;
    }
    return out;
}

Matrix deltas(const Matrix& m, int window) {
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(m.rows());
    Matrix out(m.rows(), m.cols());
    double denom = 0.0;
    for (int k = 1; k <= window; ++k) denom += static_cast<double>(k) * k;
    denom *= 2.0;
    for (std::ptrdiff_t t = 0; t < rows; ++t) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double acc = 0.0;
            for (int k = 1; k <= window; ++k) {
                const std::ptrdiff_t fwd = std::min<std::ptrdiff_t>(t + k, rows - 1);
                const std::ptrdiff_t bwd = std::max<std::ptrdiff_t>(t - k, 0);
                acc += k * (m(static_cast<std::size_t>(fwd), j) - m(static_cast<std::size_t>(bwd), j));
            }
            out(static_cast<std::size_t>(t), j) = acc / denom;
        }
    }
    return out;
}

PitchResult pitch_f0(std::span<const double> frame, const FrameConfig& cfg, int sample_rate) {
    const std::size_t len = frame.size();
    const int lag_min = std::max(1, static_cast<int>(std::ceil(sample_rate / cfg.pitch_fmax)));
    int lag_max = static_cast<int>(std::floor(sample_rate / cfg.pitch_fmin));
    lag_max = std::min<int>(lag_max, static_cast<int>(len) - 2);
    if (lag_max <= lag_min) return {};

    // prefix sums of x^2 make the per-lag energy terms O(1)
    std::vector<double> e(len + 1, 0.0);
    for (std::size_t n = 0; n < len; ++n) e[n + 1] = e[n] + frame[n] * frame[n];
    if (e[len] <= 0.0) return {};  // silent frame

    std::vector<double> r(static_cast<std::size_t>(lag_max) + 1, 0.0);
    int best_lag = 0;
    double best_r = -1.0;
    for (int tau = lag_min; tau <= lag_max; ++tau) {
        const std::size_t overlap = len - static_cast<std::size_t>(tau);
        double num = 0.0;
        for (std::size_t n = 0; n < overlap; ++n)
            num += frame[n] * frame[n + static_cast<std::size_t>(tau)];
        const double e0 = e[overlap];
        const double e1 = e[len] - e[static_cast<std::size_t>(tau)];
        const double denom = std::sqrt(e0 * e1);
        const double rn = denom > 0.0 ? num / denom : 0.0;
        r[static_cast<std::size_t>(tau)] = rn;
        if (rn > best_r) {
            best_r = rn;
            best_lag = tau;
        }
    }

    if (best_lag == 0 || best_r < cfg.voicing_threshold) return {};

    double lag = static_cast<double>(best_lag);
    if (best_lag > lag_min && best_lag < lag_max) {
        const double rm = r[static_cast<std::size_t>(best_lag) - 1];
        const double r0 = r[static_cast<std::size_t>(best_lag)];
        const double rp = r[static_cast<std::size_t>(best_lag) + 1];
        const double denom = rm - 2.0 * r0 + rp;
        if (std::abs(denom) > 1e-12) {
            const double delta = 0.5 * (rm - rp) / denom;
            if (std::abs(delta) <= 1.0) lag += delta;
        }
    }
    return {static_cast<double>(sample_rate) / lag, true};
}

double log_energy(std::span<const double> frame) {
    double acc = 0.0;
    for (double x : frame) acc += x * x;
    return std::log(std::max(acc, kLogFloor));
}

FeatureMatrix extract_features(const Utterance& u, const FrameConfig& cfg) {
    validate(u);
    cfg.validate(u.sample_rate);
    const std::size_t flen = static_cast<std::size_t>(cfg.frame_len);
    if (u.samples.size() < flen)
        throw TooShort("utterance " + u.id + " shorter than one frame");
    const std::size_t count = (u.samples.size() - flen) / static_cast<std::size_t>(cfg.hop) + 1;

    const std::vector<double> emphasized = pre_emphasis(u.samples, cfg.preemph);
    const Matrix windowed = frame_and_window(emphasized, cfg);
    const Matrix filters = make_mel_filters(cfg, u.sample_rate);

    Matrix cepstra(count, static_cast<std::size_t>(cfg.n_mfcc));
    for (std::size_t t = 0; t < count; ++t) {
        const auto power = power_spectrum(windowed.row(t), cfg.n_fft);
        const auto log_mels = mel_filterbank(power, filters);
        const auto c = mfcc_frame(log_mels, cfg.n_mfcc);
        std::copy(c.begin(), c.end(), cepstra.row(t).begin());
    }
    const Matrix delta = deltas(cepstra, 2);

    FeatureMatrix fm;
    fm.config = cfg;
    fm.mat = Matrix(count, kFeatureDim);
    for (std::size_t t = 0; t < count; ++t) {
        for (int j = 0; j < cfg.n_mfcc; ++j) {
            fm.mat(t, static_cast<std::size_t>(kColMfcc + j)) = cepstra(t, static_cast<std::size_t>(j));
            fm.mat(t, static_cast<std::size_t>(kColDelta + j)) = delta(t, static_cast<std::size_t>(j));
        }
        const std::span<const double> raw{u.samples.data() + t * static_cast<std::size_t>(cfg.hop),
                                          flen};
        fm.mat(t, kColLogEnergy) = log_energy(raw);
        const PitchResult p = pitch_f0(raw, cfg, u.sample_rate);
        fm.mat(t, kColF0) = p.voiced ? 12.0 * std::log2(p.f0_hz / 440.0) : 0.0;
        fm.mat(t, kColVoiced) = p.voiced ? 1.0 : 0.0;
    }

    // per-utterance CMVN over the continuous cepstral/energy columns
    for (int j = 0; j < kCmvnCols; ++j) {
        double mean = 0.0;
        for (std::size_t t = 0; t < count; ++t) mean += fm.mat(t, static_cast<std::size_t>(j));
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (std::size_t t = 0; t < count; ++t) {
            const double d = fm.mat(t, static_cast<std::size_t>(j)) - mean;
            var += d * d;
        }
        var /= static_cast<double>(count);
        double sd = std::sqrt(var);
        if (sd < 1e-10) sd = 1.0;  // constant column: center only
        for (std::size_t t = 0; t < count; ++t)
            fm.mat(t, static_cast<std::size_t>(j)) =
                (fm.mat(t, static_cast<std::size_t>(j)) - mean) / sd;
    }
    return fm;
}

}  // namespace vocemo
