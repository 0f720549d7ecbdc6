#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vocemo/errors.hpp"
#include "vocemo/features.hpp"
#include "vocemo/rng.hpp"

using namespace vocemo;

namespace {

double spectral_centroid(const std::vector<double>& power) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
        num += static_cast<double>(k) * power[k];
        den += power[k];
    }
    return num / den;
}

Utterance make_utterance(std::vector<double> samples) {
    Utterance u;
    u.samples = std::move(samples);
    return u;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("pre_emphasis filter") {
    std::vector<double> x = {1.0, 1.0, 1.0};

    auto identity = pre_emphasis(x, 0.0);
    CHECK(identity == x);

    auto y = pre_emphasis(x, 0.97);
    REQUIRE(y.size() == 3);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(y[2] == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("pre_emphasis shifts energy toward high frequencies") {
    auto x = testutil::noise(512, 0.8, 77);
    auto y = pre_emphasis(x, 0.97);
    auto px = oracles::naive_dft_power(x, 512);
    auto py = oracles::naive_dft_power(y, 512);
    CHECK(spectral_centroid(py) > spectral_centroid(px));
}

TEST_CASE("frame_and_window counts and window shape") {
    FrameConfig cfg;

    Matrix one = frame_and_window(std::vector<double>(400, 0.0), cfg);
    CHECK(one.rows() == 1);

    Matrix three = frame_and_window(std::vector<double>(720, 0.0), cfg);
    CHECK(three.rows() == 3);

    Matrix w = frame_and_window(std::vector<double>(400, 1.0), cfg);
    REQUIRE(w.cols() == 400);
    for (std::size_t n = 0; n < 400; ++n) {
        const double ham =
            0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / 399.0);
        CHECK(w(0, n) == doctest::Approx(ham).epsilon(1e-12));
    }

    CHECK_THROWS_AS(frame_and_window(std::vector<double>(399, 0.0), cfg), TooShort);
}

TEST_CASE("power_spectrum basics") {
    std::vector<double> zeros(400, 0.0);
    auto pz = power_spectrum(zeros, 512);
    REQUIRE(pz.size() == 257);
    for (double v : pz) CHECK(v == 0.0);

    std::vector<double> impulse(400, 0.0);
    impulse[0] = 1.0;
    auto pi = power_spectrum(impulse, 512);
    for (double v : pi) CHECK(v == doctest::Approx(1.0 / 512.0).epsilon(1e-12));
}

TEST_CASE("power_spectrum matches the direct-sum dft") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto frame = testutil::noise(400, 1.0, 100 + seed);
        auto fast = power_spectrum(frame, 512);
        auto slow = oracles::naive_dft_power(frame, 512);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t k = 0; k < fast.size(); ++k) {
            CHECK(std::abs(fast[k] - slow[k]) <= 1e-8);
        }
    }
}

TEST_CASE("parseval identity on random frames") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto frame = testutil::noise(512, 1.0, 300 + seed);
        auto p = power_spectrum(frame, 512);
        double time_energy = 0.0;
        for (double v : frame) time_energy += v * v;
        // conjugate symmetry: interior bins count twice
        double freq_energy = p[0] + p[256];
        for (std::size_t k = 1; k < 256; ++k) freq_energy += 2.0 * p[k];
        CHECK(freq_energy == doctest::Approx(time_energy).epsilon(1e-6));
    }
}

TEST_CASE("mel scale closed forms") {
    CHECK(mel_scale(0.0) == 0.0);
    CHECK(mel_scale(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK(mel_scale(700.0) == doctest::Approx(781.17).epsilon(1e-4));
    for (double f : {50.0, 300.0, 1234.5, 7999.0}) {
        CHECK(mel_inverse(mel_scale(f)) == doctest::Approx(f).epsilon(1e-9));
    }
}

TEST_CASE("mel filters form a partition of unity between the outer centers") {
    FrameConfig cfg;
    Matrix filters = make_mel_filters(cfg, 16000);
    REQUIRE(filters.rows() == 26);
    REQUIRE(filters.cols() == 257);

    const double mel_lo = mel_scale(cfg.fmin), mel_hi = mel_scale(cfg.fmax);
    const double first_center = mel_inverse(mel_lo + (mel_hi - mel_lo) / 27.0);
    const double last_center = mel_inverse(mel_lo + 26.0 * (mel_hi - mel_lo) / 27.0);

    for (std::size_t k = 0; k < filters.cols(); ++k) {
        const double freq = static_cast<double>(k) * 16000.0 / 512.0;
        if (freq <= first_center || freq >= last_center) continue;
        double sum = 0.0;
        for (std::size_t m = 0; m < filters.rows(); ++m) sum += filters(m, k);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("mel filterbank output is floored") {
    FrameConfig cfg;
    std::vector<double> silent(257, 0.0);
    auto lm = mel_filterbank(silent, cfg, 16000);
    REQUIRE(lm.size() == 26);
    for (double v : lm) CHECK(v == doctest::Approx(std::log(1e-10)).epsilon(1e-12));
}

TEST_CASE("mfcc_frame dct properties") {
    std::vector<double> constant(26, 1.7);
    auto c = mfcc_frame(constant, 13);
    REQUIRE(c.size() == 13);
    CHECK(c[0] == doctest::Approx(1.7 * std::sqrt(26.0)).epsilon(1e-12));
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k]) <= 1e-12);

    std::vector<double> zeros(26, 0.0);
    for (double v : mfcc_frame(zeros, 13)) CHECK(v == 0.0);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto v = testutil::noise(26, 2.0, 500 + seed);
        auto fast = mfcc_frame(v, 13);
        auto slow = oracles::naive_dct2(v, 13);
        for (std::size_t k = 0; k < fast.size(); ++k) {
            CHECK(std::abs(fast[k] - slow[k]) <= 1e-10);
        }
    }
}

TEST_CASE("delta regression") {
    Matrix constant(6, 3, 2.5);
    Matrix dc = deltas(constant);
    for (std::size_t t = 0; t < dc.rows(); ++t)
        for (std::size_t j = 0; j < dc.cols(); ++j) CHECK(dc(t, j) == 0.0);

    Matrix single(1, 4, 9.0);
    Matrix ds = deltas(single);
    for (std::size_t j = 0; j < ds.cols(); ++j) CHECK(ds(0, j) == 0.0);

    Matrix ramp(10, 2);
    for (std::size_t t = 0; t < 10; ++t)
        for (std::size_t j = 0; j < 2; ++j) ramp(t, j) = static_cast<double>(t);
    Matrix dr = deltas(ramp);
    for (std::size_t t = 2; t < 8; ++t)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(dr(t, j) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pitch detector on a 220 hz sine") {
    FrameConfig cfg;
    auto tone = testutil::sine(220.0, 0.5, 0.05);
    std::vector<double> frame(tone.begin(), tone.begin() + 400);
    PitchResult p = pitch_f0(frame, cfg, 16000);
    CHECK(p.voiced);
    CHECK(std::abs(p.f0_hz - 220.0) <= 3.0);
}

TEST_CASE("white noise is mostly unvoiced") {
    FrameConfig cfg;
    int voiced = 0;
    const int frames = 200;
    for (int i = 0; i < frames; ++i) {
        auto frame = testutil::noise(400, 0.8, 900 + static_cast<std::uint64_t>(i));
        if (pitch_f0(frame, cfg, 16000).voiced) ++voiced;
    }
    CHECK(voiced <= frames / 10);
}

TEST_CASE("silence is unvoiced without dividing by zero") {
    FrameConfig cfg;
    std::vector<double> frame(400, 0.0);
    PitchResult p = pitch_f0(frame, cfg, 16000);
    CHECK_FALSE(p.voiced);
    CHECK(p.f0_hz == 0.0);
}

TEST_CASE("log_energy definition") {
    std::vector<double> zeros(400, 0.0);
    CHECK(log_energy(zeros) == doctest::Approx(std::log(1e-10)).epsilon(1e-12));

    std::vector<double> impulse(400, 0.0);
    impulse[7] = 1.0;
    CHECK(log_energy(impulse) == doctest::Approx(0.0).epsilon(1e-12));

    auto x = testutil::noise(400, 0.4, 1234);
    auto x2 = x;
    for (double& v : x2) v *= 2.0;
    CHECK(log_energy(x2) - log_energy(x) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("extract_features on one second of silence") {
    Utterance u = make_utterance(std::vector<double>(16000, 0.0));
    FeatureMatrix f = extract_features(u);
    REQUIRE(f.frame_count() == 98);
    REQUIRE(f.mat.cols() == kFeatureDim);
    for (std::size_t t = 0; t < f.mat.rows(); ++t) {
        CHECK(f.mat(t, kColVoiced) == 0.0);
        CHECK(f.mat(t, kColF0) == 0.0);
        // constant columns center to zero under the unit-divisor floor
        for (int j = 0; j < kCmvnCols; ++j) {
            CHECK(std::abs(f.mat(t, static_cast<std::size_t>(j))) <= 1e-12);
        }
    }
}

TEST_CASE("cmvn zeroes the column means and normalizes variances") {
    auto samples = testutil::noise(16000, 0.3, 4242);
    auto tone = testutil::sine(300.0, 0.4, 1.0);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] += tone[i];
    Utterance u = make_utterance(std::move(samples));

    FeatureMatrix f = extract_features(u);
    const auto T = f.mat.rows();
    for (int j = 0; j < kCmvnCols; ++j) {
        double mean = 0.0;
        for (std::size_t t = 0; t < T; ++t) mean += f.mat(t, static_cast<std::size_t>(j));
        mean /= static_cast<double>(T);
        CHECK(std::abs(mean) < 1e-9);

        double var = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double d = f.mat(t, static_cast<std::size_t>(j)) - mean;
            var += d * d;
        }
        var /= static_cast<double>(T);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    }
    for (std::size_t t = 0; t < T; ++t) {
        const double v = f.mat(t, kColVoiced);
        CHECK((v == 0.0 || v == 1.0));
        if (v == 0.0) CHECK(f.mat(t, kColF0) == 0.0);
    }
}

TEST_CASE("rising f0 produces a strictly increasing pitch track") {
    Utterance u = make_utterance(testutil::chirp(300.0, 380.0, 0.5, 1.0));
    FrameConfig cfg;
    cfg.pitch_fmin = 270.0;  // child-range band, as the pipeline configures it
    FeatureMatrix f = extract_features(u, cfg);

    double prev = -1e9;
    std::size_t voiced = 0;
    for (std::size_t t = 0; t < f.mat.rows(); ++t) {
        if (f.mat(t, kColVoiced) != 1.0) continue;
        ++voiced;
        const double st = f.mat(t, kColF0);
        CHECK(st > prev);
        prev = st;
    }
    CHECK(voiced >= f.mat.rows() / 2);
}

TEST_CASE("extract_features is deterministic") {
    Utterance u = make_utterance(testutil::noise(12000, 0.5, 31));
    FeatureMatrix a = extract_features(u);
    FeatureMatrix b = extract_features(u);
    CHECK(a.mat == b.mat);
}

TEST_CASE("frame config validation") {
    FrameConfig bad;
    bad.frame_len = 600;  // larger than n_fft
    CHECK_THROWS_AS(bad.validate(16000), ConfigError);

    FrameConfig hop;
    hop.hop = 0;
    CHECK_THROWS_AS(hop.validate(16000), ConfigError);

    FrameConfig pitch;
    pitch.pitch_fmin = 700.0;  // above pitch_fmax
    CHECK_THROWS_AS(pitch.validate(16000), ConfigError);

    CHECK_NOTHROW(FrameConfig{}.validate(16000));
}

TEST_CASE("too-short utterance is rejected") {
    Utterance u = make_utterance(std::vector<double>(100, 0.1));
    CHECK_THROWS_AS(extract_features(u), TooShort);
}

}  // TEST_SUITE
