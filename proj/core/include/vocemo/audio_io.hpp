#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vocemo {

/// Canonical corpus rate. Everything downstream assumes it.
inline constexpr int kCanonicalRate = 16000;

struct Utterance {
    std::vector<double> samples;  // mono, in [-1, 1]
    int sample_rate = kCanonicalRate;
    std::string id;
};

/// Throws if the utterance breaks the canonical-format invariants
/// (16 kHz, non-empty, finite samples within [-1, 1]).
void validate(const Utterance& u);

/// Reads a RIFF/WAVE file: PCM, 16-bit, mono, 16 kHz. Unknown chunks
/// (LIST/INFO and friends) are skipped. Integer samples are dequantized
/// by 1/32767, matching the writer's quantizer, and clamped to [-1, 1]
/// so a foreign -32768 cannot escape the range.
Utterance read_wav(const std::filesystem::path& path);

/// Writes the canonical format. Samples are quantized symmetrically by
/// round(x * 32767) and clamped to [-32768, 32767].
void write_wav(const Utterance& u, const std::filesystem::path& path);

}  // namespace vocemo
