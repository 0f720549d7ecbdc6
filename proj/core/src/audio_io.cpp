#include "vocemo/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "vocemo/errors.hpp"

namespace vocemo {

namespace {

constexpr double kQuantStep = 32767.0;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace

void validate(const Utterance& u) {
    if (u.sample_rate != kCanonicalRate)
        throw UnsupportedRate("utterance rate " + std::to_string(u.sample_rate) +
                              " Hz, expected " + std::to_string(kCanonicalRate));
    if (u.samples.empty()) throw UnsupportedFormat("utterance has no samples");
    for (double x : u.samples) {
        if (!std::isfinite(x) || x < -1.0 || x > 1.0)
            throw UnsupportedFormat("sample out of [-1,1] or non-finite");
    }
}

Utterance read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedWav("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw MalformedWav(path.string() + ": not a RIFF/WAVE file");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data_ptr = nullptr;
    std::uint32_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t len = read_u32(bytes.data() + pos + 4);
        pos += 8;
        if (pos + len > bytes.size()) throw MalformedWav(path.string() + ": truncated chunk");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (len < 16) throw MalformedWav(path.string() + ": fmt chunk too small");
            format = read_u16(bytes.data() + pos);
            channels = read_u16(bytes.data() + pos + 2);
            rate = read_u32(bytes.data() + pos + 4);
            bits = read_u16(bytes.data() + pos + 14);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data_ptr = bytes.data() + pos;
            data_len = len;
        }
        // all other chunks (LIST, INFO, fact, ...) are skipped
        pos += len + (len & 1);  // chunks are word-aligned
    }

    if (!have_fmt) throw MalformedWav(path.string() + ": missing fmt chunk");
    if (data_ptr == nullptr) throw MalformedWav(path.string() + ": missing data chunk");
    if (format != 1 || channels != 1 || bits != 16)
        throw UnsupportedFormat(path.string() + ": need PCM 16-bit mono, got format=" +
                                std::to_string(format) + " channels=" + std::to_string(channels) +
                                " bits=" + std::to_string(bits));
    if (rate != static_cast<std::uint32_t>(kCanonicalRate))
        throw UnsupportedRate(path.string() + ": rate " + std::to_string(rate) + " Hz, expected " +
                              std::to_string(kCanonicalRate));
    if (data_len % 2 != 0) throw MalformedWav(path.string() + ": odd data chunk length");

    Utterance u;
    u.sample_rate = kCanonicalRate;
    u.id = path.stem().string();
    u.samples.resize(data_len / 2);
    for (std::size_t i = 0; i < u.samples.size(); ++i) {
        const std::int16_t q =
            static_cast<std::int16_t>(read_u16(data_ptr + 2 * i));
        u.samples[i] = std::clamp(static_cast<double>(q) / kQuantStep, -1.0, 1.0);
    }
    return u;
}

void write_wav(const Utterance& u, const std::filesystem::path& path) {
    validate(u);
    const std::uint32_t data_len = static_cast<std::uint32_t>(u.samples.size() * 2);

    std::vector<unsigned char> out;
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(u.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(u.sample_rate * 2));  // byte rate
    put_u16(out, 2);   // block align
    put_u16(out, 16);  // bits per sample
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_len);
    for (double x : u.samples) {
        const long q = std::lround(x * kQuantStep);
        const std::int16_t s = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
        put_u16(out, static_cast<std::uint16_t>(s));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoFailure("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoFailure("short write to " + path.string());
}

}  // namespace vocemo
