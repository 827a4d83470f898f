#include "padspace/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "padspace/error.hpp"

namespace padspace {

namespace {

std::uint32_t read_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (p[1] << 8) | (p[2] << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

struct FmtChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
};

}  // namespace

AudioClip read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open WAV file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw DataError("not a RIFF/WAVE file: " + path);
    }

    FmtChunk fmt;
    bool have_fmt = false;
    const unsigned char* data_ptr = nullptr;
    std::size_t data_size = 0;

    std::size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + off);
        const std::uint32_t size = read_u32le(bytes.data() + off + 4);
        const std::size_t body = off + 8;
        if (body + size > bytes.size()) {
            throw DataError("truncated WAV file: " + path);
        }
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16) throw DataError("malformed fmt chunk: " + path);
            fmt.format = read_u16le(bytes.data() + body);
            fmt.channels = read_u16le(bytes.data() + body + 2);
            fmt.sample_rate = read_u32le(bytes.data() + body + 4);
            fmt.bits = read_u16le(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_ptr = bytes.data() + body;
            data_size = size;
        }
        off = body + size + (size & 1);  // chunks are word-aligned
    }

    if (!have_fmt || data_ptr == nullptr) {
        throw DataError("WAV file missing fmt or data chunk: " + path);
    }
    if (fmt.format != 1 && fmt.format != 3) {
        throw DataError("unsupported WAV codec (only PCM16 and float32): " +
                        path);
    }
    if (fmt.channels < 1 || fmt.channels > 2) {
        throw DataError("only mono or stereo WAV supported: " + path);
    }
    if (fmt.sample_rate == 0) throw DataError("zero sample rate: " + path);
    const bool is_float = fmt.format == 3;
    if (is_float && fmt.bits != 32) {
        throw DataError("float WAV must be 32-bit: " + path);
    }
    if (!is_float && fmt.bits != 16) {
        throw DataError("PCM WAV must be 16-bit: " + path);
    }

    const std::size_t bytes_per_sample = fmt.bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
    const std::size_t frames = data_size / frame_bytes;
    if (frames == 0) throw DataError("zero-length audio: " + path);

    AudioClip clip;
    clip.sample_rate = static_cast<int>(fmt.sample_rate);
    clip.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (unsigned c = 0; c < fmt.channels; ++c) {
            const unsigned char* p = data_ptr + f * frame_bytes +
                                     c * bytes_per_sample;
            double v;
            if (is_float) {
                float fv;
                std::memcpy(&fv, p, 4);
                v = fv;
            } else {
                const std::int16_t s =
                    static_cast<std::int16_t>(read_u16le(p));
                v = s / 32768.0;
            }
            acc += v;
        }
        double s = acc / fmt.channels;
        if (!std::isfinite(s)) s = 0.0;
        clip.samples[f] = std::clamp(s, -1.0, 1.0);
    }
    return clip;
}

void write_wav(const std::string& path, const AudioClip& clip) {
    if (clip.sample_rate <= 0) throw DataError("invalid sample rate");
    if (clip.samples.empty()) throw DataError("refusing to write empty audio");

    const std::uint32_t data_size =
        static_cast<std::uint32_t>(clip.samples.size() * 2);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write WAV file: " + path);

    auto put_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    auto put_u16 = [&](std::uint16_t v) {
        unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF)};
        out.write(reinterpret_cast<char*>(b), 2);
    };

    out.write("RIFF", 4);
    put_u32(36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(static_cast<std::uint32_t>(clip.sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_size);
    for (const double s : clip.samples) {
        const double c = std::clamp(s, -1.0, 1.0);
        const auto q = static_cast<std::int16_t>(
            std::clamp<long long>(std::llround(c * 32767.0), -32768, 32767));
        put_u16(static_cast<std::uint16_t>(q));
    }
    if (!out) throw DataError("failed writing WAV file: " + path);
}

AudioClip resample(const AudioClip& clip, int target_rate) {
    if (target_rate <= 0) throw DataError("target rate must be positive");
    if (clip.sample_rate <= 0) throw DataError("clip has no sample rate");
    if (target_rate == clip.sample_rate) return clip;

    const double ratio =
        static_cast<double>(clip.sample_rate) / target_rate;  // input per output
    // Anti-alias cutoff at 95% of the narrower Nyquist, in cycles per
    // input sample. Tap radius widens with the decimation factor.
    const double cutoff = 0.5 * 0.95 * std::min(1.0, 1.0 / ratio);
    const int half_taps =
        static_cast<int>(std::ceil(16.0 * std::max(1.0, ratio)));

    const std::int64_t n_in = static_cast<std::int64_t>(clip.samples.size());
    const std::int64_t n_out = std::llround(
        static_cast<double>(n_in) * target_rate / clip.sample_rate);

    AudioClip out;
    out.sample_rate = target_rate;
    out.samples.resize(static_cast<std::size_t>(std::max<std::int64_t>(n_out, 1)));

    const double pi = std::numbers::pi;
    for (std::int64_t n = 0; n < n_out; ++n) {
        const double t = n * ratio;
        const auto m0 = static_cast<std::int64_t>(std::ceil(t - half_taps));
        const auto m1 = static_cast<std::int64_t>(std::floor(t + half_taps));
        double acc = 0.0;
        double norm = 0.0;
        for (std::int64_t m = m0; m <= m1; ++m) {
            const double u = t - m;
            const double x = 2.0 * cutoff * u;
            const double sinc =
                x == 0.0 ? 1.0 : std::sin(pi * x) / (pi * x);
            const double win = 0.5 + 0.5 * std::cos(pi * u / half_taps);
            const double h = 2.0 * cutoff * sinc * win;
            norm += h;
            if (m >= 0 && m < n_in) acc += clip.samples[m] * h;
        }
        const double v = norm > 1e-12 ? acc / norm : 0.0;
        out.samples[static_cast<std::size_t>(n)] = std::clamp(v, -1.0, 1.0);
    }
    return out;
}

}  // namespace padspace
