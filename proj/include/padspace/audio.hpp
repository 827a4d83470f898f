#pragma once

#include <string>
#include <vector>

namespace padspace {

/// Mono PCM audio. Samples are finite and lie in [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration_s() const {
        return sample_rate > 0
                   ? static_cast<double>(samples.size()) / sample_rate
                   : 0.0;
    }
};

/// Canonical rate for all feature computation.
inline constexpr int kCanonicalRate = 16000;

/// Reads a RIFF/WAVE file. Accepts PCM 16-bit and IEEE float-32, mono or
/// stereo; stereo is downmixed by channel mean, 16-bit samples are scaled
/// by 1/32768. Throws DataError on other codecs, truncation, or
/// zero-length audio.
AudioClip read_wav(const std::string& path);

/// Writes mono PCM 16-bit. Samples are clamped to [-1, 1] and quantized
/// with round-half-away, so output is bit-stable for identical input.
void write_wav(const std::string& path, const AudioClip& clip);

/// Windowed-sinc resampling to target_rate. Identity when the rate already
/// matches. Duration is preserved within one sample period.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace padspace
