#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "padspace/audio.hpp"

namespace padspace {

/// Analysis framing. Defaults are 25 ms frames with a 10 ms hop at the
/// canonical 16 kHz rate, Hann windowed.
struct FrameConfig {
    int frame_len = 400;
    int hop = 160;

    void validate() const;  // throws DataError on bad geometry
    int num_frames(std::size_t n_samples) const {
        return n_samples < static_cast<std::size_t>(frame_len)
                   ? 0
                   : 1 + static_cast<int>((n_samples - frame_len) / hop);
    }
};

/// Magnitude spectrogram: frames x (frame_len/2 + 1) nonnegative entries.
struct Spectrogram {
    Eigen::MatrixXd magnitudes;  // row per frame
    double bin_hz = 0.0;

    int frames() const { return static_cast<int>(magnitudes.rows()); }
    int bins() const { return static_cast<int>(magnitudes.cols()); }
};

/// Per-frame fundamental frequency. Unvoiced frames carry no f0.
struct PitchTrack {
    std::vector<bool> voiced;
    std::vector<double> f0_hz;  // valid only where voiced; 0 otherwise

    int frames() const { return static_cast<int>(voiced.size()); }
    double voiced_fraction() const;
    std::vector<double> voiced_values() const;
};

inline constexpr int kMelBands = 40;
inline constexpr int kProsodyDims = 8;
inline constexpr int kFeatureDims = 2 * kMelBands + kProsodyDims;  // 88

/// Pitch search band for the YIN estimator.
inline constexpr double kPitchMinHz = 50.0;
inline constexpr double kPitchMaxHz = 600.0;

/// Hann-windowed magnitude STFT. Frame t covers samples
/// [t*hop, t*hop + frame_len). Throws DataError if the clip is shorter
/// than one frame.
Spectrogram stft_magnitude(const AudioClip& clip, const FrameConfig& cfg);

/// Un-windowed per-frame RMS over the same frame grid.
std::vector<double> rms_energy(const AudioClip& clip, const FrameConfig& cfg);

/// YIN pitch over the cfg hop grid with a wider per-frame analysis window
/// (at least two periods of the lowest searched pitch). Cumulative-mean
/// normalized difference, absolute threshold 0.15, parabolic refinement.
PitchTrack pitch_yin(const AudioClip& clip, const FrameConfig& cfg);

/// L2 norm of the positive part of the difference of consecutive
/// L1-normalized magnitude frames; flux(0) = 0. Throws DataError on a
/// single-frame spectrogram.
std::vector<double> spectral_flux(const Spectrogram& spec);

/// Triangular mel filterbank over [50, 8000] Hz, applied to magnitudes,
/// log with a 1e-10 floor.
class MelBank {
public:
    MelBank(int bands, int fft_bins, double bin_hz, double lo_hz, double hi_hz);

    /// Returns log mel energies for one magnitude frame.
    Eigen::VectorXd apply_log(const Eigen::VectorXd& magnitude_frame) const;

private:
    Eigen::MatrixXd weights_;  // bands x bins
};

/// The 88-d clip descriptor: 40 log-mel means, 40 log-mel standard
/// deviations, then pitch mean/std/min/max over voiced frames (zeros when
/// nothing is voiced), energy mean/std, flux mean/std.
Eigen::VectorXd pooled_features(const AudioClip& clip, const FrameConfig& cfg);

/// Column names f0..f87 of the feature cache.
std::vector<std::string> feature_column_names();

/// Feature cache file: header `clip_id,f0,...,f87`, 6-significant-digit
/// decimals, one row per clip.
struct FeatureTable {
    std::vector<std::string> clip_ids;
    Eigen::MatrixXd values;  // rows x 88
};

void write_feature_table(const std::string& path, const FeatureTable& table);
FeatureTable read_feature_table(const std::string& path);

/// Rounds a feature vector through the cache's 6-significant-digit decimal
/// representation. Query paths apply this so a training clip's features
/// reproduce its cached row bit-exactly.
Eigen::VectorXd quantize_features_g6(const Eigen::VectorXd& features);

}  // namespace padspace
