#include "padspace/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>

#include "padspace/csv.hpp"
#include "padspace/error.hpp"

namespace padspace {

namespace {

constexpr double kLogMelFloor = 1e-10;
constexpr double kYinThreshold = 0.15;

// FFTW's planner is not thread-safe; executions on private buffers are.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// One-off real-to-complex FFT of arbitrary size.
class RealFft {
public:
    explicit RealFft(int n) : n_(n) {
        in_ = fftw_alloc_real(static_cast<std::size_t>(n));
        out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    /// Magnitudes of the positive-frequency half, length n/2 + 1.
    void magnitude(const double* frame, double* mag_out) {
        std::copy(frame, frame + n_, in_);
        fftw_execute(plan_);
        for (int k = 0; k <= n_ / 2; ++k) {
            mag_out[k] = std::hypot(out_[k][0], out_[k][1]);
        }
    }

private:
    int n_;
    double* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

void check_framable(const AudioClip& clip, const FrameConfig& cfg) {
    cfg.validate();
    if (clip.samples.size() < static_cast<std::size_t>(cfg.frame_len)) {
        throw DataError("clip shorter than one frame (" +
                        std::to_string(clip.samples.size()) + " < " +
                        std::to_string(cfg.frame_len) + " samples)");
    }
}

double mel_of_hz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double hz_of_mel(double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v, double mean) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (const double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

void FrameConfig::validate() const {
    if (hop <= 0 || hop > frame_len || frame_len > 8192) {
        throw DataError("invalid frame config: frame_len=" +
                        std::to_string(frame_len) + " hop=" +
                        std::to_string(hop));
    }
}

double PitchTrack::voiced_fraction() const {
    if (voiced.empty()) return 0.0;
    int n = 0;
    for (const bool v : voiced) n += v ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(voiced.size());
}

std::vector<double> PitchTrack::voiced_values() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < voiced.size(); ++i) {
        if (voiced[i]) out.push_back(f0_hz[i]);
    }
    return out;
}

Spectrogram stft_magnitude(const AudioClip& clip, const FrameConfig& cfg) {
    check_framable(clip, cfg);
    const int n = cfg.frame_len;
    const int frames = cfg.num_frames(clip.samples.size());
    const int bins = n / 2 + 1;

    std::vector<double> window(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        window[static_cast<std::size_t>(i)] =
            0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    }

    Spectrogram spec;
    spec.bin_hz = static_cast<double>(clip.sample_rate) / n;
    spec.magnitudes.resize(frames, bins);

    RealFft fft(n);
    std::vector<double> buf(static_cast<std::size_t>(n));
    std::vector<double> mag(static_cast<std::size_t>(bins));
    for (int t = 0; t < frames; ++t) {
        const double* src = clip.samples.data() +
                            static_cast<std::size_t>(t) * cfg.hop;
        for (int i = 0; i < n; ++i) {
            buf[static_cast<std::size_t>(i)] =
                src[i] * window[static_cast<std::size_t>(i)];
        }
        fft.magnitude(buf.data(), mag.data());
        for (int k = 0; k < bins; ++k) {
            spec.magnitudes(t, k) = mag[static_cast<std::size_t>(k)];
        }
    }
    return spec;
}

std::vector<double> rms_energy(const AudioClip& clip, const FrameConfig& cfg) {
    check_framable(clip, cfg);
    const int frames = cfg.num_frames(clip.samples.size());
    std::vector<double> energy(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        const double* src = clip.samples.data() +
                            static_cast<std::size_t>(t) * cfg.hop;
        double acc = 0.0;
        for (int i = 0; i < cfg.frame_len; ++i) acc += src[i] * src[i];
        energy[static_cast<std::size_t>(t)] = std::sqrt(acc / cfg.frame_len);
    }
    return energy;
}

PitchTrack pitch_yin(const AudioClip& clip, const FrameConfig& cfg) {
    cfg.validate();
    const int rate = clip.sample_rate;
    const int tau_min =
        std::max(2, static_cast<int>(std::floor(rate / kPitchMaxHz)));
    const int tau_max = static_cast<int>(std::ceil(rate / kPitchMinHz));
    // The analysis window needs one integration window plus the longest
    // searched lag; reuse frame_len when the caller already asks for more.
    const int window = std::max(cfg.frame_len, 2 * tau_max);
    const int integ = window - tau_max;

    PitchTrack track;
    if (clip.samples.size() < static_cast<std::size_t>(window)) return track;
    const int frames =
        1 + static_cast<int>((clip.samples.size() - window) / cfg.hop);

    std::vector<double> diff(static_cast<std::size_t>(tau_max) + 1);
    std::vector<double> cmndf(static_cast<std::size_t>(tau_max) + 1);
    for (int t = 0; t < frames; ++t) {
        const double* x = clip.samples.data() +
                          static_cast<std::size_t>(t) * cfg.hop;
        diff[0] = 0.0;
        for (int tau = 1; tau <= tau_max; ++tau) {
            double acc = 0.0;
            for (int j = 0; j < integ; ++j) {
                const double d = x[j] - x[j + tau];
                acc += d * d;
            }
            diff[static_cast<std::size_t>(tau)] = acc;
        }
        cmndf[0] = 1.0;
        double running = 0.0;
        for (int tau = 1; tau <= tau_max; ++tau) {
            running += diff[static_cast<std::size_t>(tau)];
            cmndf[static_cast<std::size_t>(tau)] =
                running > 1e-30
                    ? diff[static_cast<std::size_t>(tau)] * tau / running
                    : 1.0;
        }

        int best = -1;
        for (int tau = tau_min; tau <= tau_max; ++tau) {
            if (cmndf[static_cast<std::size_t>(tau)] < kYinThreshold) {
                best = tau;
                while (best + 1 <= tau_max &&
                       cmndf[static_cast<std::size_t>(best + 1)] <
                           cmndf[static_cast<std::size_t>(best)]) {
                    ++best;
                }
                break;
            }
        }
        if (best < 0) {
            track.voiced.push_back(false);
            track.f0_hz.push_back(0.0);
            continue;
        }

        double tau_star = best;
        if (best > tau_min && best < tau_max) {
            const double a = cmndf[static_cast<std::size_t>(best - 1)];
            const double b = cmndf[static_cast<std::size_t>(best)];
            const double c = cmndf[static_cast<std::size_t>(best + 1)];
            const double denom = a - 2.0 * b + c;
            if (std::abs(denom) > 1e-12) {
                const double shift = 0.5 * (a - c) / denom;
                if (std::abs(shift) <= 1.0) tau_star = best + shift;
            }
        }
        const double f0 =
            std::clamp(rate / tau_star, kPitchMinHz, kPitchMaxHz);
        track.voiced.push_back(true);
        track.f0_hz.push_back(f0);
    }
    return track;
}

std::vector<double> spectral_flux(const Spectrogram& spec) {
    if (spec.frames() < 2) {
        throw DataError("spectral flux needs at least 2 frames");
    }
    const int bins = spec.bins();
    auto normalized = [&](int t, Eigen::VectorXd& out) {
        out = spec.magnitudes.row(t).transpose();
        const double sum = out.sum();
        if (sum > 1e-30) out /= sum;  // zero frame stays a zero frame
        else out.setZero();
    };

    std::vector<double> flux(static_cast<std::size_t>(spec.frames()), 0.0);
    Eigen::VectorXd prev(bins), cur(bins);
    normalized(0, prev);
    for (int t = 1; t < spec.frames(); ++t) {
        normalized(t, cur);
        double acc = 0.0;
        for (int k = 0; k < bins; ++k) {
            const double d = cur(k) - prev(k);
            if (d > 0.0) acc += d * d;
        }
        flux[static_cast<std::size_t>(t)] = std::sqrt(acc);
        prev.swap(cur);
    }
    return flux;
}

MelBank::MelBank(int bands, int fft_bins, double bin_hz, double lo_hz,
                 double hi_hz) {
    const double mel_lo = mel_of_hz(lo_hz);
    const double mel_hi = mel_of_hz(hi_hz);
    std::vector<double> edges(static_cast<std::size_t>(bands) + 2);
    for (int m = 0; m < bands + 2; ++m) {
        edges[static_cast<std::size_t>(m)] =
            hz_of_mel(mel_lo + (mel_hi - mel_lo) * m / (bands + 1));
    }
    weights_.setZero(bands, fft_bins);
    for (int m = 0; m < bands; ++m) {
        const double left = edges[static_cast<std::size_t>(m)];
        const double center = edges[static_cast<std::size_t>(m) + 1];
        const double right = edges[static_cast<std::size_t>(m) + 2];
        for (int k = 0; k < fft_bins; ++k) {
            const double f = k * bin_hz;
            if (f <= left || f >= right) continue;
            weights_(m, k) = f <= center ? (f - left) / (center - left)
                                         : (right - f) / (right - center);
        }
    }
}

Eigen::VectorXd MelBank::apply_log(const Eigen::VectorXd& frame) const {
    Eigen::VectorXd mel = weights_ * frame;
    for (int m = 0; m < mel.size(); ++m) {
        mel(m) = std::log(std::max(mel(m), kLogMelFloor));
    }
    return mel;
}

Eigen::VectorXd pooled_features(const AudioClip& clip, const FrameConfig& cfg) {
    check_framable(clip, cfg);
    if (cfg.num_frames(clip.samples.size()) < 3) {
        throw DataError("clip too short for pooled features (needs >= 3 frames)");
    }

    const Spectrogram spec = stft_magnitude(clip, cfg);
    const MelBank bank(kMelBands, spec.bins(), spec.bin_hz, 50.0, 8000.0);

    Eigen::MatrixXd logmel(spec.frames(), kMelBands);
    for (int t = 0; t < spec.frames(); ++t) {
        logmel.row(t) =
            bank.apply_log(spec.magnitudes.row(t).transpose()).transpose();
    }

    const std::vector<double> energy = rms_energy(clip, cfg);
    const std::vector<double> flux = spectral_flux(spec);
    const PitchTrack pitch = pitch_yin(clip, cfg);
    const std::vector<double> voiced = pitch.voiced_values();

    Eigen::VectorXd out(kFeatureDims);
    for (int m = 0; m < kMelBands; ++m) {
        const double mean = logmel.col(m).mean();
        out(m) = mean;
        out(kMelBands + m) =
            std::sqrt((logmel.col(m).array() - mean).square().mean());
    }
    int p = 2 * kMelBands;
    const double pitch_mean = mean_of(voiced);
    out(p + 0) = pitch_mean;
    out(p + 1) = stddev_of(voiced, pitch_mean);
    out(p + 2) = voiced.empty() ? 0.0
                                : *std::min_element(voiced.begin(), voiced.end());
    out(p + 3) = voiced.empty() ? 0.0
                                : *std::max_element(voiced.begin(), voiced.end());
    const double energy_mean = mean_of(energy);
    out(p + 4) = energy_mean;
    out(p + 5) = stddev_of(energy, energy_mean);
    const double flux_mean = mean_of(flux);
    out(p + 6) = flux_mean;
    out(p + 7) = stddev_of(flux, flux_mean);
    return out;
}

std::vector<std::string> feature_column_names() {
    std::vector<std::string> names;
    names.reserve(kFeatureDims);
    for (int i = 0; i < kFeatureDims; ++i) {
        names.push_back("f" + std::to_string(i));
    }
    return names;
}

void write_feature_table(const std::string& path, const FeatureTable& table) {
    if (table.values.rows() !=
        static_cast<Eigen::Index>(table.clip_ids.size())) {
        throw DataError("feature table rows do not match clip ids");
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write feature cache: " + path);
    out << "clip_id";
    for (const auto& name : feature_column_names()) out << ',' << name;
    out << '\n';
    for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
        out << table.clip_ids[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
            out << ',' << csv::format_g6(table.values(r, c));
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing feature cache: " + path);
}

Eigen::VectorXd quantize_features_g6(const Eigen::VectorXd& features) {
    Eigen::VectorXd out(features.size());
    for (Eigen::Index i = 0; i < features.size(); ++i) {
        out(i) = std::stod(csv::format_g6(features(i)));
    }
    return out;
}

FeatureTable read_feature_table(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw DataError("empty feature cache: " + path);
    if (rows[0].size() != 1 + kFeatureDims || rows[0][0] != "clip_id") {
        throw DataError("bad feature cache header: " + path);
    }
    FeatureTable table;
    table.values.resize(static_cast<Eigen::Index>(rows.size()) - 1,
                        kFeatureDims);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 1 + kFeatureDims) {
            throw DataError("bad feature row " + std::to_string(r + 1) +
                            " in " + path);
        }
        table.clip_ids.push_back(rows[r][0]);
        for (int c = 0; c < kFeatureDims; ++c) {
            table.values(static_cast<Eigen::Index>(r) - 1, c) =
                csv::parse_double(rows[r][static_cast<std::size_t>(c) + 1],
                                  "feature cache value");
        }
    }
    return table;
}

}  // namespace padspace
