#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "padspace/audio.hpp"
#include "padspace/rng.hpp"

namespace testsupport {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("padspace_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const {
        return (path_ / name).string();
    }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline padspace::AudioClip make_sine(double freq_hz, double amplitude,
                                     double duration_s, int rate = 16000) {
    padspace::AudioClip clip;
    clip.sample_rate = rate;
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        clip.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi *
                                               freq_hz * static_cast<double>(i) /
                                               rate);
    }
    return clip;
}

inline padspace::AudioClip make_silence(double duration_s, int rate = 16000) {
    padspace::AudioClip clip;
    clip.sample_rate = rate;
    clip.samples.assign(static_cast<std::size_t>(std::llround(duration_s * rate)),
                        0.0);
    return clip;
}

inline padspace::AudioClip make_noise(double amplitude, double duration_s,
                                      std::uint64_t seed, int rate = 16000) {
    padspace::AudioClip clip;
    clip.sample_rate = rate;
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
    clip.samples.resize(n);
    padspace::Rng rng(seed, 99);
    for (std::size_t i = 0; i < n; ++i) {
        clip.samples[i] = rng.uniform(-amplitude, amplitude);
    }
    return clip;
}

/// Magnitude of the DFT at an exact frequency, via Goertzel-style direct
/// evaluation. Independent of the FFT library.
inline double dft_magnitude_at(const std::vector<double>& x, double freq_hz,
                               int rate) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = 2.0 * std::numbers::pi * freq_hz *
                         static_cast<double>(i) / rate;
        re += x[i] * std::cos(w);
        im -= x[i] * std::sin(w);
    }
    return std::hypot(re, im);
}

/// Frequency (integer Hz in [lo, hi]) with the largest DFT magnitude.
inline int dominant_freq_hz(const std::vector<double>& x, int rate, int lo,
                            int hi) {
    int best = lo;
    double best_mag = -1.0;
    for (int f = lo; f <= hi; ++f) {
        const double m = dft_magnitude_at(x, f, rate);
        if (m > best_mag) {
            best_mag = m;
            best = f;
        }
    }
    return best;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs a command line, capturing stdout/stderr.
inline CliResult run_cli(const std::string& cmd) {
    static std::atomic<int> counter{0};
    const std::string err_file =
        (std::filesystem::temp_directory_path() /
         ("padspace_stderr_" + std::to_string(::getpid()) + "_" +
          std::to_string(counter++)))
            .string();
    CliResult result;
    FILE* pipe = popen((cmd + " 2>" + err_file).c_str(), "r");
    if (!pipe) return result;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) {
        result.out.append(buf, n);
        if (n < sizeof(buf)) {
            if (feof(pipe)) break;
        }
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.err = read_text(err_file);
    std::filesystem::remove(err_file);
    return result;
}

}  // namespace testsupport
