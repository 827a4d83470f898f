#pragma once

#include <cstdint>
#include <string>

#include "padspace/classifier.hpp"
#include "padspace/dsp.hpp"
#include "padspace/reduction.hpp"

namespace padspace {

/// All pipeline knobs in one place, loadable from a flat key=value file.
/// CLI flags override file values; the file overrides built-in defaults.
struct RunConfig {
    std::uint64_t seed = 7;
    std::string manifest;
    std::string workdir;

    // classifier
    int epochs = 100;
    int batch_size = 64;
    double learning_rate = 1e-4;

    // anchored reduction
    int k = 20;
    double min_dist = 0.1;
    double layout_lr = 1e-2;
    double anchor_noise_sigma = 0.01;
    int layout_epochs = 500;
    int negative_sample_rate = 5;
    double supervision_weight = 0.5;
    double anchor_pull = 400.0;
    int k_pred = 10;

    // framing
    int frame_len = 400;
    int hop = 160;

    /// Parses `key=value` lines ('#' comments and blank lines allowed).
    /// Unknown keys are errors.
    void apply_file(const std::string& path);

    /// Resolves the effective workdir: explicit value, else the
    /// PADSPACE_WORKDIR environment variable, else ".".
    std::string effective_workdir() const;

    TrainConfig train_config() const;
    ReductionConfig reduction_config() const;
    FrameConfig frame_config() const;
};

}  // namespace padspace
