#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tracescope/dataset.hpp"
#include "tracescope/pipeline.hpp"
#include "tracescope/preprocess.hpp"
#include "tracescope/trace.hpp"

namespace tracescope {

inline constexpr const char* kGeneratorVersion = "tracescope-synth/1";

/// Piecewise-constant recipe: the signal sits at initial_level until
/// step_times[0], then at step_levels[k] from step_times[k] on.
struct StepRecipe {
    std::vector<double> step_times;
    std::vector<double> step_levels;
    double initial_level = 0.0;
    double noise_sigma = 0.0;
    double duration = 60.0;
    double dt = 0.1;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

enum class AnomalyKind { TimeShift, AmplitudeShift };

struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::TimeShift;
    double shift_seconds = 0.0;  // TimeShift
    double factor = 1.0;         // AmplitudeShift
};

/// Step trace sampled at recipe.dt plus i.i.d. Gaussian noise, deterministic
/// per seed. Step k starts at sample round(step_times[k] / dt).
Signal generate_step_trace(const StepRecipe& recipe, std::string name = "signal");

/// out[i] = in[clamp(i - round(shift/dt))]: positive shifts delay the signal.
/// Edges repeat the nearest original sample.
Signal induce_time_shift(const Signal& signal, double shift_seconds);

/// baseline + factor * (signal - baseline).
Signal induce_amplitude_shift(const Signal& signal, const Baseline& baseline, double factor);

Signal apply_anomaly(const Signal& signal, const Baseline& baseline, const AnomalySpec& spec);

struct SynthConfig {
    std::size_t n_per_class = 56;
    /// Noise std in normalized units (relative to the trace's level range).
    double noise_sigma = 0.01;
    double duration_seconds = 90.0;
    double dt = 0.1;
    double rise_time_seconds = 25.0;
    double fall_time_seconds = 55.0;
    double time_jitter_seconds = 1.0;
    double level_min = 0.3;
    double level_max = 1.0;
    double shift_seconds = 2.0;
    std::vector<double> amplitude_factors{0.5, 0.75, 1.2, 1.5, 2.5};
    double train_fraction = 0.7;
    double siamese_train_fraction = 0.75;
    Normalization dataset3_normalization = Normalization::Global;

    void validate() const;
};

/// Randomized two-step (rise then fall) recipe for trace `index`.
StepRecipe random_recipe(const SynthConfig& cfg, std::uint64_t seed, std::size_t index);

/// Classes H_L, L_H, O_o_B with n_per_class images each.
Dataset build_dataset1(const SynthConfig& synth, const PipelineConfig& pipeline,
                       std::uint64_t seed);

/// Dataset-1 plus H_L_L, H_L_R, L_H_L, L_H_R (left = earlier, right = later).
/// Shifted windows are centred where the unshifted peak was detected.
Dataset build_dataset2(const SynthConfig& synth, const PipelineConfig& pipeline,
                       std::uint64_t seed);

/// One trace with two peaks; per peak the original window and one window per
/// amplitude factor, 12 images by default, each its own class, all in the
/// train split. Rendered with one shared colour range.
Dataset build_dataset3(const SynthConfig& synth, const PipelineConfig& pipeline,
                       std::uint64_t seed);

/// The normal trace underlying build_dataset3 for a given seed.
Signal dataset3_trace(const SynthConfig& synth, const PipelineConfig& pipeline,
                      std::uint64_t seed);

}  // namespace tracescope
