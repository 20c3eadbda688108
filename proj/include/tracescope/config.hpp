#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tracescope/eval.hpp"
#include "tracescope/nn.hpp"
#include "tracescope/pipeline.hpp"
#include "tracescope/synth.hpp"

namespace tracescope {

struct EvalConfig {
    NWayConfig nway;
    double threshold = 0.5;
    double probe_stride_seconds = 10.0;
};

enum class TrainTask { Classifier, Siamese, Amplitude };

std::string to_string(TrainTask t);
TrainTask parse_train_task(std::string_view s);

/// Training settings per task. The classifier task trains on the 70/30
/// split with geometric/photometric augmentation; the Siamese task on the
/// 75/25 split with histogram equalization. The amplitude task fits the
/// one-image-per-class dataset 3 without augmentation, full batch.
struct TrainSection {
    TrainConfig base;
    Augmentation classifier_augmentation = Augmentation::Task1;
    Augmentation siamese_augmentation = Augmentation::HistEq;
    Augmentation amplitude_augmentation = Augmentation::None;
    std::size_t amplitude_epochs = 1000;
    std::size_t amplitude_batch_size = 12;

    TrainConfig for_task(TrainTask task, std::uint64_t seed) const;
};

/// Full configuration of a run. Every field has a default; a JSON config
/// file only needs the keys it changes, and unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 42;
    PipelineConfig pipeline;
    SynthConfig synth;
    TrainSection train;
    EvalConfig eval;

    void validate() const;
};

/// Throws FormatError on malformed JSON, unknown keys or wrong types.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

std::string to_string(Normalization n);
Normalization parse_normalization(std::string_view s);

}  // namespace tracescope
