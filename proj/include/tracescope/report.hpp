#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tracescope/confusion_matrix.hpp"
#include "tracescope/dataset.hpp"
#include "tracescope/eval.hpp"
#include "tracescope/image.hpp"
#include "tracescope/nn.hpp"

namespace tracescope {

/// Grid of cells shaded by row-normalized count, with counts drawn in each cell.
RgbImage render_confusion_matrix(const ConfusionMatrix& cm, int cell = 40);

/// Up to `max_trials` trials, one row each: anchor, gap, then the candidates.
/// The predicted candidate gets a green (correct) or red (wrong) frame and
/// the target a blue underline.
RgbImage render_nway_montage(const Dataset& dataset, const NWayResult& result,
                             std::size_t max_trials = 8);

std::string confusion_to_json(const ConfusionMatrix& cm);

/// Metrics of a training run as JSON (no timing data, so reruns compare equal).
std::string train_metrics_json(const TrainResult& result, const TrainConfig& cfg,
                               const DatasetManifest& manifest);

std::string nway_metrics_json(const NWayResult& result, std::uint64_t model_checksum,
                              std::size_t test_size);

std::string amplitude_table_json(const std::vector<AmplitudeScore>& rows);
/// Plain-text rendering of the amplitude table, one line per row.
std::string amplitude_table_text(const std::vector<AmplitudeScore>& rows);

/// Writes `text` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace tracescope
