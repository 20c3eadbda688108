#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tracescope/image.hpp"

namespace tracescope {

enum class Split { Train, Test };

std::string to_string(Split s);
Split parse_split(std::string_view s);

/// Which partition a consumer reads: the classifier (70/30) split or the
/// Siamese (75/25) split.
enum class SplitKind { Classifier, Siamese };

struct DatasetEntry {
    std::string path;   // relative to the dataset root
    std::string label;
    Split split = Split::Train;
    Split siamese_split = Split::Train;
    // Generator bookkeeping.
    std::size_t trace_index = 0;
    std::ptrdiff_t window_center = 0;
    std::ptrdiff_t peak_index = -1;  // detected peak inside the window, -1 if none
    std::optional<int> group;        // amplitude table: source peak (1-based)
    std::optional<double> factor;    // amplitude table: gain factor

    Split split_for(SplitKind kind) const noexcept {
        return kind == SplitKind::Classifier ? split : siamese_split;
    }
    friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

struct DatasetManifest {
    std::vector<std::string> class_names;
    std::vector<DatasetEntry> entries;
    std::uint64_t seed = 0;
    std::string generator_version;
    int dataset_id = 0;
    std::optional<double> render_amplitude;  // set when rendered with global normalization

    /// Index of `label` in class_names; throws FormatError if unknown.
    std::size_t class_index(std::string_view label) const;
    /// Checks distinct class names and known labels. Throws FormatError.
    void validate() const;
    std::vector<std::size_t> count_per_class() const;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// A manifest together with its decoded images (images[i] <-> entries[i]).
struct Dataset {
    DatasetManifest manifest;
    std::vector<RgbImage> images;

    std::vector<std::size_t> labels() const;  // class indices
    std::vector<std::size_t> indices_in(SplitKind kind, Split split) const;
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(std::string_view text);

/// Writes `<root>/manifest.json` and every image to `<root>/<entry.path>`.
std::filesystem::path write_dataset(const Dataset& dataset, const std::filesystem::path& root);
DatasetManifest read_manifest(const std::filesystem::path& manifest_path);
/// Reads the manifest and all images it references.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Stratified split: in every class round(fraction * count) items (at least
/// one on each side when the class has two or more) go to Train, chosen by
/// a seeded shuffle.
std::vector<Split> stratified_split(const std::vector<std::size_t>& labels, std::size_t num_classes,
                                    double train_fraction, std::uint64_t seed);

}  // namespace tracescope
