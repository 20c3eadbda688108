#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tracescope/confusion_matrix.hpp"
#include "tracescope/dataset.hpp"
#include "tracescope/image.hpp"
#include "tracescope/rng.hpp"

namespace tracescope {

enum class LayerKind { Conv, Relu, MaxPool, GlobalAvgPool, Flatten, Dense };

std::string to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

/// One layer of the classifier. Convolutions use "same" zero padding
/// (kernel / 2). Pooling windows are square and non-overlapping.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int out_channels = 0;  // Conv
    int kernel = 3;        // Conv
    int stride = 1;        // Conv
    int pool = 2;          // MaxPool
    int units = 0;         // Dense

    static LayerSpec conv(int out_channels, int kernel = 3, int stride = 1) {
        return {LayerKind::Conv, out_channels, kernel, stride, 2, 0};
    }
    static LayerSpec relu() { return {LayerKind::Relu}; }
    static LayerSpec max_pool(int k = 2) { return {LayerKind::MaxPool, 0, 3, 1, k, 0}; }
    static LayerSpec global_avg_pool() { return {LayerKind::GlobalAvgPool}; }
    static LayerSpec flatten() { return {LayerKind::Flatten}; }
    static LayerSpec dense(int units) { return {LayerKind::Dense, 0, 3, 1, 2, units}; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct TensorShape {
    int channels = 0;
    int height = 0;
    int width = 0;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
               static_cast<std::size_t>(width);
    }
    friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

/// Class probabilities; entries in [0, 1] summing to 1.
using ProbabilityVector = std::vector<double>;

/// Convolutional classifier ending in Dense(num_classes) + softmax.
/// Parameters are stored as 32-bit floats (the on-disk precision); all
/// arithmetic is carried out in double.
class CompactCnn {
public:
    /// Validates the layer list and initializes weights uniformly in
    /// +-sqrt(6 / fan_in) with zero biases.
    CompactCnn(std::vector<LayerSpec> layers, TensorShape input, std::size_t num_classes,
               std::uint64_t seed, std::vector<std::string> class_names = {});

    /// conv16-relu-pool, conv32-relu-pool, conv64-relu-pool, global average
    /// pool, dense(num_classes).
    static std::vector<LayerSpec> default_layers(std::size_t num_classes);

    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    TensorShape input_shape() const noexcept { return input_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    void set_class_names(std::vector<std::string> names);

    /// Shape after layer i (layer_shapes()[0] is the input shape).
    const std::vector<TensorShape>& layer_shapes() const noexcept { return shapes_; }

    /// Per-layer parameter blocks (empty for parameter-free layers). Conv:
    /// weights [out][in][k][k] then biases; Dense: weights [units][in] then biases.
    std::vector<std::vector<float>>& parameters() noexcept { return params_; }
    const std::vector<std::vector<float>>& parameters() const noexcept { return params_; }
    std::size_t parameter_count() const noexcept;

    /// FNV-1a 64 over the little-endian float payload.
    std::uint64_t checksum() const noexcept;

    friend bool operator==(const CompactCnn&, const CompactCnn&) = default;

private:
    std::vector<LayerSpec> layers_;
    TensorShape input_;
    std::size_t num_classes_;
    std::uint64_t seed_;
    std::vector<std::string> class_names_;
    std::vector<TensorShape> shapes_;
    std::vector<std::vector<float>> params_;
};

/// Pixels scaled to [-1, 1], channel-major (3, H, W).
std::vector<double> image_to_tensor(const RgbImage& image);

/// Throws ShapeError when the image does not match the model input.
ProbabilityVector forward(const CompactCnn& model, const RgbImage& image);
ProbabilityVector forward_tensor(const CompactCnn& model, std::span<const double> input);
std::size_t predict(const CompactCnn& model, const RgbImage& image);

/// Mean cross-entropy over a batch and its gradient per parameter block.
struct LossGradient {
    double loss = 0.0;
    std::vector<std::vector<double>> gradients;
};

/// Per-sample work may run on several threads; gradients are reduced in
/// sample order so the result does not depend on the thread count.
LossGradient loss_and_gradient(const CompactCnn& model,
                               std::span<const std::vector<double>> inputs,
                               std::span<const std::size_t> labels);
double batch_loss(const CompactCnn& model, std::span<const std::vector<double>> inputs,
                  std::span<const std::size_t> labels);

enum class Augmentation { None, Task1, HistEq };

std::string to_string(Augmentation a);
Augmentation parse_augmentation(std::string_view name);

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t epochs = 60;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double augment_probability = 0.5;
    Augmentation augmentation = Augmentation::Task1;
    SplitKind split = SplitKind::Classifier;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// SGD-with-momentum state for one model.
class SgdMomentum {
public:
    explicit SgdMomentum(const CompactCnn& model);
    void step(CompactCnn& model, const std::vector<std::vector<double>>& gradients,
              double learning_rate, double momentum);

private:
    std::vector<std::vector<double>> velocity_;
};

/// One optimizer step on mean cross-entropy. Returns the pre-update loss;
/// throws NumericalError if it is not finite.
double backward_and_step(CompactCnn& model, SgdMomentum& optimizer,
                         std::span<const RgbImage> images, std::span<const std::size_t> labels,
                         const TrainConfig& cfg);

// Image transforms used for augmentation.
RgbImage rotate90(const RgbImage& img, int quarter_turns);
RgbImage flip_horizontal(const RgbImage& img);
RgbImage flip_vertical(const RgbImage& img);
/// v' = 127.5 + factor (v - 127.5), rounded and clamped.
RgbImage adjust_contrast(const RgbImage& img, double factor);
/// Each pixel independently set to mid-gray (128) with probability p.
RgbImage pixel_dropout(const RgbImage& img, double p, Rng& rng);

/// With probability `probability`, one transform chosen uniformly from:
/// rotation (90/180/270), horizontal flip, vertical flip, contrast in
/// [0.8, 1.2], 5% pixel dropout. Otherwise a copy.
RgbImage augment_task1(const RgbImage& img, Rng& rng, double probability = 0.5);

/// Per-channel histogram equalization: level v -> floor(255 * cdf(v) / N).
RgbImage augment_task2_histeq(const RgbImage& img);

struct TrainResult {
    CompactCnn model;
    ConfusionMatrix confusion;        // on the test side of cfg.split
    std::vector<double> epoch_loss;   // mean batch loss per epoch
};

/// Trains a fresh default-architecture model on the train side of cfg.split.
/// Throws InvalidArgument when a class has no training images.
TrainResult train_classifier(const Dataset& dataset, const TrainConfig& cfg);

void save_weights(const CompactCnn& model, const std::filesystem::path& path);
CompactCnn load_weights(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_weights(const CompactCnn& model);
CompactCnn deserialize_weights(std::span<const std::uint8_t> bytes);

}  // namespace tracescope
