#include "tracescope/nn.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "tracescope/error.hpp"
#include "tracescope/parallel.hpp"

namespace tracescope {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::GlobalAvgPool: return "global_avg_pool";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
    }
    return "?";
}

LayerKind parse_layer_kind(std::string_view name) {
    for (const auto k : {LayerKind::Conv, LayerKind::Relu, LayerKind::MaxPool,
                         LayerKind::GlobalAvgPool, LayerKind::Flatten, LayerKind::Dense})
        if (to_string(k) == name) return k;
    throw FormatError("unknown layer kind '" + std::string(name) + "'");
}

std::string to_string(Augmentation a) {
    switch (a) {
        case Augmentation::None: return "none";
        case Augmentation::Task1: return "task1";
        case Augmentation::HistEq: return "histeq";
    }
    return "?";
}

Augmentation parse_augmentation(std::string_view name) {
    for (const auto a : {Augmentation::None, Augmentation::Task1, Augmentation::HistEq})
        if (to_string(a) == name) return a;
    throw FormatError("unknown augmentation '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Model construction

namespace {

std::size_t param_block_size(const LayerSpec& l, const TensorShape& in) {
    switch (l.kind) {
        case LayerKind::Conv:
            return static_cast<std::size_t>(l.out_channels) *
                       (static_cast<std::size_t>(in.channels) * l.kernel * l.kernel) +
                   static_cast<std::size_t>(l.out_channels);
        case LayerKind::Dense:
            return static_cast<std::size_t>(l.units) * in.size() + static_cast<std::size_t>(l.units);
        default: return 0;
    }
}

std::size_t fan_in(const LayerSpec& l, const TensorShape& in) {
    if (l.kind == LayerKind::Conv)
        return static_cast<std::size_t>(in.channels) * l.kernel * l.kernel;
    return in.size();
}

TensorShape output_shape(const LayerSpec& l, const TensorShape& in) {
    switch (l.kind) {
        case LayerKind::Conv: {
            if (l.out_channels <= 0 || l.kernel <= 0 || l.kernel % 2 == 0 || l.stride <= 0)
                throw InvalidArgument("conv layer needs positive channels, odd kernel, positive stride");
            const int pad = l.kernel / 2;
            return {l.out_channels, (in.height + 2 * pad - l.kernel) / l.stride + 1,
                    (in.width + 2 * pad - l.kernel) / l.stride + 1};
        }
        case LayerKind::Relu: return in;
        case LayerKind::MaxPool:
            if (l.pool <= 0) throw InvalidArgument("pool size must be positive");
            if (in.height < l.pool || in.width < l.pool)
                throw InvalidArgument("pooling window larger than feature map");
            return {in.channels, in.height / l.pool, in.width / l.pool};
        case LayerKind::GlobalAvgPool: return {in.channels, 1, 1};
        case LayerKind::Flatten: return {static_cast<int>(in.size()), 1, 1};
        case LayerKind::Dense:
            if (l.units <= 0) throw InvalidArgument("dense layer needs positive units");
            return {l.units, 1, 1};
    }
    return in;
}

}  // namespace

CompactCnn::CompactCnn(std::vector<LayerSpec> layers, TensorShape input, std::size_t num_classes,
                       std::uint64_t seed, std::vector<std::string> class_names)
    : layers_(std::move(layers)), input_(input), num_classes_(num_classes), seed_(seed) {
    if (layers_.empty() || layers_.back().kind != LayerKind::Dense)
        throw InvalidArgument("classifier must end in a dense layer");
    if (static_cast<std::size_t>(layers_.back().units) != num_classes_)
        throw ShapeError("final dense layer has " + std::to_string(layers_.back().units) +
                         " units but the model has " + std::to_string(num_classes_) + " classes");
    if (input_.size() == 0) throw InvalidArgument("input shape must be non-empty");
    shapes_.push_back(input_);
    for (const auto& l : layers_) {
        const auto& in = shapes_.back();
        if (l.kind == LayerKind::Dense && (in.height != 1 || in.width != 1))
            throw InvalidArgument("dense layer needs a pooled or flattened input");
        shapes_.push_back(output_shape(l, in));
    }
    Rng rng(seed_);
    params_.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::size_t n = param_block_size(layers_[i], shapes_[i]);
        if (n == 0) continue;
        const std::size_t biases = layers_[i].kind == LayerKind::Conv
                                       ? static_cast<std::size_t>(layers_[i].out_channels)
                                       : static_cast<std::size_t>(layers_[i].units);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in(layers_[i], shapes_[i])));
        params_[i].assign(n, 0.0f);
        for (std::size_t k = 0; k + biases < n; ++k)
            params_[i][k] = static_cast<float>(rng.uniform(-limit, limit));
    }
    set_class_names(std::move(class_names));
}

void CompactCnn::set_class_names(std::vector<std::string> names) {
    if (!names.empty() && names.size() != num_classes_)
        throw ShapeError("class name count does not match the number of classes");
    class_names_ = std::move(names);
}

std::vector<LayerSpec> CompactCnn::default_layers(std::size_t num_classes) {
    return {LayerSpec::conv(16), LayerSpec::relu(), LayerSpec::max_pool(2),
            LayerSpec::conv(32), LayerSpec::relu(), LayerSpec::max_pool(2),
            LayerSpec::conv(64), LayerSpec::relu(), LayerSpec::max_pool(2),
            LayerSpec::global_avg_pool(), LayerSpec::dense(static_cast<int>(num_classes))};
}

std::size_t CompactCnn::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

namespace {

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (const auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void append_le_float(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::vector<std::uint8_t> float_payload(const CompactCnn& m) {
    std::vector<std::uint8_t> out;
    out.reserve(m.parameter_count() * 4);
    for (const auto& block : m.parameters())
        for (const float v : block) append_le_float(out, v);
    return out;
}

}  // namespace

std::uint64_t CompactCnn::checksum() const noexcept { return fnv1a(float_payload(*this)); }

// ---------------------------------------------------------------------------
// Forward / backward

std::vector<double> image_to_tensor(const RgbImage& image) {
    const int h = image.height();
    const int w = image.width();
    std::vector<double> t(static_cast<std::size_t>(3 * h * w));
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                t[(static_cast<std::size_t>(c) * h + y) * w + x] =
                    (static_cast<double>(image.at(x, y, c)) - 127.5) / 127.5;
    return t;
}

namespace {

/// Parameters widened to double once per batch.
struct DoubleParams {
    std::vector<std::vector<double>> blocks;
    explicit DoubleParams(const CompactCnn& m) {
        blocks.reserve(m.parameters().size());
        for (const auto& b : m.parameters()) blocks.emplace_back(b.begin(), b.end());
    }
};

void im2col(const double* in, const TensorShape& s, const LayerSpec& l, const TensorShape& out,
            double* cols) {
    const int k = l.kernel;
    const int pad = k / 2;
    const std::size_t hw = static_cast<std::size_t>(out.height) * out.width;
    for (int c = 0; c < s.channels; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                double* row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
                for (int oy = 0; oy < out.height; ++oy) {
                    const int iy = oy * l.stride + ky - pad;
                    for (int ox = 0; ox < out.width; ++ox) {
                        const int ix = ox * l.stride + kx - pad;
                        row[static_cast<std::size_t>(oy) * out.width + ox] =
                            (iy >= 0 && iy < s.height && ix >= 0 && ix < s.width)
                                ? in[(static_cast<std::size_t>(c) * s.height + iy) * s.width + ix]
                                : 0.0;
                    }
                }
            }
}

void col2im(const double* cols, const TensorShape& s, const LayerSpec& l, const TensorShape& out,
            double* in_grad) {
    const int k = l.kernel;
    const int pad = k / 2;
    const std::size_t hw = static_cast<std::size_t>(out.height) * out.width;
    for (int c = 0; c < s.channels; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const double* row = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
                for (int oy = 0; oy < out.height; ++oy) {
                    const int iy = oy * l.stride + ky - pad;
                    if (iy < 0 || iy >= s.height) continue;
                    for (int ox = 0; ox < out.width; ++ox) {
                        const int ix = ox * l.stride + kx - pad;
                        if (ix < 0 || ix >= s.width) continue;
                        in_grad[(static_cast<std::size_t>(c) * s.height + iy) * s.width + ix] +=
                            row[static_cast<std::size_t>(oy) * out.width + ox];
                    }
                }
            }
}

/// Activations of one forward pass, kept for backpropagation.
struct Trace {
    std::vector<std::vector<double>> acts;   // acts[i] = input of layer i; acts.back() = logits
    std::vector<std::vector<double>> cols;   // im2col buffers for conv layers
    std::vector<std::vector<std::uint32_t>> argmax;  // max-pool winners
};

void run_forward(const CompactCnn& m, const DoubleParams& p, std::span<const double> input,
                 Trace& tr, bool keep) {
    const auto& layers = m.layers();
    const auto& shapes = m.layer_shapes();
    tr.acts.resize(layers.size() + 1);
    if (keep) {
        tr.cols.resize(layers.size());
        tr.argmax.resize(layers.size());
    }
    tr.acts[0].assign(input.begin(), input.end());
    std::vector<double> scratch;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const auto& in_s = shapes[i];
        const auto& out_s = shapes[i + 1];
        const auto& x = tr.acts[i];
        auto& y = tr.acts[i + 1];
        y.assign(out_s.size(), 0.0);
        switch (l.kind) {
            case LayerKind::Conv: {
                const std::size_t ckk = static_cast<std::size_t>(in_s.channels) * l.kernel * l.kernel;
                const std::size_t hw = static_cast<std::size_t>(out_s.height) * out_s.width;
                auto& cols = keep ? tr.cols[i] : scratch;
                cols.resize(ckk * hw);
                im2col(x.data(), in_s, l, out_s, cols.data());
                const auto& w = p.blocks[i];
                ConstMapRM W(w.data(), l.out_channels, static_cast<Eigen::Index>(ckk));
                ConstMapRM C(cols.data(), static_cast<Eigen::Index>(ckk), static_cast<Eigen::Index>(hw));
                MapRM Y(y.data(), l.out_channels, static_cast<Eigen::Index>(hw));
                Y.noalias() = W * C;
                const double* bias = w.data() + static_cast<std::size_t>(l.out_channels) * ckk;
                for (int o = 0; o < l.out_channels; ++o) Y.row(o).array() += bias[o];
                break;
            }
            case LayerKind::Relu:
                for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] > 0.0 ? x[k] : 0.0;
                break;
            case LayerKind::MaxPool: {
                std::vector<std::uint32_t>* am = keep ? &tr.argmax[i] : nullptr;
                if (am) am->assign(out_s.size(), 0);
                for (int c = 0; c < out_s.channels; ++c)
                    for (int oy = 0; oy < out_s.height; ++oy)
                        for (int ox = 0; ox < out_s.width; ++ox) {
                            double best = -std::numeric_limits<double>::infinity();
                            std::uint32_t best_idx = 0;
                            for (int dy = 0; dy < l.pool; ++dy)
                                for (int dx = 0; dx < l.pool; ++dx) {
                                    const auto idx = static_cast<std::uint32_t>(
                                        (static_cast<std::size_t>(c) * in_s.height + oy * l.pool + dy) *
                                            in_s.width + ox * l.pool + dx);
                                    if (x[idx] > best) {
                                        best = x[idx];
                                        best_idx = idx;
                                    }
                                }
                            const std::size_t o =
                                (static_cast<std::size_t>(c) * out_s.height + oy) * out_s.width + ox;
                            y[o] = best;
                            if (am) (*am)[o] = best_idx;
                        }
                break;
            }
            case LayerKind::GlobalAvgPool: {
                const std::size_t hw = static_cast<std::size_t>(in_s.height) * in_s.width;
                for (int c = 0; c < in_s.channels; ++c) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < hw; ++k) s += x[c * hw + k];
                    y[static_cast<std::size_t>(c)] = s / static_cast<double>(hw);
                }
                break;
            }
            case LayerKind::Flatten: y = x; break;
            case LayerKind::Dense: {
                const auto& w = p.blocks[i];
                const auto n_in = static_cast<Eigen::Index>(in_s.size());
                ConstMapRM W(w.data(), l.units, n_in);
                Eigen::Map<const Eigen::VectorXd> X(x.data(), n_in);
                Eigen::Map<Eigen::VectorXd> Y(y.data(), l.units);
                Eigen::Map<const Eigen::VectorXd> B(w.data() + static_cast<std::size_t>(l.units) * x.size(),
                                                    l.units);
                Y.noalias() = W * X;
                Y += B;
                break;
            }
        }
    }
}

ProbabilityVector softmax(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    ProbabilityVector p(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - m);
        sum += p[k];
    }
    for (auto& v : p) v /= sum;
    return p;
}

// Cross-entropy loss of one sample; accumulates d(loss)/d(params) into grads.
double run_backward(const CompactCnn& m, const DoubleParams& p, Trace& tr, std::size_t label,
                    std::vector<std::vector<double>>& grads) {
    const auto& layers = m.layers();
    const auto& shapes = m.layer_shapes();
    const auto probs = softmax(tr.acts.back());
    const double loss = -std::log(std::max(probs[label], std::numeric_limits<double>::min()));

    std::vector<double> g(probs.begin(), probs.end());
    g[label] -= 1.0;
    std::vector<double> g_in;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const auto& l = layers[i];
        const auto& in_s = shapes[i];
        const auto& out_s = shapes[i + 1];
        const auto& x = tr.acts[i];
        g_in.assign(in_s.size(), 0.0);
        switch (l.kind) {
            case LayerKind::Conv: {
                const std::size_t ckk = static_cast<std::size_t>(in_s.channels) * l.kernel * l.kernel;
                const std::size_t hw = static_cast<std::size_t>(out_s.height) * out_s.width;
                const auto& w = p.blocks[i];
                ConstMapRM W(w.data(), l.out_channels, static_cast<Eigen::Index>(ckk));
                ConstMapRM G(g.data(), l.out_channels, static_cast<Eigen::Index>(hw));
                ConstMapRM C(tr.cols[i].data(), static_cast<Eigen::Index>(ckk),
                             static_cast<Eigen::Index>(hw));
                MapRM dW(grads[i].data(), l.out_channels, static_cast<Eigen::Index>(ckk));
                dW.noalias() += G * C.transpose();
                double* db = grads[i].data() + static_cast<std::size_t>(l.out_channels) * ckk;
                for (int o = 0; o < l.out_channels; ++o) db[o] += G.row(o).sum();
                if (i > 0) {
                    std::vector<double> dcols(ckk * hw);
                    MapRM DC(dcols.data(), static_cast<Eigen::Index>(ckk), static_cast<Eigen::Index>(hw));
                    DC.noalias() = W.transpose() * G;
                    col2im(dcols.data(), in_s, l, out_s, g_in.data());
                }
                break;
            }
            case LayerKind::Relu:
                for (std::size_t k = 0; k < x.size(); ++k) g_in[k] = x[k] > 0.0 ? g[k] : 0.0;
                break;
            case LayerKind::MaxPool:
                for (std::size_t o = 0; o < g.size(); ++o) g_in[tr.argmax[i][o]] += g[o];
                break;
            case LayerKind::GlobalAvgPool: {
                const std::size_t hw = static_cast<std::size_t>(in_s.height) * in_s.width;
                for (int c = 0; c < in_s.channels; ++c) {
                    const double v = g[static_cast<std::size_t>(c)] / static_cast<double>(hw);
                    for (std::size_t k = 0; k < hw; ++k) g_in[c * hw + k] = v;
                }
                break;
            }
            case LayerKind::Flatten: g_in = g; break;
            case LayerKind::Dense: {
                const auto& w = p.blocks[i];
                const auto n_in = static_cast<Eigen::Index>(in_s.size());
                ConstMapRM W(w.data(), l.units, n_in);
                Eigen::Map<const Eigen::VectorXd> G(g.data(), l.units);
                Eigen::Map<const Eigen::VectorXd> X(x.data(), n_in);
                MapRM dW(grads[i].data(), l.units, n_in);
                dW.noalias() += G * X.transpose();
                Eigen::Map<Eigen::VectorXd> dB(grads[i].data() + static_cast<std::size_t>(l.units) * in_s.size(),
                                               l.units);
                dB += G;
                Eigen::Map<Eigen::VectorXd> GI(g_in.data(), n_in);
                GI.noalias() = W.transpose() * G;
                break;
            }
        }
        std::swap(g, g_in);
    }
    return loss;
}

void check_input(const CompactCnn& model, std::size_t n) {
    if (n != model.input_shape().size())
        throw ShapeError("input has " + std::to_string(n) + " values, model expects " +
                         std::to_string(model.input_shape().size()));
}

}  // namespace

ProbabilityVector forward_tensor(const CompactCnn& model, std::span<const double> input) {
    check_input(model, input.size());
    const DoubleParams p(model);
    Trace tr;
    run_forward(model, p, input, tr, false);
    return softmax(tr.acts.back());
}

ProbabilityVector forward(const CompactCnn& model, const RgbImage& image) {
    const auto s = model.input_shape();
    if (s.channels != 3 || image.width() != s.width || image.height() != s.height)
        throw ShapeError("image is " + std::to_string(image.width()) + "x" +
                         std::to_string(image.height()) + ", model expects " +
                         std::to_string(s.width) + "x" + std::to_string(s.height));
    const auto t = image_to_tensor(image);
    return forward_tensor(model, t);
}

std::size_t predict(const CompactCnn& model, const RgbImage& image) {
    const auto p = forward(model, image);
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

LossGradient loss_and_gradient(const CompactCnn& model,
                               std::span<const std::vector<double>> inputs,
                               std::span<const std::size_t> labels) {
    if (inputs.size() != labels.size() || inputs.empty())
        throw ShapeError("batch needs one label per input and at least one sample");
    for (const auto& in : inputs) check_input(model, in.size());
    for (const auto lab : labels)
        if (lab >= model.num_classes()) throw InvalidArgument("label out of range");

    const DoubleParams p(model);
    const std::size_t n = inputs.size();
    std::vector<std::vector<std::vector<double>>> per_sample(n);
    std::vector<double> losses(n, 0.0);
    parallel_for(n, [&](std::size_t s) {
        auto& grads = per_sample[s];
        grads.resize(model.parameters().size());
        for (std::size_t i = 0; i < grads.size(); ++i)
            grads[i].assign(model.parameters()[i].size(), 0.0);
        Trace tr;
        run_forward(model, p, inputs[s], tr, true);
        losses[s] = run_backward(model, p, tr, labels[s], grads);
    });

    LossGradient out;
    out.gradients.resize(model.parameters().size());
    for (std::size_t i = 0; i < out.gradients.size(); ++i)
        out.gradients[i].assign(model.parameters()[i].size(), 0.0);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        out.loss += losses[s];
        for (std::size_t i = 0; i < out.gradients.size(); ++i)
            for (std::size_t k = 0; k < out.gradients[i].size(); ++k)
                out.gradients[i][k] += per_sample[s][i][k];
    }
    out.loss *= scale;
    for (auto& block : out.gradients)
        for (auto& v : block) v *= scale;
    return out;
}

double batch_loss(const CompactCnn& model, std::span<const std::vector<double>> inputs,
                  std::span<const std::size_t> labels) {
    if (inputs.size() != labels.size() || inputs.empty())
        throw ShapeError("batch needs one label per input and at least one sample");
    const DoubleParams p(model);
    double total = 0.0;
    Trace tr;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        check_input(model, inputs[s].size());
        run_forward(model, p, inputs[s], tr, false);
        const auto probs = softmax(tr.acts.back());
        total += -std::log(std::max(probs[labels[s]], std::numeric_limits<double>::min()));
    }
    return total / static_cast<double>(inputs.size());
}

// ---------------------------------------------------------------------------
// Optimizer

void TrainConfig::validate() const {
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw InvalidArgument("learning_rate must be finite and >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
    if (!(augment_probability >= 0.0 && augment_probability <= 1.0))
        throw InvalidArgument("augment_probability must lie in [0, 1]");
}

SgdMomentum::SgdMomentum(const CompactCnn& model) {
    velocity_.reserve(model.parameters().size());
    for (const auto& b : model.parameters()) velocity_.emplace_back(b.size(), 0.0);
}

void SgdMomentum::step(CompactCnn& model, const std::vector<std::vector<double>>& gradients,
                       double learning_rate, double momentum) {
    auto& params = model.parameters();
    if (gradients.size() != params.size()) throw ShapeError("gradient blocks do not match model");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (gradients[i].size() != params[i].size()) throw ShapeError("gradient block size mismatch");
        for (std::size_t k = 0; k < params[i].size(); ++k) {
            velocity_[i][k] = momentum * velocity_[i][k] - learning_rate * gradients[i][k];
            params[i][k] = static_cast<float>(static_cast<double>(params[i][k]) + velocity_[i][k]);
        }
    }
}

double backward_and_step(CompactCnn& model, SgdMomentum& optimizer,
                         std::span<const RgbImage> images, std::span<const std::size_t> labels,
                         const TrainConfig& cfg) {
    std::vector<std::vector<double>> inputs;
    inputs.reserve(images.size());
    for (const auto& img : images) {
        const auto s = model.input_shape();
        if (img.width() != s.width || img.height() != s.height)
            throw ShapeError("training image does not match model input size");
        inputs.push_back(image_to_tensor(img));
    }
    auto lg = loss_and_gradient(model, inputs, labels);
    if (!std::isfinite(lg.loss))
        throw NumericalError("training loss is not finite; lower the learning rate");
    optimizer.step(model, lg.gradients, cfg.learning_rate, cfg.momentum);
    return lg.loss;
}

// ---------------------------------------------------------------------------
// Augmentation

RgbImage rotate90(const RgbImage& img, int quarter_turns) {
    quarter_turns = ((quarter_turns % 4) + 4) % 4;
    if (quarter_turns == 0) return img;
    const int w = img.width();
    const int h = img.height();
    const bool swap = quarter_turns % 2 == 1;
    RgbImage out(swap ? h : w, swap ? w : h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int nx = x, ny = y;
            switch (quarter_turns) {
                case 1: nx = h - 1 - y; ny = x; break;          // clockwise
                case 2: nx = w - 1 - x; ny = h - 1 - y; break;
                case 3: nx = y; ny = w - 1 - x; break;
            }
            for (int c = 0; c < 3; ++c) out.at(nx, ny, c) = img.at(x, y, c);
        }
    return out;
}

RgbImage flip_horizontal(const RgbImage& img) {
    RgbImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) out.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
    return out;
}

RgbImage flip_vertical(const RgbImage& img) {
    RgbImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) out.at(x, img.height() - 1 - y, c) = img.at(x, y, c);
    return out;
}

RgbImage adjust_contrast(const RgbImage& img, double factor) {
    RgbImage out = img;
    for (auto& v : out.pixels()) {
        const double s = 127.5 + factor * (static_cast<double>(v) - 127.5);
        v = static_cast<std::uint8_t>(std::clamp(std::lround(s), 0L, 255L));
    }
    return out;
}

RgbImage pixel_dropout(const RgbImage& img, double p, Rng& rng) {
    RgbImage out = img;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (rng.bernoulli(p)) out.set(x, y, 128, 128, 128);
    return out;
}

RgbImage augment_task1(const RgbImage& img, Rng& rng, double probability) {
    if (!rng.bernoulli(probability)) return img;
    switch (rng.below(5)) {
        case 0: return rotate90(img, 1 + static_cast<int>(rng.below(3)));
        case 1: return flip_horizontal(img);
        case 2: return flip_vertical(img);
        case 3: return adjust_contrast(img, rng.uniform(0.8, 1.2));
        default: return pixel_dropout(img, 0.05, rng);
    }
}

RgbImage augment_task2_histeq(const RgbImage& img) {
    RgbImage out = img;
    const std::size_t n = static_cast<std::size_t>(img.width()) * static_cast<std::size_t>(img.height());
    const auto px = img.pixels();
    for (int c = 0; c < 3; ++c) {
        std::size_t hist[256] = {};
        for (std::size_t i = 0; i < n; ++i) ++hist[px[i * 3 + static_cast<std::size_t>(c)]];
        std::uint8_t lut[256];
        std::size_t cdf = 0;
        for (int v = 0; v < 256; ++v) {
            cdf += hist[v];
            lut[v] = static_cast<std::uint8_t>((255 * cdf) / n);
        }
        auto dst = out.pixels();
        for (std::size_t i = 0; i < n; ++i) {
            auto& v = dst[i * 3 + static_cast<std::size_t>(c)];
            v = lut[v];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

RgbImage augment(const RgbImage& img, const TrainConfig& cfg, Rng& rng) {
    switch (cfg.augmentation) {
        case Augmentation::None: return img;
        case Augmentation::Task1: return augment_task1(img, rng, cfg.augment_probability);
        case Augmentation::HistEq:
            return rng.bernoulli(cfg.augment_probability) ? augment_task2_histeq(img) : img;
    }
    return img;
}

}  // namespace

TrainResult train_classifier(const Dataset& dataset, const TrainConfig& cfg) {
    cfg.validate();
    const auto& names = dataset.manifest.class_names;
    if (names.size() < 2) throw InvalidArgument("training needs at least two classes");
    if (dataset.images.empty() || dataset.images.size() != dataset.manifest.entries.size())
        throw ShapeError("dataset images do not match its manifest");
    const auto labels = dataset.labels();
    const auto train_idx = dataset.indices_in(cfg.split, Split::Train);
    std::vector<std::size_t> per_class(names.size(), 0);
    for (const auto i : train_idx) ++per_class[labels[i]];
    for (std::size_t c = 0; c < names.size(); ++c)
        if (per_class[c] == 0) throw InvalidArgument("class '" + names[c] + "' has no training images");

    const int size = dataset.images.front().width();
    for (const auto& img : dataset.images)
        if (img.width() != size || img.height() != size)
            throw ShapeError("dataset images must all be square and the same size");

    TrainResult result{CompactCnn(CompactCnn::default_layers(names.size()), {3, size, size},
                                  names.size(), mix_seed(cfg.rng_seed, 0xC0FFEE), names),
                       ConfusionMatrix(names), {}};
    SgdMomentum opt(result.model);
    std::vector<RgbImage> batch_images;
    std::vector<std::size_t> batch_labels;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::uint64_t epoch_seed = mix_seed(cfg.rng_seed, 1000 + epoch);
        auto order = train_idx;
        Rng(epoch_seed).shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch_images.clear();
            batch_labels.clear();
            for (std::size_t k = start; k < end; ++k) {
                Rng rng(mix_seed(epoch_seed, k));
                batch_images.push_back(augment(dataset.images[order[k]], cfg, rng));
                batch_labels.push_back(labels[order[k]]);
            }
            loss_sum += backward_and_step(result.model, opt, batch_images, batch_labels, cfg);
            ++batches;
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    }

    for (const auto i : dataset.indices_in(cfg.split, Split::Test))
        result.confusion.add(labels[i], predict(result.model, dataset.images[i]));
    return result;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kMagic[8] = {'T', 'S', 'C', 'N', 'N', 'W', 'T', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint64_t get_le(std::span<const std::uint8_t> b, std::size_t off, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[off + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const CompactCnn& model) {
    nlohmann::ordered_json header;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const auto& l : model.layers()) {
        nlohmann::ordered_json j;
        j["kind"] = to_string(l.kind);
        if (l.kind == LayerKind::Conv) {
            j["out_channels"] = l.out_channels;
            j["kernel"] = l.kernel;
            j["stride"] = l.stride;
        } else if (l.kind == LayerKind::MaxPool) {
            j["pool"] = l.pool;
        } else if (l.kind == LayerKind::Dense) {
            j["units"] = l.units;
        }
        layers.push_back(std::move(j));
    }
    const auto in = model.input_shape();
    header["architecture"] = std::move(layers);
    header["input"] = {in.channels, in.height, in.width};
    header["num_classes"] = model.num_classes();
    header["seed"] = model.seed();
    header["class_names"] = model.class_names();
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(kMagic, kMagic + 8);
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    const auto payload = float_payload(model);
    out.insert(out.end(), payload.begin(), payload.end());
    put_u64(out, fnv1a(payload));
    return out;
}

CompactCnn deserialize_weights(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw FormatError("not a tracescope weights file");
    const auto version = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
    if (version != kFormatVersion)
        throw FormatError("unsupported weights format version " + std::to_string(version));
    const auto header_len = static_cast<std::size_t>(get_le(bytes, 12, 4));
    if (16 + header_len > bytes.size()) throw ChecksumError("weights file truncated inside header");

    std::vector<LayerSpec> layers;
    TensorShape input;
    std::size_t num_classes = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> names;
    try {
        const auto header = nlohmann::json::parse(bytes.begin() + 16,
                                                  bytes.begin() + static_cast<std::ptrdiff_t>(16 + header_len));
        for (const auto& j : header.at("architecture")) {
            LayerSpec l;
            l.kind = parse_layer_kind(j.at("kind").get<std::string>());
            l.out_channels = j.value("out_channels", 0);
            l.kernel = j.value("kernel", 3);
            l.stride = j.value("stride", 1);
            l.pool = j.value("pool", 2);
            l.units = j.value("units", 0);
            layers.push_back(l);
        }
        const auto dims = header.at("input").get<std::vector<int>>();
        if (dims.size() != 3) throw FormatError("weights header: input must have 3 dimensions");
        input = {dims[0], dims[1], dims[2]};
        num_classes = header.at("num_classes").get<std::size_t>();
        seed = header.at("seed").get<std::uint64_t>();
        names = header.value("class_names", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("weights header: ") + e.what());
    }

    CompactCnn model(std::move(layers), input, num_classes, seed, std::move(names));
    const std::size_t payload_len = model.parameter_count() * 4;
    const std::size_t payload_off = 16 + header_len;
    if (bytes.size() != payload_off + payload_len + 8)
        throw ChecksumError("weights payload length mismatch (truncated or corrupt file)");
    const auto payload = bytes.subspan(payload_off, payload_len);
    if (fnv1a(payload) != get_le(bytes, payload_off + payload_len, 8))
        throw ChecksumError("weights checksum mismatch");
    std::size_t off = 0;
    for (auto& block : model.parameters())
        for (auto& v : block) {
            const auto bits = static_cast<std::uint32_t>(get_le(payload, off, 4));
            std::memcpy(&v, &bits, 4);
            off += 4;
        }
    return model;
}

void save_weights(const CompactCnn& model, const std::filesystem::path& path) {
    const auto bytes = serialize_weights(model);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed for " + path.string());
}

CompactCnn load_weights(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                          std::istreambuf_iterator<char>());
    return deserialize_weights(bytes);
}

}  // namespace tracescope
