#include "tracescope/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tracescope/error.hpp"

namespace tracescope {

using ojson = nlohmann::ordered_json;

RgbImage render_confusion_matrix(const ConfusionMatrix& cm, int cell) {
    const int n = static_cast<int>(cm.num_classes());
    const int margin = 4;
    RgbImage img(n * cell + 2 * margin, n * cell + 2 * margin, 255);
    for (int t = 0; t < n; ++t) {
        const double row = static_cast<double>(cm.row_total(static_cast<std::size_t>(t)));
        for (int p = 0; p < n; ++p) {
            const auto c = cm.count(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
            const double frac = row > 0 ? static_cast<double>(c) / row : 0.0;
            const auto shade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - frac)));
            const int x0 = margin + p * cell;
            const int y0 = margin + t * cell;
            if (t == p)
                fill_rect(img, x0 + 1, y0 + 1, cell - 2, cell - 2, shade, 255, shade);
            else
                fill_rect(img, x0 + 1, y0 + 1, cell - 2, cell - 2, 255, shade, shade);
            const std::string label = std::to_string(c);
            const int scale = 2;
            const int tw = static_cast<int>(label.size()) * 4 * scale;
            draw_text(img, x0 + (cell - tw) / 2, y0 + (cell - 5 * scale) / 2, label, scale, 0, 0, 0);
        }
    }
    return img;
}

RgbImage render_nway_montage(const Dataset& dataset, const NWayResult& result,
                             std::size_t max_trials) {
    const std::size_t rows = std::min(max_trials, result.records.size());
    if (rows == 0 || dataset.images.empty()) return RgbImage(1, 1, 255);
    const int tile = dataset.images.front().width();
    const int th = dataset.images.front().height();
    const int pad = 4;
    const int cols = static_cast<int>(result.n_way) + 1;
    const int width = pad + (tile + pad) * cols + tile / 2;
    const int height = pad + static_cast<int>(rows) * (th + 2 * pad);
    RgbImage img(width, height, 255);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& trial = result.records[r];
        const int y = pad + static_cast<int>(r) * (th + 2 * pad);
        blit(img, dataset.images.at(trial.anchor), pad, y);
        for (std::size_t c = 0; c < trial.candidates.size(); ++c) {
            const int x = pad + tile / 2 + (tile + pad) * (static_cast<int>(c) + 1);
            blit(img, dataset.images.at(trial.candidates[c]), x, y);
            if (c == trial.target) fill_rect(img, x, y + th + 1, tile, 2, 0, 0, 255);
            if (c == trial.predicted) {
                const std::uint8_t g = trial.correct ? 170 : 0;
                const std::uint8_t red = trial.correct ? 0 : 220;
                fill_rect(img, x - 2, y - 2, tile + 4, 2, red, g, 0);
                fill_rect(img, x - 2, y + th, tile + 4, 1, red, g, 0);
                fill_rect(img, x - 2, y - 2, 2, th + 3, red, g, 0);
                fill_rect(img, x + tile, y - 2, 2, th + 3, red, g, 0);
            }
        }
    }
    return img;
}

namespace {

ojson confusion_json(const ConfusionMatrix& cm) {
    ojson counts = ojson::array();
    for (std::size_t t = 0; t < cm.num_classes(); ++t) {
        ojson row = ojson::array();
        for (std::size_t p = 0; p < cm.num_classes(); ++p) row.push_back(cm.count(t, p));
        counts.push_back(std::move(row));
    }
    return {{"class_names", cm.class_names()},
            {"counts", std::move(counts)},
            {"total", cm.total()},
            {"correct", cm.correct()},
            {"accuracy", cm.accuracy()}};
}

std::string checksum_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::string confusion_to_json(const ConfusionMatrix& cm) { return confusion_json(cm).dump(2) + "\n"; }

std::string train_metrics_json(const TrainResult& result, const TrainConfig& cfg,
                               const DatasetManifest& manifest) {
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    for (const auto& e : manifest.entries) (e.split_for(cfg.split) == Split::Train ? n_train : n_test)++;
    ojson j;
    j["split"] = cfg.split == SplitKind::Classifier ? "classifier" : "siamese";
    j["dataset_id"] = manifest.dataset_id;
    j["augmentation"] = to_string(cfg.augmentation);
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["momentum"] = cfg.momentum;
    j["seed"] = cfg.rng_seed;
    j["train_size"] = n_train;
    j["test_size"] = n_test;
    j["model_checksum"] = checksum_hex(result.model.checksum());
    j["accuracy"] = result.confusion.accuracy();
    j["confusion"] = confusion_json(result.confusion);
    j["epoch_loss"] = result.epoch_loss;
    return j.dump(2) + "\n";
}

std::string nway_metrics_json(const NWayResult& result, std::uint64_t model_checksum,
                              std::size_t test_size) {
    std::size_t correct = 0;
    ojson trials = ojson::array();
    for (const auto& t : result.records) {
        correct += t.correct ? 1 : 0;
        trials.push_back({{"anchor", t.anchor},
                          {"candidates", t.candidates},
                          {"scores", t.scores},
                          {"predicted", t.predicted},
                          {"target", t.target},
                          {"correct", t.correct}});
    }
    ojson j;
    j["n_way"] = result.n_way;
    j["test_size"] = test_size;
    j["trials"] = result.trials;
    j["correct"] = correct;
    j["accuracy"] = result.accuracy;
    j["model_checksum"] = checksum_hex(model_checksum);
    j["records"] = std::move(trials);
    return j.dump(2) + "\n";
}

std::string amplitude_table_json(const std::vector<AmplitudeScore>& rows) {
    ojson arr = ojson::array();
    for (const auto& r : rows)
        arr.push_back({{"group", r.group}, {"factor", r.factor}, {"label", r.label}, {"score", r.score}});
    return ojson{{"rows", std::move(arr)}}.dump(2) + "\n";
}

std::string amplitude_table_text(const std::vector<AmplitudeScore>& rows) {
    std::string out = "peak  factor  label            score\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%4d  %6.2f  %-15s  %.4f\n", r.group, r.factor, r.label.c_str(),
                      r.score);
        out += buf;
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace tracescope
