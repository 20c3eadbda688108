#include "tracescope/config.hpp"

#include <fstream>
#include <initializer_list>
#include <iterator>

#include <nlohmann/json.hpp>

#include "tracescope/error.hpp"

namespace tracescope {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string to_string(Normalization n) { return n == Normalization::PerImage ? "per_image" : "global"; }

Normalization parse_normalization(std::string_view s) {
    if (s == "per_image") return Normalization::PerImage;
    if (s == "global") return Normalization::Global;
    throw FormatError("unknown normalization '" + std::string(s) + "' (expected per_image or global)");
}

std::string to_string(TrainTask t) {
    switch (t) {
        case TrainTask::Classifier: return "classifier";
        case TrainTask::Siamese: return "siamese";
        case TrainTask::Amplitude: return "amplitude";
    }
    return "?";
}

TrainTask parse_train_task(std::string_view s) {
    if (s == "classifier") return TrainTask::Classifier;
    if (s == "siamese") return TrainTask::Siamese;
    if (s == "amplitude") return TrainTask::Amplitude;
    throw InvalidArgument("unknown task '" + std::string(s) + "' (expected classifier, siamese or amplitude)");
}

TrainConfig TrainSection::for_task(TrainTask task, std::uint64_t seed) const {
    TrainConfig t = base;
    t.rng_seed = seed;
    switch (task) {
        case TrainTask::Classifier:
            t.split = SplitKind::Classifier;
            t.augmentation = classifier_augmentation;
            break;
        case TrainTask::Siamese:
            t.split = SplitKind::Siamese;
            t.augmentation = siamese_augmentation;
            break;
        case TrainTask::Amplitude:
            t.split = SplitKind::Classifier;
            t.augmentation = amplitude_augmentation;
            t.epochs = amplitude_epochs;
            t.batch_size = amplitude_batch_size;
            break;
    }
    return t;
}

void RunConfig::validate() const {
    pipeline.validate();
    synth.validate();
    train.base.validate();
    for (const auto task : {TrainTask::Classifier, TrainTask::Siamese, TrainTask::Amplitude})
        train.for_task(task, seed).validate();
    eval.nway.validate();
    if (!(eval.threshold >= 0.0 && eval.threshold <= 1.0))
        throw InvalidArgument("eval.threshold must lie in [0, 1]");
    if (!(eval.probe_stride_seconds > 0.0)) throw InvalidArgument("eval.probe_stride_seconds must be > 0");
}

namespace {

void reject_unknown(const json& obj, std::string_view section,
                    std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw FormatError("config section '" + std::string(section) + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const auto a : allowed) ok = ok || key == a;
        if (!ok) throw FormatError("unknown config key '" + std::string(section) + "." + key + "'");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
    RunConfig cfg;
    try {
        const auto j = json::parse(json_text);
        reject_unknown(j, "", {"seed", "pipeline", "synth", "train", "eval"});
        read(j, "seed", cfg.seed);
        if (j.contains("pipeline")) {
            const auto& p = j.at("pipeline");
            reject_unknown(p, "pipeline",
                           {"als_lambda", "als_weight", "peak_min_height", "peak_min_spacing_seconds",
                            "window_seconds", "scale_min_seconds", "scale_max_seconds", "scale_count",
                            "image_size", "normalization", "global_amplitude"});
            auto& pc = cfg.pipeline;
            read(p, "als_lambda", pc.als.lambda);
            read(p, "als_weight", pc.als.weight);
            read(p, "peak_min_height", pc.peaks.min_height);
            read(p, "peak_min_spacing_seconds", pc.peaks.min_spacing_seconds);
            read(p, "window_seconds", pc.window_seconds);
            read(p, "scale_min_seconds", pc.scale_min_seconds);
            read(p, "scale_max_seconds", pc.scale_max_seconds);
            read(p, "scale_count", pc.scale_count);
            read(p, "image_size", pc.image_size);
            if (p.contains("normalization"))
                pc.normalization = parse_normalization(p.at("normalization").get<std::string>());
            if (p.contains("global_amplitude") && !p.at("global_amplitude").is_null())
                pc.global_amplitude = p.at("global_amplitude").get<double>();
        }
        if (j.contains("synth")) {
            const auto& s = j.at("synth");
            reject_unknown(s, "synth",
                           {"n_per_class", "noise_sigma", "duration_seconds", "dt", "rise_time_seconds",
                            "fall_time_seconds", "time_jitter_seconds", "level_min", "level_max",
                            "shift_seconds", "amplitude_factors", "train_fraction",
                            "siamese_train_fraction", "dataset3_normalization"});
            auto& sc = cfg.synth;
            read(s, "n_per_class", sc.n_per_class);
            read(s, "noise_sigma", sc.noise_sigma);
            read(s, "duration_seconds", sc.duration_seconds);
            read(s, "dt", sc.dt);
            read(s, "rise_time_seconds", sc.rise_time_seconds);
            read(s, "fall_time_seconds", sc.fall_time_seconds);
            read(s, "time_jitter_seconds", sc.time_jitter_seconds);
            read(s, "level_min", sc.level_min);
            read(s, "level_max", sc.level_max);
            read(s, "shift_seconds", sc.shift_seconds);
            read(s, "amplitude_factors", sc.amplitude_factors);
            read(s, "train_fraction", sc.train_fraction);
            read(s, "siamese_train_fraction", sc.siamese_train_fraction);
            if (s.contains("dataset3_normalization"))
                sc.dataset3_normalization =
                    parse_normalization(s.at("dataset3_normalization").get<std::string>());
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            reject_unknown(t, "train",
                           {"batch_size", "epochs", "learning_rate", "momentum", "augment_probability",
                            "classifier_augmentation", "siamese_augmentation", "amplitude_augmentation",
                            "amplitude_epochs", "amplitude_batch_size"});
            auto& tc = cfg.train;
            read(t, "batch_size", tc.base.batch_size);
            read(t, "epochs", tc.base.epochs);
            read(t, "learning_rate", tc.base.learning_rate);
            read(t, "momentum", tc.base.momentum);
            read(t, "augment_probability", tc.base.augment_probability);
            if (t.contains("classifier_augmentation"))
                tc.classifier_augmentation =
                    parse_augmentation(t.at("classifier_augmentation").get<std::string>());
            if (t.contains("siamese_augmentation"))
                tc.siamese_augmentation = parse_augmentation(t.at("siamese_augmentation").get<std::string>());
            if (t.contains("amplitude_augmentation"))
                tc.amplitude_augmentation =
                    parse_augmentation(t.at("amplitude_augmentation").get<std::string>());
            read(t, "amplitude_epochs", tc.amplitude_epochs);
            read(t, "amplitude_batch_size", tc.amplitude_batch_size);
        }
        if (j.contains("eval")) {
            const auto& e = j.at("eval");
            reject_unknown(e, "eval", {"n_way", "trials", "threshold", "probe_stride_seconds"});
            read(e, "n_way", cfg.eval.nway.n_way);
            read(e, "trials", cfg.eval.nway.trials);
            read(e, "threshold", cfg.eval.threshold);
            read(e, "probe_stride_seconds", cfg.eval.probe_stride_seconds);
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid config: ") + e.what());
    }
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open config " + path.string());
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& cfg) {
    ojson j;
    j["seed"] = cfg.seed;
    const auto& pc = cfg.pipeline;
    j["pipeline"] = {{"als_lambda", pc.als.lambda},
                     {"als_weight", pc.als.weight},
                     {"peak_min_height", pc.peaks.min_height},
                     {"peak_min_spacing_seconds", pc.peaks.min_spacing_seconds},
                     {"window_seconds", pc.window_seconds},
                     {"scale_min_seconds", pc.scale_min_seconds},
                     {"scale_max_seconds", pc.scale_max_seconds},
                     {"scale_count", pc.scale_count},
                     {"image_size", pc.image_size},
                     {"normalization", to_string(pc.normalization)},
                     {"global_amplitude", pc.global_amplitude ? ojson(*pc.global_amplitude) : ojson(nullptr)}};
    const auto& sc = cfg.synth;
    j["synth"] = {{"n_per_class", sc.n_per_class},
                  {"noise_sigma", sc.noise_sigma},
                  {"duration_seconds", sc.duration_seconds},
                  {"dt", sc.dt},
                  {"rise_time_seconds", sc.rise_time_seconds},
                  {"fall_time_seconds", sc.fall_time_seconds},
                  {"time_jitter_seconds", sc.time_jitter_seconds},
                  {"level_min", sc.level_min},
                  {"level_max", sc.level_max},
                  {"shift_seconds", sc.shift_seconds},
                  {"amplitude_factors", sc.amplitude_factors},
                  {"train_fraction", sc.train_fraction},
                  {"siamese_train_fraction", sc.siamese_train_fraction},
                  {"dataset3_normalization", to_string(sc.dataset3_normalization)}};
    const auto& tc = cfg.train;
    j["train"] = {{"batch_size", tc.base.batch_size},
                  {"epochs", tc.base.epochs},
                  {"learning_rate", tc.base.learning_rate},
                  {"momentum", tc.base.momentum},
                  {"augment_probability", tc.base.augment_probability},
                  {"classifier_augmentation", to_string(tc.classifier_augmentation)},
                  {"siamese_augmentation", to_string(tc.siamese_augmentation)},
                  {"amplitude_augmentation", to_string(tc.amplitude_augmentation)},
                  {"amplitude_epochs", tc.amplitude_epochs},
                  {"amplitude_batch_size", tc.amplitude_batch_size}};
    j["eval"] = {{"n_way", cfg.eval.nway.n_way},
                 {"trials", cfg.eval.nway.trials},
                 {"threshold", cfg.eval.threshold},
                 {"probe_stride_seconds", cfg.eval.probe_stride_seconds}};
    return j.dump(2) + "\n";
}

}  // namespace tracescope
