#include "tracescope/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include <nlohmann/json.hpp>

#include "tracescope/error.hpp"
#include "tracescope/rng.hpp"

namespace tracescope {

using ojson = nlohmann::ordered_json;

std::string to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw FormatError("unknown split '" + std::string(s) + "'");
}

std::size_t DatasetManifest::class_index(std::string_view label) const {
    const auto it = std::find(class_names.begin(), class_names.end(), label);
    if (it == class_names.end()) throw FormatError("unknown class label '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - class_names.begin());
}

void DatasetManifest::validate() const {
    if (class_names.empty()) throw FormatError("manifest has no classes");
    const std::set<std::string> unique(class_names.begin(), class_names.end());
    if (unique.size() != class_names.size()) throw FormatError("manifest class names are not distinct");
    for (const auto& e : entries) {
        (void)class_index(e.label);
        if (e.path.empty()) throw FormatError("manifest entry without a path");
    }
}

std::vector<std::size_t> DatasetManifest::count_per_class() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const auto& e : entries) ++counts[class_index(e.label)];
    return counts;
}

std::vector<std::size_t> Dataset::labels() const {
    std::vector<std::size_t> out;
    out.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) out.push_back(manifest.class_index(e.label));
    return out;
}

std::vector<std::size_t> Dataset::indices_in(SplitKind kind, Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        if (manifest.entries[i].split_for(kind) == split) out.push_back(i);
    return out;
}

std::string manifest_to_json(const DatasetManifest& m) {
    ojson j;
    j["generator_version"] = m.generator_version;
    j["dataset_id"] = m.dataset_id;
    j["seed"] = m.seed;
    j["class_names"] = m.class_names;
    if (m.render_amplitude) j["render_amplitude"] = *m.render_amplitude;
    ojson entries = ojson::array();
    for (const auto& e : m.entries) {
        ojson je;
        je["path"] = e.path;
        je["label"] = e.label;
        je["split"] = to_string(e.split);
        je["siamese_split"] = to_string(e.siamese_split);
        je["trace_index"] = e.trace_index;
        je["window_center"] = e.window_center;
        je["peak_index"] = e.peak_index;
        if (e.group) je["group"] = *e.group;
        if (e.factor) je["factor"] = *e.factor;
        entries.push_back(std::move(je));
    }
    j["entries"] = std::move(entries);
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
    DatasetManifest m;
    try {
        const auto j = ojson::parse(text);
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.generator_version = j.value("generator_version", std::string{});
        m.dataset_id = j.value("dataset_id", 0);
        if (j.contains("render_amplitude")) m.render_amplitude = j.at("render_amplitude").get<double>();
        for (const auto& je : j.at("entries")) {
            DatasetEntry e;
            e.path = je.at("path").get<std::string>();
            e.label = je.at("label").get<std::string>();
            e.split = parse_split(je.at("split").get<std::string>());
            e.siamese_split = je.contains("siamese_split")
                                  ? parse_split(je.at("siamese_split").get<std::string>())
                                  : e.split;
            e.trace_index = je.value("trace_index", std::size_t{0});
            e.window_center = je.value("window_center", std::ptrdiff_t{0});
            e.peak_index = je.value("peak_index", std::ptrdiff_t{-1});
            if (je.contains("group")) e.group = je.at("group").get<int>();
            if (je.contains("factor")) e.factor = je.at("factor").get<double>();
            m.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("invalid manifest: ") + ex.what());
    }
    m.validate();
    return m;
}

std::filesystem::path write_dataset(const Dataset& dataset, const std::filesystem::path& root) {
    if (dataset.images.size() != dataset.manifest.entries.size())
        throw ShapeError("dataset has " + std::to_string(dataset.images.size()) + " images for " +
                         std::to_string(dataset.manifest.entries.size()) + " entries");
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
    for (std::size_t i = 0; i < dataset.images.size(); ++i) {
        const auto path = root / dataset.manifest.entries[i].path;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create " + path.parent_path().string());
        write_png(dataset.images[i], path);
    }
    const auto manifest_path = root / "manifest.json";
    std::ofstream f(manifest_path, std::ios::binary);
    if (!f) throw IoError("cannot write " + manifest_path.string());
    f << manifest_to_json(dataset.manifest);
    if (!f) throw IoError("write failed for " + manifest_path.string());
    return manifest_path;
}

DatasetManifest read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream f(manifest_path, std::ios::binary);
    if (!f) throw IoError("cannot open " + manifest_path.string());
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return manifest_from_json(text);
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    Dataset d;
    d.manifest = read_manifest(manifest_path);
    const auto root = manifest_path.parent_path();
    d.images.reserve(d.manifest.entries.size());
    for (const auto& e : d.manifest.entries) d.images.push_back(read_png(root / e.path));
    return d;
}

std::vector<Split> stratified_split(const std::vector<std::size_t>& labels, std::size_t num_classes,
                                    double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidArgument("train fraction must lie in (0, 1)");
    std::vector<Split> out(labels.size(), Split::Train);
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) members.push_back(i);
        if (members.size() < 2) continue;
        Rng rng(mix_seed(seed, c));
        rng.shuffle(members.begin(), members.end());
        auto n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(members.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
        for (std::size_t k = n_train; k < members.size(); ++k) out[members[k]] = Split::Test;
    }
    return out;
}

}  // namespace tracescope
