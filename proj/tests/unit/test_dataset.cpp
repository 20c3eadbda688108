#include <doctest.h>

#include <fstream>
#include <set>

#include "oracles.hpp"
#include "tracescope/dataset.hpp"
#include "tracescope/error.hpp"
#include "tracescope/image.hpp"
#include "tracescope/synth.hpp"

using namespace tracescope;

TEST_SUITE("dataset") {
    TEST_CASE("png round trip and fixed encoding") {
        Rng rng(1);
        RgbImage img(17, 9);
        for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
        const auto bytes = encode_png(img);
        CHECK(decode_png(bytes) == img);
        CHECK(encode_png(img) == bytes);
        const std::vector<std::uint8_t> junk{1, 2, 3, 4};
        CHECK_THROWS_AS(decode_png(junk), FormatError);
    }

    TEST_CASE("stratified split is per class and deterministic") {
        std::vector<std::size_t> labels;
        for (std::size_t c = 0; c < 3; ++c)
            for (int i = 0; i < 56; ++i) labels.push_back(c);
        const auto s = stratified_split(labels, 3, 0.7, 9);
        CHECK(s == stratified_split(labels, 3, 0.7, 9));
        std::vector<int> train(3, 0);
        for (std::size_t i = 0; i < labels.size(); ++i) train[labels[i]] += s[i] == Split::Train;
        CHECK(train == std::vector<int>{39, 39, 39});
        const auto q = stratified_split(labels, 3, 0.75, 9);
        std::size_t test = 0;
        for (const auto v : q) test += v == Split::Test;
        CHECK(test == 42);
        CHECK_THROWS_AS(stratified_split(labels, 3, 1.0, 9), InvalidArgument);
    }

    TEST_CASE("split sizes of the default datasets") {
        SynthConfig sc;
        sc.n_per_class = 56;
        const auto d = build_dataset1(sc, PipelineConfig{}, 42);
        CHECK(d.indices_in(SplitKind::Classifier, Split::Test).size() == 51);
        CHECK(d.indices_in(SplitKind::Siamese, Split::Test).size() == 42);
        const auto tr = d.indices_in(SplitKind::Classifier, Split::Train);
        const auto te = d.indices_in(SplitKind::Classifier, Split::Test);
        std::set<std::size_t> all(tr.begin(), tr.end());
        for (const auto i : te) CHECK(all.insert(i).second);
        CHECK(all.size() == 168);
    }

    TEST_CASE("manifest json round trip and validation") {
        SynthConfig sc;
        sc.n_per_class = 4;
        const auto d = build_dataset2(sc, PipelineConfig{}, 2);
        const auto text = manifest_to_json(d.manifest);
        CHECK(manifest_from_json(text) == d.manifest);
        CHECK_THROWS_AS(manifest_from_json("{"), FormatError);
        CHECK_THROWS_AS(manifest_from_json("{\"class_names\": []}"), FormatError);
        auto bad = d.manifest;
        bad.entries[0].label = "nope";
        CHECK_THROWS_AS(manifest_from_json(manifest_to_json(bad)), FormatError);
    }

    TEST_CASE("write and load dataset") {
        const auto dir = oracle::scratch_dir("dataset_io");
        SynthConfig sc;
        sc.n_per_class = 4;
        const auto d = build_dataset1(sc, PipelineConfig{}, 5);
        const auto manifest = write_dataset(d, dir);
        const auto back = load_dataset(manifest);
        CHECK(back.manifest == d.manifest);
        CHECK(back.images == d.images);
        std::filesystem::remove(dir / d.manifest.entries[0].path);
        CHECK_THROWS_AS(load_dataset(manifest), IoError);
        std::ofstream(dir / "bad.json") << "not json";
        CHECK_THROWS_AS(read_manifest(dir / "bad.json"), FormatError);
    }
}
