#include <doctest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "oracles.hpp"
#include "tracescope/cli.hpp"
#include "tracescope/config.hpp"
#include "tracescope/error.hpp"
#include "tracescope/synth.hpp"

using namespace tracescope;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

// Small and fast: 8 traces per class, 16-pixel images, 2 epochs.
std::filesystem::path small_config(const std::filesystem::path& dir) {
    return write_text(dir / "config.json", R"({
  "pipeline": {"image_size": 16},
  "synth": {"n_per_class": 8},
  "train": {"epochs": 2},
  "eval": {"n_way": 3}
})");
}

void write_pair(const std::filesystem::path& dir, bool extra_variable) {
    SynthConfig sc;
    std::vector<Signal> ref;
    for (std::size_t v = 0; v < 2; ++v)
        ref.push_back(generate_step_trace(random_recipe(sc, 77, v), "var" + std::to_string(v)));
    save_trace_csv(MultivariateTrace(ref), dir / "ref.csv");
    auto query = ref;
    if (extra_variable)
        query.emplace_back(std::vector<double>(ref[0].values().begin(), ref[0].values().end()), ref[0].dt(), "extra");
    save_trace_csv(MultivariateTrace(query), dir / "query.csv");
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("help documents every flag") {
        const auto r = run({"--help"});
        CHECK(r.code == 0);
        for (const auto* flag : {"--config", "--seed", "--out", "--force", "--threads", "generate", "train", "nway",
                                 "scan", "table3"})
            CHECK(r.out.find(flag) != std::string::npos);
        const auto sub = run({"scan", "--help"});
        CHECK(sub.code == 0);
        for (const auto* flag : {"--weights", "--reference", "--query", "--threshold"})
            CHECK(sub.out.find(flag) != std::string::npos);
    }

    TEST_CASE("usage errors exit 2") {
        CHECK(run({}).code == 2);
        CHECK(run({"generate", "--dataset", "1", "--bogus"}).code == 2);
        CHECK(run({"frobnicate"}).code == 2);
        CHECK(run({"generate", "--dataset", "4", "--out", "x"}).code == 2);
        CHECK(run({"generate", "--dataset", "1"}).code == 2);
    }

    TEST_CASE("config parsing") {
        const RunConfig defaults;
        const auto back = parse_run_config(run_config_to_json(defaults));
        CHECK(run_config_to_json(back) == run_config_to_json(defaults));
        const auto c = parse_run_config(R"({"seed": 5, "pipeline": {"normalization": "global", "global_amplitude": 2.0}})");
        CHECK(c.seed == 5);
        CHECK(c.pipeline.normalization == Normalization::Global);
        CHECK(c.pipeline.global_amplitude == 2.0);
        CHECK_THROWS_AS(parse_run_config(R"({"sede": 5})"), FormatError);
        CHECK_THROWS_AS(parse_run_config(R"({"train": {"epoch": 5}})"), FormatError);
        CHECK_THROWS_AS(parse_run_config(R"({"train": {"epochs": "many"}})"), FormatError);
        CHECK_THROWS_AS(parse_run_config(R"({"eval": {"threshold": 2}})"), FormatError);
        CHECK_THROWS_AS(parse_run_config("{"), FormatError);
        const auto amp = c.train.for_task(TrainTask::Amplitude, 1);
        CHECK(amp.augmentation == Augmentation::None);
        CHECK(c.train.for_task(TrainTask::Siamese, 1).split == SplitKind::Siamese);
    }

    TEST_CASE("bad config file exits 2") {
        const auto dir = oracle::scratch_dir("cli_badconfig");
        write_text(dir / "c.json", R"({"unknown": 1})");
        CHECK(run({"--config", (dir / "c.json").string(), "generate", "--dataset", "3", "--out", (dir / "d").string()})
                  .code == 2);
    }

    TEST_CASE("generate respects non-empty output directories") {
        const auto dir = oracle::scratch_dir("cli_generate");
        const auto cfg = small_config(dir);
        const auto out = (dir / "d3").string();
        const auto r = run({"--config", cfg.string(), "generate", "--dataset", "3", "--out", out});
        CHECK(r.code == 0);
        CHECK(r.out.find("12 images") != std::string::npos);
        CHECK(run({"--config", cfg.string(), "generate", "--dataset", "3", "--out", out}).code == 2);
        write_text(dir / "d3" / "keep.txt", "mine");
        CHECK(run({"--config", cfg.string(), "--force", "generate", "--dataset", "3", "--out", out}).code == 0);
        CHECK(std::filesystem::exists(dir / "d3" / "keep.txt"));
        // Global flags are also accepted after the subcommand.
        CHECK(run({"generate", "--config", cfg.string(), "--dataset", "3", "--out", out, "--force"}).code == 0);
    }

    TEST_CASE("train, nway and table3 on small datasets") {
        const auto dir = oracle::scratch_dir("cli_pipeline");
        const auto cfg = small_config(dir).string();
        REQUIRE(run({"--config", cfg, "generate", "--dataset", "1", "--out", (dir / "d1").string()}).code == 0);
        const auto manifest = (dir / "d1" / "manifest.json").string();
        const auto weights = (dir / "w" / "model.bin").string();
        const auto t = run({"--config", cfg, "train", "--manifest", manifest, "--out", weights});
        CHECK(t.code == 0);
        CHECK(std::filesystem::exists(weights));
        CHECK(std::filesystem::exists(dir / "w" / "model.metrics.json"));
        CHECK(std::filesystem::exists(dir / "w" / "model.confusion.json"));
        CHECK(std::filesystem::exists(dir / "w" / "model.confusion.png"));

        const auto n = run({"--config", cfg, "nway", "--manifest", manifest, "--weights", weights, "--out",
                            (dir / "nway").string()});
        CHECK(n.code == 0);
        CHECK(std::regex_search(n.out, std::regex("accuracy: [01]\\.[0-9]{4}\\n")));
        CHECK(std::filesystem::exists(dir / "nway" / "nway_metrics.json"));
        CHECK(std::filesystem::exists(dir / "nway" / "nway_montage.png"));
        // 6 test images (2 per class): N = 7 cannot be satisfied.
        CHECK(run({"--config", cfg, "nway", "--manifest", manifest, "--weights", weights, "--n-way", "7", "--out",
                   (dir / "nway2").string()})
                  .code == 2);

        REQUIRE(run({"--config", cfg, "generate", "--dataset", "3", "--out", (dir / "d3").string()}).code == 0);
        const auto m3 = (dir / "d3" / "manifest.json").string();
        // A dataset-1 model has the wrong number of classes for dataset 3.
        CHECK(run({"--config", cfg, "table3", "--manifest", m3, "--weights", weights, "--out", (dir / "t3").string()})
                  .code == 2);
        const auto w3 = (dir / "w3.bin").string();
        write_text(dir / "fast3.json", R"({"pipeline": {"image_size": 16}, "train": {"amplitude_epochs": 3}})");
        CHECK(run({"--config", (dir / "fast3.json").string(), "train", "--manifest", m3, "--out", w3}).code == 0);
        const auto t3 = run({"--config", cfg, "table3", "--manifest", m3, "--weights", w3, "--out", (dir / "t3").string()});
        CHECK(t3.code == 0);
        CHECK(std::filesystem::exists(dir / "t3" / "table3.json"));
    }

    TEST_CASE("corrupt manifest exits 2") {
        const auto dir = oracle::scratch_dir("cli_corrupt");
        write_text(dir / "manifest.json", "{\"class_names\": [");
        const auto r = run({"train", "--manifest", (dir / "manifest.json").string(), "--out", (dir / "w.bin").string()});
        CHECK(r.code == 2);
        CHECK(!r.err.empty());
    }

    TEST_CASE("scan exit codes") {
        const auto dir = oracle::scratch_dir("cli_scan");
        save_weights(CompactCnn(CompactCnn::default_layers(3), {3, 64, 64}, 3, 1, {"H_L", "L_H", "O_o_B"}),
                     dir / "w.bin");
        write_pair(dir, false);
        const auto w = (dir / "w.bin").string();
        const auto ref = (dir / "ref.csv").string();
        const auto same = run({"scan", "--weights", w, "--reference", ref, "--query", ref, "--threshold", "0", "--out",
                               (dir / "s0").string()});
        CHECK(same.code == 0);
        CHECK(std::filesystem::exists(dir / "s0" / "report.json"));
        CHECK(std::filesystem::exists(dir / "s0" / "timeline_var0.png"));
        const auto all = run({"scan", "--weights", w, "--reference", ref, "--query", ref, "--threshold", "1", "--out",
                              (dir / "s1").string()});
        CHECK(all.code == 1);

        write_pair(dir, true);
        CHECK(run({"scan", "--weights", w, "--reference", ref, "--query", (dir / "query.csv").string(), "--out",
                   (dir / "s2").string()})
                  .code == 2);
        write_text(dir / "broken.csv", "time,var0\n0,1\n");
        CHECK(run({"scan", "--weights", w, "--reference", ref, "--query", (dir / "broken.csv").string(), "--out",
                   (dir / "s3").string()})
                  .code == 2);
        CHECK(run({"scan", "--weights", w, "--reference", ref, "--query", (dir / "missing.csv").string(), "--out",
                   (dir / "s4").string()})
                  .code == 2);
    }
}
