#include <doctest.h>

#include <map>

#include "oracles.hpp"
#include "tracescope/error.hpp"
#include "tracescope/synth.hpp"

using namespace tracescope;

namespace {

SynthConfig small_synth(std::size_t n = 4) {
    SynthConfig s;
    s.n_per_class = n;
    return s;
}

}  // namespace

TEST_SUITE("synth") {
    TEST_CASE("noise-free traces") {
        StepRecipe flat;
        flat.initial_level = 0.3;
        const auto c = generate_step_trace(flat);
        for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == 0.3);

        StepRecipe step;
        step.step_times = {30.0};
        step.step_levels = {1.0};
        const auto h = generate_step_trace(step);
        CHECK(h[299] == 0.0);
        CHECK(h[300] == 1.0);
        CHECK(h.size() == 600);
    }

    TEST_CASE("plateau means lie within 3 sigma / sqrt(n)") {
        StepRecipe r;
        r.step_times = {20.0, 40.0};
        r.step_levels = {0.8, 0.2};
        r.initial_level = 0.05;
        r.noise_sigma = 0.01;
        r.rng_seed = 2;
        const auto s = generate_step_trace(r);
        const auto mean = [&](std::size_t a, std::size_t b) {
            double m = 0.0;
            for (std::size_t i = a; i < b; ++i) m += s[i];
            return m / static_cast<double>(b - a);
        };
        const double tol = 3.0 * 0.01 / std::sqrt(200.0);
        CHECK(std::abs(mean(0, 200) - 0.05) < tol);
        CHECK(std::abs(mean(200, 400) - 0.8) < tol);
        CHECK(std::abs(mean(400, 600) - 0.2) < tol);
        CHECK(generate_step_trace(r)[17] == s[17]);
    }

    TEST_CASE("recipe validation") {
        StepRecipe r;
        r.step_times = {10.0, 5.0};
        r.step_levels = {0.5, 0.2};
        CHECK_THROWS_AS(generate_step_trace(r), InvalidArgument);
        r.step_times = {10.0};
        CHECK_THROWS_AS(generate_step_trace(r), InvalidArgument);
    }

    TEST_CASE("time shift") {
        StepRecipe step;
        step.step_times = {30.0};
        step.step_levels = {1.0};
        const auto h = generate_step_trace(step);
        const auto same = induce_time_shift(h, 0.0);
        for (std::size_t i = 0; i < h.size(); ++i) CHECK(same[i] == h[i]);
        const auto moved = induce_time_shift(h, 2.0);
        CHECK(moved[319] == 0.0);
        CHECK(moved[320] == 1.0);

        step.noise_sigma = 0.05;
        const auto noisy = generate_step_trace(step);
        const auto back = induce_time_shift(induce_time_shift(noisy, 2.0), -2.0);
        for (std::size_t i = 20; i + 20 < noisy.size(); ++i) CHECK(back[i] == noisy[i]);
    }

    TEST_CASE("amplitude shift") {
        Rng rng(6);
        const Signal s(oracle::random_vector(rng, 300), 0.1);
        const Baseline zero{std::vector<double>(300, 0.0)};
        const auto one = induce_amplitude_shift(s, zero, 1.0);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(one[i] == s[i]);
        const auto big = induce_amplitude_shift(s, zero, 2.5);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(big[i] == doctest::Approx(2.5 * s[i]).epsilon(1e-15));
        CHECK_THROWS_AS(induce_amplitude_shift(s, zero, 0.0), InvalidArgument);
    }

    TEST_CASE("amplitude shift scales the residual step") {
        StepRecipe r;
        r.step_times = {30.0};
        r.step_levels = {0.6};
        r.initial_level = 0.1;
        r.noise_sigma = 0.002;
        r.rng_seed = 12;
        const auto y = generate_step_trace(r);
        const auto z = estimate_baseline_als(y, AlsConfig{});
        const auto res = subtract_baseline(y, z);
        const auto scaled = induce_amplitude_shift(y, z, 1.5);
        const auto res2 = subtract_baseline(scaled, estimate_baseline_als(scaled, AlsConfig{}));
        const auto peak = detect_peaks(res, PeakConfig{})[0];
        const auto peak2 = detect_peaks(res2, PeakConfig{})[0];
        CHECK(peak2.index == peak.index);
        CHECK(std::abs(peak2.amplitude - 1.5 * peak.amplitude) < 3.0 * 0.002 * 1.5);
    }

    TEST_CASE("dataset 1 sizes and determinism") {
        const auto d = build_dataset1(small_synth(), PipelineConfig{}, 7);
        CHECK(d.images.size() == 12);
        CHECK(d.manifest.count_per_class() == std::vector<std::size_t>{4, 4, 4});
        const auto again = build_dataset1(small_synth(), PipelineConfig{}, 7);
        CHECK(manifest_to_json(d.manifest) == manifest_to_json(again.manifest));
        for (std::size_t i = 0; i < d.images.size(); ++i) CHECK(encode_png(d.images[i]) == encode_png(again.images[i]));
        const auto other = build_dataset1(small_synth(), PipelineConfig{}, 8);
        CHECK(!(other.images == d.images));
        for (const auto& img : d.images) {
            CHECK(img.width() == 64);
            CHECK(img.height() == 64);
        }
    }

    TEST_CASE("dataset 1 default size") {
        const auto d = build_dataset1(SynthConfig{}, PipelineConfig{}, 42);
        CHECK(d.manifest.entries.size() == 168);
        CHECK(d.manifest.count_per_class() == std::vector<std::size_t>{56, 56, 56});
    }

    TEST_CASE("dataset 2 classes and shifted peak bookkeeping") {
        const auto d = build_dataset2(small_synth(6), PipelineConfig{}, 3);
        CHECK(d.manifest.class_names.size() == 7);
        CHECK(d.manifest.entries.size() == 42);
        std::map<std::pair<std::string, std::size_t>, const DatasetEntry*> by;
        for (const auto& e : d.manifest.entries) by[{e.label, e.trace_index}] = &e;
        for (std::size_t t = 0; t < 6; ++t) {
            const auto* lh = by.at({"L_H", t});
            const auto* lhr = by.at({"L_H_R", t});
            const auto* lhl = by.at({"L_H_L", t});
            const auto* hlr = by.at({"H_L_R", t});
            const auto* hl = by.at({"H_L", t});
            CHECK(std::abs(lhr->peak_index - (lh->peak_index + 20)) <= 1);
            CHECK(std::abs(lhl->peak_index - (lh->peak_index - 20)) <= 1);
            CHECK(std::abs(hlr->peak_index - (hl->peak_index + 20)) <= 1);
            CHECK(lhr->window_center == lh->window_center);
        }
    }

    TEST_CASE("shifted window re-centred on its own peak matches the parent class image") {
        SynthConfig sc;
        const PipelineConfig pc;
        const auto recipe = random_recipe(sc, 5, 0);
        const auto raw = generate_step_trace(recipe);
        const auto pre = preprocess(raw, pc.preprocess());
        const auto shifted = preprocess(induce_time_shift(raw, 2.0), pc.preprocess());
        REQUIRE(pre.peaks.size() == 2);
        REQUIRE(shifted.peaks.size() == 2);
        const auto grid = pc.scale_grid();
        const auto a = render_scalogram(cwt_transform(extract_window(pre.residual, pre.peaks[0], 10.0), grid, 0.1), 64);
        const auto b =
            render_scalogram(cwt_transform(extract_window(shifted.residual, shifted.peaks[0], 10.0), grid, 0.1), 64);
        double mean_abs = 0.0;
        for (std::size_t i = 0; i < a.pixels().size(); ++i) mean_abs += std::abs(a.pixels()[i] - b.pixels()[i]);
        mean_abs /= static_cast<double>(a.pixels().size());
        CHECK(mean_abs < 2.0);
    }

    TEST_CASE("dataset 3 layout") {
        const PipelineConfig pc;
        const SynthConfig sc;
        const auto d = build_dataset3(sc, pc, 42);
        CHECK(d.images.size() == 12);
        CHECK(d.manifest.class_names.size() == 12);
        std::map<int, int> per_group;
        for (const auto& e : d.manifest.entries) {
            REQUIRE(e.group.has_value());
            REQUIRE(e.factor.has_value());
            per_group[*e.group]++;
            CHECK(e.split == Split::Train);
        }
        CHECK(per_group[1] == 6);
        CHECK(per_group[2] == 6);
        REQUIRE(d.manifest.render_amplitude.has_value());

        // The factor-1 image is the untouched window of the source trace.
        const auto pre = preprocess(dataset3_trace(sc, pc, 42), pc.preprocess());
        for (std::size_t i = 0; i < d.manifest.entries.size(); ++i) {
            const auto& e = d.manifest.entries[i];
            if (*e.factor != 1.0) continue;
            const auto w = extract_window(pre.residual, e.window_center, pc.window_seconds);
            const auto img = render_scalogram(cwt_transform(w, pc.scale_grid(), sc.dt), pc.image_size,
                                              d.manifest.render_amplitude);
            CHECK(img == d.images[i]);
        }
    }

    TEST_CASE("config validation") {
        SynthConfig s;
        s.n_per_class = 2;
        CHECK_THROWS_AS(s.validate(), InvalidArgument);
        s = SynthConfig{};
        s.amplitude_factors = {1.0};
        CHECK_THROWS_AS(s.validate(), InvalidArgument);
        s = SynthConfig{};
        s.train_fraction = 1.0;
        CHECK_THROWS_AS(s.validate(), InvalidArgument);
    }
}
