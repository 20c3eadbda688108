#include "tracescope/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include "tracescope/error.hpp"
#include "tracescope/parallel.hpp"
#include "tracescope/rng.hpp"

namespace tracescope {

void StepRecipe::validate() const {
    if (step_times.size() != step_levels.size())
        throw InvalidArgument("recipe needs one level per step time");
    if (!(duration > 0.0) || !(dt > 0.0)) throw InvalidArgument("recipe duration and dt must be > 0");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");
    for (std::size_t k = 0; k < step_times.size(); ++k) {
        if (!(step_times[k] > 0.0 && step_times[k] < duration))
            throw InvalidArgument("step times must lie inside (0, duration)");
        if (k > 0 && !(step_times[k] > step_times[k - 1]))
            throw InvalidArgument("step times must be strictly increasing");
        if (!(step_levels[k] >= 0.0 && step_levels[k] <= 1.0))
            throw InvalidArgument("step levels must lie in [0, 1]");
    }
    if (!(initial_level >= 0.0 && initial_level <= 1.0))
        throw InvalidArgument("initial level must lie in [0, 1]");
}

Signal generate_step_trace(const StepRecipe& recipe, std::string name) {
    recipe.validate();
    const auto n = static_cast<std::size_t>(std::llround(recipe.duration / recipe.dt));
    if (n == 0) throw InvalidArgument("recipe duration is shorter than one sample");
    std::vector<double> values(n, recipe.initial_level);
    for (std::size_t k = 0; k < recipe.step_times.size(); ++k) {
        const auto start = static_cast<std::size_t>(std::llround(recipe.step_times[k] / recipe.dt));
        for (std::size_t i = start; i < n; ++i) values[i] = recipe.step_levels[k];
    }
    if (recipe.noise_sigma > 0.0) {
        Rng rng(recipe.rng_seed);
        for (auto& v : values) v += recipe.noise_sigma * rng.normal();
    }
    return Signal(std::move(values), recipe.dt, std::move(name));
}

Signal induce_time_shift(const Signal& signal, double shift_seconds) {
    if (!(std::abs(shift_seconds) < signal.duration()))
        throw InvalidArgument("time shift must be shorter than the signal");
    const auto shift = static_cast<std::ptrdiff_t>(std::llround(shift_seconds / signal.dt()));
    const auto n = static_cast<std::ptrdiff_t>(signal.size());
    std::vector<double> out(signal.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t src = std::clamp<std::ptrdiff_t>(i - shift, 0, n - 1);
        out[static_cast<std::size_t>(i)] = signal[static_cast<std::size_t>(src)];
    }
    return signal.with_values(std::move(out));
}

Signal induce_amplitude_shift(const Signal& signal, const Baseline& baseline, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) throw InvalidArgument("amplitude factor must be > 0");
    if (baseline.values.size() != signal.size())
        throw ShapeError("baseline length does not match signal length");
    // Written as y + (f - 1)(y - z) so that f = 1 reproduces y bit for bit.
    std::vector<double> out(signal.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = signal[i] + (factor - 1.0) * (signal[i] - baseline.values[i]);
    return signal.with_values(std::move(out));
}

Signal apply_anomaly(const Signal& signal, const Baseline& baseline, const AnomalySpec& spec) {
    return spec.kind == AnomalyKind::TimeShift ? induce_time_shift(signal, spec.shift_seconds)
                                               : induce_amplitude_shift(signal, baseline, spec.factor);
}

void SynthConfig::validate() const {
    if (n_per_class < 4) throw InvalidArgument("n_per_class must be at least 4");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");
    if (!(dt > 0.0) || !(duration_seconds > 0.0)) throw InvalidArgument("dt and duration must be > 0");
    if (!(rise_time_seconds - time_jitter_seconds > 0.0) ||
        !(rise_time_seconds + time_jitter_seconds < fall_time_seconds - time_jitter_seconds) ||
        !(fall_time_seconds + time_jitter_seconds < duration_seconds))
        throw InvalidArgument("rise/fall times with jitter must be ordered inside the trace");
    if (!(level_min > 0.0 && level_min <= level_max && level_max <= 1.0))
        throw InvalidArgument("need 0 < level_min <= level_max <= 1");
    if (!(shift_seconds > 0.0)) throw InvalidArgument("shift_seconds must be > 0");
    for (const double f : amplitude_factors)
        if (!(f > 0.0) || f == 1.0) throw InvalidArgument("amplitude factors must be positive and != 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0) ||
        !(siamese_train_fraction > 0.0 && siamese_train_fraction < 1.0))
        throw InvalidArgument("train fractions must lie in (0, 1)");
}

StepRecipe random_recipe(const SynthConfig& cfg, std::uint64_t seed, std::size_t index) {
    Rng rng(mix_seed(seed, index));
    StepRecipe r;
    r.duration = cfg.duration_seconds;
    r.dt = cfg.dt;
    const double j = cfg.time_jitter_seconds;
    const double rise = cfg.rise_time_seconds + rng.uniform(-j, j);
    const double fall = cfg.fall_time_seconds + rng.uniform(-j, j);
    r.initial_level = rng.uniform(0.0, 0.1);
    const double high = rng.uniform(cfg.level_min, cfg.level_max);
    const double final_level = rng.uniform(0.0, 0.1);
    r.step_times = {rise, fall};
    r.step_levels = {high, final_level};
    r.noise_sigma = cfg.noise_sigma * (high - std::min(r.initial_level, final_level));
    r.rng_seed = rng.next_u64();
    return r;
}

namespace {

constexpr int kMaxRetries = 10;

struct LabeledWindow {
    std::string label;
    TimeWindow window;
    std::ptrdiff_t peak_index = -1;
    std::optional<int> group;
    std::optional<double> factor;
};

struct TraceWindows {
    std::vector<LabeledWindow> windows;
};

std::optional<PeakEvent> peak_near(std::span<const PeakEvent> peaks, double expected_index,
                                   StepPolarity polarity, double tolerance) {
    std::optional<PeakEvent> best;
    double best_gap = tolerance;
    for (const auto& p : peaks) {
        const double gap = std::abs(static_cast<double>(p.index) - expected_index);
        if (p.polarity == polarity && gap <= best_gap) {
            best = p;
            best_gap = gap;
        }
    }
    return best;
}

struct CleanTrace {
    Signal raw;
    PreprocessedSignal pre;
    PeakEvent rise;
    PeakEvent fall;
};

// A generated two-step trace whose rise and fall are both detected and are
// the only detected peaks. Retries with fresh sub-seeds.
CleanTrace clean_trace(const SynthConfig& synth, const PipelineConfig& pipeline,
                       std::uint64_t seed, std::size_t index) {
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
        const auto recipe =
            random_recipe(synth, mix_seed(seed, static_cast<std::uint64_t>(attempt)), index);
        Signal raw = generate_step_trace(recipe, "synthetic");
        auto pre = preprocess(raw, pipeline.preprocess());
        const double tol = 5.0;
        const auto rise = peak_near(pre.peaks, std::round(recipe.step_times[0] / recipe.dt),
                                    StepPolarity::Rising, tol);
        const auto fall = peak_near(pre.peaks, std::round(recipe.step_times[1] / recipe.dt),
                                    StepPolarity::Falling, tol);
        if (rise && fall && pre.peaks.size() == 2)
            return CleanTrace{std::move(raw), std::move(pre), *rise, *fall};
    }
    throw NumericalError("trace " + std::to_string(index) + ": step detection failed after " +
                         std::to_string(kMaxRetries) + " retries");
}

TraceWindows base_windows(const CleanTrace& t, const PipelineConfig& pipeline, std::uint64_t seed,
                          std::size_t index) {
    TraceWindows out;
    const double w = pipeline.window_seconds;
    out.windows.push_back({"H_L", extract_window(t.pre.residual, t.fall, w),
                           static_cast<std::ptrdiff_t>(t.fall.index), {}, {}});
    out.windows.push_back({"L_H", extract_window(t.pre.residual, t.rise, w),
                           static_cast<std::ptrdiff_t>(t.rise.index), {}, {}});
    auto oob = extract_oob_windows(t.pre.residual, t.pre.peaks, w, 1,
                                   mix_seed(seed ^ 0x00b0'00b0ULL, index));
    out.windows.push_back({"O_o_B", std::move(oob.front()), -1, {}, {}});
    return out;
}

void add_shift_windows(TraceWindows& out, const CleanTrace& t, const SynthConfig& synth,
                       const PipelineConfig& pipeline) {
    const double w = pipeline.window_seconds;
    const auto shift_samples = std::llround(synth.shift_seconds / synth.dt);
    struct Variant {
        const char* label;
        const PeakEvent* peak;
        double sign;
    };
    const Variant variants[] = {{"H_L_L", &t.fall, -1.0},
                                {"H_L_R", &t.fall, +1.0},
                                {"L_H_L", &t.rise, -1.0},
                                {"L_H_R", &t.rise, +1.0}};
    for (const auto& v : variants) {
        const Signal shifted = induce_time_shift(t.raw, v.sign * synth.shift_seconds);
        const auto pre = preprocess(shifted, pipeline.preprocess());
        const double expected =
            static_cast<double>(v.peak->index) + v.sign * static_cast<double>(shift_samples);
        const auto moved = peak_near(pre.peaks, expected, v.peak->polarity, 5.0);
        out.windows.push_back(
            {v.label,
             extract_window(pre.residual, static_cast<std::ptrdiff_t>(v.peak->index), w),
             moved ? static_cast<std::ptrdiff_t>(moved->index) : -1, {}, {}});
    }
}

std::string run_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run%04zu", index);
    return buf;
}

std::string format_factor(double f) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, f);
    return std::string(buf, ptr);
}

// Transforms and renders every window, then lays entries out class by class
// in trace order.
Dataset assemble(const std::vector<TraceWindows>& traces, std::vector<std::string> class_names,
                 const SynthConfig& synth, const PipelineConfig& pipeline,
                 Normalization normalization, std::uint64_t seed, int dataset_id,
                 bool split_data) {
    struct Item {
        std::size_t trace;
        const LabeledWindow* lw;
    };
    std::vector<Item> items;
    for (const auto& cls : class_names)
        for (std::size_t t = 0; t < traces.size(); ++t)
            for (const auto& lw : traces[t].windows)
                if (lw.label == cls) items.push_back({t, &lw});

    const auto grid = pipeline.scale_grid();
    std::vector<Scalogram> scalograms(items.size());
    parallel_for(items.size(), [&](std::size_t i) {
        scalograms[i] = cwt_transform(items[i].lw->window, grid, synth.dt);
    });

    double largest = 0.0;
    for (const auto& s : scalograms) largest = std::max(largest, s.max_abs());
    PipelineConfig render_cfg = pipeline;
    render_cfg.normalization = normalization;
    const auto amplitude = render_amplitude(render_cfg, largest);

    Dataset d;
    d.manifest.class_names = std::move(class_names);
    d.manifest.seed = seed;
    d.manifest.generator_version = kGeneratorVersion;
    d.manifest.dataset_id = dataset_id;
    d.manifest.render_amplitude = amplitude;
    d.images.resize(items.size());
    parallel_for(items.size(), [&](std::size_t i) {
        d.images[i] = render_scalogram(scalograms[i], pipeline.image_size, amplitude);
    });
    for (const auto& item : items) {
        DatasetEntry e;
        e.label = item.lw->label;
        e.path = e.label + "/" + run_id(item.trace) + "_" +
                 std::to_string(item.lw->window.center_index) + ".png";
        e.trace_index = item.trace;
        e.window_center = item.lw->window.center_index;
        e.peak_index = item.lw->peak_index;
        e.group = item.lw->group;
        e.factor = item.lw->factor;
        d.manifest.entries.push_back(std::move(e));
    }
    if (split_data) {
        const auto labels = d.labels();
        const auto classifier = stratified_split(labels, d.manifest.class_names.size(),
                                                 synth.train_fraction, mix_seed(seed, 0x7030));
        const auto siamese = stratified_split(labels, d.manifest.class_names.size(),
                                              synth.siamese_train_fraction, mix_seed(seed, 0x7525));
        for (std::size_t i = 0; i < labels.size(); ++i) {
            d.manifest.entries[i].split = classifier[i];
            d.manifest.entries[i].siamese_split = siamese[i];
        }
    }
    return d;
}

Dataset build_step_dataset(const SynthConfig& synth, const PipelineConfig& pipeline,
                           std::uint64_t seed, bool with_shifts) {
    synth.validate();
    pipeline.validate();
    std::vector<TraceWindows> traces(synth.n_per_class);
    parallel_for(synth.n_per_class, [&](std::size_t i) {
        const auto t = clean_trace(synth, pipeline, seed, i);
        traces[i] = base_windows(t, pipeline, seed, i);
        if (with_shifts) add_shift_windows(traces[i], t, synth, pipeline);
    });
    std::vector<std::string> classes{"H_L", "L_H", "O_o_B"};
    if (with_shifts) classes.insert(classes.end(), {"H_L_L", "H_L_R", "L_H_L", "L_H_R"});
    return assemble(traces, std::move(classes), synth, pipeline, pipeline.normalization, seed,
                    with_shifts ? 2 : 1, true);
}

}  // namespace

Dataset build_dataset1(const SynthConfig& synth, const PipelineConfig& pipeline,
                       std::uint64_t seed) {
    return build_step_dataset(synth, pipeline, seed, false);
}

Dataset build_dataset2(const SynthConfig& synth, const PipelineConfig& pipeline,
                       std::uint64_t seed) {
    return build_step_dataset(synth, pipeline, seed, true);
}

Signal dataset3_trace(const SynthConfig& synth, const PipelineConfig& pipeline,
                      std::uint64_t seed) {
    return clean_trace(synth, pipeline, mix_seed(seed, 0xd3), 0).raw;
}

Dataset build_dataset3(const SynthConfig& synth, const PipelineConfig& pipeline,
                       std::uint64_t seed) {
    synth.validate();
    pipeline.validate();
    const auto t = clean_trace(synth, pipeline, mix_seed(seed, 0xd3), 0);
    const Signal& y = t.pre.normalized;
    const Baseline& z = t.pre.baseline;

    std::vector<double> factors = synth.amplitude_factors;
    factors.push_back(1.0);
    std::sort(factors.begin(), factors.end());

    // The residual of each gain-modified signal, without renormalizing it:
    // renormalization would undo the gain change.
    std::vector<Signal> residuals;
    for (const double f : factors) {
        const Signal scaled = induce_amplitude_shift(y, z, f);
        residuals.push_back(subtract_baseline(scaled, estimate_baseline_als(scaled, pipeline.als)));
    }

    std::vector<TraceWindows> traces(1);
    std::vector<std::string> classes;
    const PeakEvent* peaks[] = {&t.rise, &t.fall};
    for (int g = 0; g < 2; ++g) {
        for (std::size_t k = 0; k < factors.size(); ++k) {
            const std::string label = "P" + std::to_string(g + 1) + "_x" + format_factor(factors[k]);
            classes.push_back(label);
            traces[0].windows.push_back(
                {label, extract_window(residuals[k], *peaks[g], pipeline.window_seconds),
                 static_cast<std::ptrdiff_t>(peaks[g]->index), g + 1, factors[k]});
        }
    }
    return assemble(traces, std::move(classes), synth, pipeline, synth.dataset3_normalization,
                    seed, 3, false);
}

}  // namespace tracescope
