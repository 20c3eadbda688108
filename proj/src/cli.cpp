#include "tracescope/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "tracescope/config.hpp"
#include "tracescope/error.hpp"
#include "tracescope/eval.hpp"
#include "tracescope/parallel.hpp"
#include "tracescope/report.hpp"
#include "tracescope/rng.hpp"
#include "tracescope/siamese.hpp"
#include "tracescope/synth.hpp"

namespace tracescope::cli {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool force = false;
    unsigned threads = 0;
};

struct GenerateOptions {
    int dataset = 1;
};
struct TrainOptions {
    std::string manifest;
    std::string task = "auto";
};
struct NWayOptions {
    std::string manifest;
    std::string weights;
    std::string split = "siamese";
    std::optional<std::size_t> n_way;
    std::optional<std::size_t> trials;
};
struct ScanOptions {
    std::string weights;
    std::string reference;
    std::string query;
    std::optional<double> threshold;
};
struct Table3Options {
    std::string manifest;
    std::string weights;
};

RunConfig resolve_config(const GlobalOptions& g) {
    RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

SplitKind parse_kind(const std::string& s) {
    if (s == "classifier") return SplitKind::Classifier;
    if (s == "siamese") return SplitKind::Siamese;
    throw InvalidArgument("unknown split/task '" + s + "'");
}

fs::path require_out(const GlobalOptions& g) {
    if (g.out.empty()) throw InvalidArgument("--out is required");
    return fs::path(g.out);
}

void prepare_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string format4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

int cmd_generate(const GlobalOptions& g, const GenerateOptions& o, std::ostream& out) {
    const RunConfig cfg = resolve_config(g);
    const fs::path dir = require_out(g);
    Dataset ds;
    switch (o.dataset) {
        case 1: ds = build_dataset1(cfg.synth, cfg.pipeline, cfg.seed); break;
        case 2: ds = build_dataset2(cfg.synth, cfg.pipeline, cfg.seed); break;
        case 3: ds = build_dataset3(cfg.synth, cfg.pipeline, cfg.seed); break;
        default: throw InvalidArgument("--dataset must be 1, 2 or 3");
    }
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!g.force)
            throw InvalidArgument("output directory " + dir.string() +
                                  " is not empty (use --force to overwrite)");
        // Only remove what this command writes.
        fs::remove(dir / "manifest.json");
        for (const auto& name : ds.manifest.class_names) fs::remove_all(dir / name);
    }
    prepare_out_dir(dir);
    const fs::path manifest = write_dataset(ds, dir);
    const auto counts = ds.manifest.count_per_class();
    out << "dataset " << o.dataset << ": " << ds.images.size() << " images\n";
    for (std::size_t c = 0; c < counts.size(); ++c)
        out << "  " << ds.manifest.class_names[c] << ": " << counts[c] << "\n";
    out << "manifest: " << manifest.string() << "\n";
    return kExitClean;
}

int cmd_train(const GlobalOptions& g, const TrainOptions& o, std::ostream& out) {
    const RunConfig cfg = resolve_config(g);
    const fs::path weights = require_out(g);
    const Dataset ds = load_dataset(o.manifest);
    const TrainTask task = o.task != "auto"             ? parse_train_task(o.task)
                           : ds.manifest.dataset_id == 3 ? TrainTask::Amplitude
                                                         : TrainTask::Classifier;
    const TrainConfig tc = cfg.train.for_task(task, cfg.seed);
    const TrainResult result = train_classifier(ds, tc);

    if (weights.has_parent_path()) prepare_out_dir(weights.parent_path());
    save_weights(result.model, weights);
    fs::path stem = weights;
    stem.replace_extension();
    const fs::path metrics = stem.string() + ".metrics.json";
    write_text_file(metrics, train_metrics_json(result, tc, ds.manifest));
    write_text_file(stem.string() + ".confusion.json", confusion_to_json(result.confusion));
    if (result.confusion.total() > 0)
        write_png(render_confusion_matrix(result.confusion), stem.string() + ".confusion.png");

    out << "final loss: " << format4(result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()) << "\n";
    if (result.confusion.total() > 0)
        out << "test accuracy: " << format4(result.confusion.accuracy()) << " (" << result.confusion.correct()
            << "/" << result.confusion.total() << ")\n";
    else
        out << "test accuracy: n/a (empty test split)\n";
    out << "weights: " << weights.string() << "\nmetrics: " << metrics.string() << "\n";
    return kExitClean;
}

int cmd_nway(const GlobalOptions& g, const NWayOptions& o, std::ostream& out) {
    const RunConfig cfg = resolve_config(g);
    const fs::path dir = require_out(g);
    const SplitKind kind = parse_kind(o.split);
    const Dataset ds = load_dataset(o.manifest);
    const CompactCnn model = load_weights(o.weights);
    NWayConfig nc = cfg.eval.nway;
    if (o.n_way) nc.n_way = *o.n_way;
    if (o.trials) nc.trials = *o.trials;
    nc.rng_seed = mix_seed(cfg.seed, 0x4E57);
    nc.validate();
    const std::size_t test_size = ds.indices_in(kind, Split::Test).size();
    const NWayResult result = n_way_validation(model, ds, kind, nc);

    prepare_out_dir(dir);
    const fs::path metrics = dir / "nway_metrics.json";
    write_text_file(metrics, nway_metrics_json(result, model.checksum(), test_size));
    write_png(render_nway_montage(ds, result), dir / "nway_montage.png");
    out << "N=" << result.n_way << " trials=" << result.trials << " test_size=" << test_size << "\n";
    out << "accuracy: " << format4(result.accuracy) << "\n";
    out << "metrics: " << metrics.string() << "\n";
    return kExitClean;
}

int cmd_scan(const GlobalOptions& g, const ScanOptions& o, std::ostream& out) {
    const RunConfig cfg = resolve_config(g);
    const fs::path dir = require_out(g);
    const CompactCnn model = load_weights(o.weights);
    const MultivariateTrace reference = load_trace_csv(o.reference);
    const MultivariateTrace query = load_trace_csv(o.query);
    ScanConfig sc{cfg.pipeline, o.threshold.value_or(cfg.eval.threshold), cfg.eval.probe_stride_seconds};
    if (!(sc.threshold >= 0.0 && sc.threshold <= 1.0)) throw InvalidArgument("--threshold must lie in [0, 1]");
    ScanReport report{sc.threshold, model.checksum(), scan_trace(model, reference, query, sc)};

    prepare_out_dir(dir);
    const fs::path path = report_scan(report, dir);
    const std::size_t flagged = count_anomalies(report.scans);
    for (const auto& s : report.scans) {
        std::size_t n = 0;
        for (const auto& v : s.verdicts) n += v.is_anomaly ? 1 : 0;
        out << s.variable << ": " << s.verdicts.size() << " windows, " << n << " flagged";
        if (!s.warning.empty()) out << " (" << s.warning << ")";
        out << "\n";
        for (const auto& v : s.verdicts)
            if (v.is_anomaly)
                out << "  t=" << format4(v.window_center_seconds) << " s score=" << format4(v.score) << " "
                    << v.anchor_class << " -> " << v.query_class << "\n";
    }
    out << "report: " << path.string() << "\n";
    return flagged > 0 ? kExitAnomaly : kExitClean;
}

int cmd_table3(const GlobalOptions& g, const Table3Options& o, std::ostream& out) {
    (void)resolve_config(g);
    const fs::path dir = require_out(g);
    const Dataset ds = load_dataset(o.manifest);
    const CompactCnn model = load_weights(o.weights);
    const auto rows = amplitude_similarity_table(model, ds);
    prepare_out_dir(dir);
    const fs::path path = dir / "table3.json";
    write_text_file(path, amplitude_table_json(rows));
    out << amplitude_table_text(rows) << "table: " << path.string() << "\n";
    return kExitClean;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Scalogram-based anomaly detection for equipment sensor traces"};
    app.name("tracescope");
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config, "JSON run configuration (defaults for every missing key)")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed overriding the config value");
    app.add_option("--out", g.out,
                   "Output: dataset directory (generate), weights file (train), or report directory "
                   "(nway, scan, table3)");
    app.add_flag("--force", g.force, "Allow generate to overwrite a non-empty output directory");
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency); results do not depend on it");

    GenerateOptions go;
    auto* gen = app.add_subcommand("generate", "Generate a synthetic scalogram dataset");
    gen->add_option("--dataset", go.dataset, "Dataset id: 1, 2 or 3")->required()->check(CLI::IsMember({1, 2, 3}));

    TrainOptions to;
    auto* train = app.add_subcommand("train", "Train a classifier and write weights plus metrics");
    train->add_option("--manifest", to.manifest, "Dataset manifest.json")->required()->check(CLI::ExistingFile);
    train->add_option("--task", to.task,
                      "classifier (70/30 split, geometric augmentation), siamese (75/25 split, histogram "
                      "equalization), amplitude (dataset 3, no augmentation) or auto (amplitude for "
                      "dataset 3, else classifier)")
        ->check(CLI::IsMember({"auto", "classifier", "siamese", "amplitude"}));

    NWayOptions no;
    auto* nway = app.add_subcommand("nway", "N-way one-shot validation on the test split");
    nway->add_option("--manifest", no.manifest, "Dataset manifest.json")->required()->check(CLI::ExistingFile);
    nway->add_option("--weights", no.weights, "Trained weights file")->required()->check(CLI::ExistingFile);
    nway->add_option("--split", no.split, "Which split's test side to use: siamese or classifier")
        ->check(CLI::IsMember({"classifier", "siamese"}));
    nway->add_option("--n-way", no.n_way, "Candidates per trial (overrides eval.n_way)");
    nway->add_option("--trials", no.trials, "Number of trials; 0 = coupon-collector default");

    ScanOptions so;
    auto* scan = app.add_subcommand("scan", "Compare a query trace against a reference trace");
    scan->add_option("--weights", so.weights, "Trained weights file")->required()->check(CLI::ExistingFile);
    scan->add_option("--reference", so.reference, "Reference trace CSV")->required()->check(CLI::ExistingFile);
    scan->add_option("--query", so.query, "Query trace CSV")->required()->check(CLI::ExistingFile);
    scan->add_option("--threshold", so.threshold, "Similarity below this flags an anomaly (overrides eval.threshold)");

    Table3Options t3;
    auto* table3 = app.add_subcommand("table3", "Amplitude similarity table on a dataset-3 manifest");
    table3->add_option("--manifest", t3.manifest, "Dataset-3 manifest.json")->required()->check(CLI::ExistingFile);
    table3->add_option("--weights", t3.weights, "Weights trained on dataset 3")->required()->check(CLI::ExistingFile);

    for (auto* sub : {gen, train, nway, scan, table3}) sub->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitClean;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitClean;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        err << "run 'tracescope --help' for usage\n";
        return kExitError;
    }

    try {
        set_thread_count(g.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : g.threads);
        if (gen->parsed()) return cmd_generate(g, go, out);
        if (train->parsed()) return cmd_train(g, to, out);
        if (nway->parsed()) return cmd_nway(g, no, out);
        if (scan->parsed()) return cmd_scan(g, so, out);
        return cmd_table3(g, t3, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace tracescope::cli
